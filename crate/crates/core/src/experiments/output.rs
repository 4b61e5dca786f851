//! CSV artifacts. Each file starts with `# key: value` metadata lines followed
//! by a header row that is written even when there are no records.

use std::io::Write;

use serde::Serialize;

use super::{CurvePoint, ExperimentConfig, RatioMode, RatioPoint, RhoCalibration, TableResult, TheoremCheck};
use crate::error::Result;
use crate::vef::VefTableRow;

#[derive(Debug, Clone, Serialize)]
pub struct SolveRecord {
    pub experiment: String,
    pub matrix_tag: String,
    pub n: usize,
    pub c_o: f64,
    pub c_1: f64,
    pub c_2: f64,
    pub seed: u64,
    pub kind: String,
    pub schur_mode: String,
    pub epsilon: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_relres: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioRecord {
    pub experiment: String,
    pub matrix_tag: String,
    pub n: usize,
    pub c_o: f64,
    pub c_1: f64,
    pub c_2: f64,
    pub seed: u64,
    pub mode: String,
    pub epsilon: f64,
    pub d_iterations: usize,
    pub l_iterations: usize,
    pub d_converged: bool,
    pub l_converged: bool,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveRecord {
    pub kind: String,
    pub lambda: f64,
    pub abs_plus: f64,
    pub abs_minus: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremRecord {
    pub kind: String,
    pub n2: usize,
    pub max_residual: f64,
    pub multiset_distance: f64,
    pub hausdorff: f64,
    pub kernel_a12: usize,
    pub kernel_a21: usize,
    pub complete_basis: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VefRecord {
    pub elements: usize,
    pub sigma_a: f64,
    pub kind: String,
    pub lumped: bool,
    pub symmetrized: bool,
    pub iterations: usize,
    pub converged: bool,
}

/// Writes metadata comment lines and then the records with a header.
pub fn write_csv<W: Write, R: Serialize>(
    mut out: W,
    metadata: &[(String, String)],
    header: &[&str],
    records: &[R],
) -> Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const SOLVE_HEADER: [&str; 13] = [
    "experiment",
    "matrix_tag",
    "n",
    "c_o",
    "c_1",
    "c_2",
    "seed",
    "kind",
    "schur_mode",
    "epsilon",
    "iterations",
    "converged",
    "final_relres",
];

pub const RATIO_HEADER: [&str; 14] = [
    "experiment",
    "matrix_tag",
    "n",
    "c_o",
    "c_1",
    "c_2",
    "seed",
    "mode",
    "epsilon",
    "d_iterations",
    "l_iterations",
    "d_converged",
    "l_converged",
    "ratio",
];

pub const CURVE_HEADER: [&str; 4] = ["kind", "lambda", "abs_plus", "abs_minus"];

pub const THEOREM_HEADER: [&str; 9] = [
    "kind",
    "n2",
    "max_residual",
    "multiset_distance",
    "hausdorff",
    "kernel_a12",
    "kernel_a21",
    "complete_basis",
    "passed",
];

fn solver_metadata(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    vec![
        ("solver".into(), "left-preconditioned GMRES, no restarts".into()),
        ("rhs".into(), "ones".into()),
        ("x0".into(), "zero".into()),
        ("rel_tol".into(), format!("{:e}", cfg.rel_tol)),
        (
            "max_iters".into(),
            cfg.max_iters.map_or_else(|| "system dimension".into(), |m| m.to_string()),
        ),
    ]
}

fn rho_metadata(cal: &RhoCalibration) -> Vec<(String, String)> {
    vec![
        ("rho".into(), format!("{:e}", cal.rho)),
        ("rho_method".into(), cal.method.label().into()),
        ("min_abs_eig_M".into(), format!("{:e}", cal.target)),
        ("min_abs_eig_N".into(), format!("{:e}", cal.achieved)),
    ]
}

pub fn table_records(result: &TableResult) -> Vec<SolveRecord> {
    let mut out = Vec::new();
    for row in &result.rows {
        let c = &row.config;
        for cell in &row.cells {
            out.push(SolveRecord {
                experiment: "table".into(),
                matrix_tag: row.matrix_tag.label().into(),
                n: c.n,
                c_o: c.c_o,
                c_1: c.c_1,
                c_2: c.c_2,
                seed: c.seed,
                kind: cell.kind.label().into(),
                schur_mode: cell.kind.schur_label().into(),
                epsilon: None,
                iterations: cell.solve.iterations,
                converged: cell.solve.converged,
                final_relres: cell.solve.final_relres,
            });
        }
    }
    out
}

pub fn write_table<W: Write>(out: W, cfg: &ExperimentConfig, result: &TableResult) -> Result<()> {
    let mut meta = solver_metadata(cfg);
    if let Some(cal) = &result.calibration {
        meta.extend(rho_metadata(cal));
    }
    write_csv(out, &meta, &SOLVE_HEADER, &table_records(result))
}

pub fn ratio_records(cfg: &ExperimentConfig, mode: RatioMode, points: &[RatioPoint]) -> Vec<RatioRecord> {
    points
        .iter()
        .map(|p| RatioRecord {
            experiment: "ratio-sweep".into(),
            matrix_tag: "N".into(),
            n: cfg.n,
            c_o: cfg.c_o,
            c_1: cfg.c_1,
            c_2: cfg.c_2,
            seed: cfg.seed,
            mode: mode.label().into(),
            epsilon: p.epsilon,
            d_iterations: p.diagonal.iterations,
            l_iterations: p.lower.iterations,
            d_converged: p.diagonal.converged,
            l_converged: p.lower.converged,
            ratio: p.ratio(),
        })
        .collect()
}

pub fn write_ratio_sweep<W: Write>(out: W, cfg: &ExperimentConfig, mode: RatioMode, points: &[RatioPoint]) -> Result<()> {
    let mut meta = solver_metadata(cfg);
    meta.push(("rho".into(), "0".into()));
    if mode == RatioMode::CrossSaddle {
        meta.push(("A22".into(), "zero".into()));
    }
    if mode != RatioMode::Star {
        meta.push((
            "error_matrix_seed".into(),
            cfg.seed.wrapping_add(super::ERROR_MATRIX_SEED_OFFSET).to_string(),
        ));
    }
    write_csv(out, &meta, &RATIO_HEADER, &ratio_records(cfg, mode, points))
}

pub fn write_curves<W: Write>(out: W, points: &[CurvePoint]) -> Result<()> {
    let recs: Vec<CurveRecord> = points
        .iter()
        .map(|p| CurveRecord {
            kind: p.kind.label().into(),
            lambda: p.lambda,
            abs_plus: p.abs_plus,
            abs_minus: p.abs_minus,
        })
        .collect();
    write_csv(out, &[], &CURVE_HEADER, &recs)
}

pub fn write_theorem<W: Write>(out: W, seed: u64, tol: f64, checks: &[TheoremCheck]) -> Result<()> {
    let recs: Vec<TheoremRecord> = checks
        .iter()
        .map(|c| TheoremRecord {
            kind: c.kind.label().into(),
            n2: c.n2,
            max_residual: c.max_residual,
            multiset_distance: c.multiset_distance,
            hausdorff: c.hausdorff,
            kernel_a12: c.kernel_a12,
            kernel_a21: c.kernel_a21,
            complete_basis: c.complete_basis,
            passed: c.passed,
        })
        .collect();
    let meta = vec![("seed".into(), seed.to_string()), ("tolerance".into(), format!("{tol:e}"))];
    write_csv(out, &meta, &THEOREM_HEADER, &recs)
}

pub const VEF_HEADER: [&str; 7] = ["elements", "sigma_a", "kind", "lumped", "symmetrized", "iterations", "converged"];

pub fn vef_records(rows: &[VefTableRow]) -> Vec<VefRecord> {
    rows.iter()
        .map(|r| VefRecord {
            elements: r.elements,
            sigma_a: r.sigma_a,
            kind: r.kind.label().into(),
            lumped: r.kind.is_lumped(),
            symmetrized: r.symmetrized,
            iterations: r.iterations,
            converged: r.converged,
        })
        .collect()
}

/// `metadata` should describe the transport setup; the mesh convention is added here.
pub fn write_vef<W: Write>(out: W, metadata: &[(String, String)], rows: &[VefTableRow]) -> Result<()> {
    let mut meta = metadata.to_vec();
    meta.push(("N".into(), "H1 nodes = 2 * elements + 1".into()));
    write_csv(out, &meta, &VEF_HEADER, &vef_records(rows))
}
