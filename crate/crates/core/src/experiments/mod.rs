//! Random-matrix studies of block preconditioners: iteration tables for the
//! M/N pair, approximate Schur complement sweeps, eigenvalue-map curves and
//! spectral verification runs. Every driver is sequential and deterministic
//! for a fixed configuration.

mod mn;
pub mod output;

use std::fmt;

use crate::block::{make_preconditioner, BlockSystem, PrecondTag, PreconditionerKind};
use crate::dense::{DenseMatrix, UniformStream};
use crate::error::{Error, Result};
use crate::krylov::{gmres, SolveResult};
use crate::spectral::{map_generalized_to_preconditioned, synthesize_prescribed, verify_prediction};

pub use mn::{
    calibrate_rho, calibrate_rho_bisection, gen_mn, MnBlocks, MnPair, RhoCalibration, RhoMethod, RHO_MATCH_TOL,
};

/// Offset between the matrix seed and the seed of the perturbation `E` in `S×`.
pub const ERROR_MATRIX_SEED_OFFSET: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Size of each block.
    pub n: usize,
    pub c_o: f64,
    pub c_1: f64,
    pub c_2: f64,
    pub seed: u64,
    pub rel_tol: f64,
    /// GMRES iteration cap; `None` means the system dimension.
    pub max_iters: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 250,
            c_o: 1.0,
            c_1: 1.0,
            c_2: 1.0,
            seed: 1,
            rel_tol: 1e-16,
            max_iters: None,
        }
    }
}

impl ExperimentConfig {
    pub fn with_constants(mut self, c_o: f64, c_1: f64, c_2: f64) -> Self {
        self.c_o = c_o;
        self.c_1 = c_1;
        self.c_2 = c_2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Precondition("block size must be positive".into()));
        }
        for (name, c) in [("c_o", self.c_o), ("c_1", self.c_1), ("c_2", self.c_2)] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Precondition(format!("{name} must be positive and finite, got {c}")));
            }
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Precondition(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        Ok(())
    }

    /// `c_o/c_1/c_2` as printed in tables.
    pub fn constants_label(&self) -> String {
        format!("{}/{}/{}", self.c_o, self.c_1, self.c_2)
    }
}

/// `S* = A22 - (1 - ε) A21 A11⁻¹ A12`.
pub fn approx_schur_star(sys: &BlockSystem, eps_star: f64) -> Result<DenseMatrix> {
    if !(eps_star >= 0.0 && eps_star.is_finite()) {
        return Err(Error::Precondition(format!("ε* must be a finite non-negative value, got {eps_star}")));
    }
    if eps_star == 0.0 {
        return Ok(sys.assemble_schur().clone());
    }
    if eps_star == 1.0 {
        return Ok(sys.a22().clone());
    }
    sys.a22().add_scaled(-(1.0 - eps_star), &sys.coupling())
}

/// Mean absolute entry of the monolithic matrix.
pub fn mean_abs_entry(sys: &BlockSystem) -> f64 {
    let total: f64 = [sys.a11(), sys.a12(), sys.a21(), sys.a22()]
        .iter()
        .map(|b| b.mean_abs() * (b.rows() * b.cols()) as f64)
        .sum();
    total / (sys.dim() * sys.dim()) as f64
}

/// `S× = S22 + ε E` with `E` uniform on `[-η, η]`, `η` the mean absolute entry of A.
pub fn approx_schur_cross(sys: &BlockSystem, eps_cross: f64, seed: u64) -> Result<DenseMatrix> {
    if !(eps_cross >= 0.0 && eps_cross.is_finite()) {
        return Err(Error::Precondition(format!("ε× must be a finite non-negative value, got {eps_cross}")));
    }
    let s = sys.assemble_schur();
    if eps_cross == 0.0 {
        return Ok(s.clone());
    }
    let eta = mean_abs_entry(sys);
    if eta == 0.0 {
        return Ok(s.clone());
    }
    let e = UniformStream::new(seed).matrix(sys.n2(), sys.n2(), -eta, eta)?;
    s.add_scaled(eps_cross, &e)
}

/// Which of the pair a table row refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixTag {
    M,
    N,
}

impl MatrixTag {
    pub fn label(self) -> &'static str {
        match self {
            MatrixTag::M => "M",
            MatrixTag::N => "N",
        }
    }
}

/// A table column: a preconditioner with the exact Schur complement, or the
/// lower-triangular one built on A22.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Exact(PrecondTag),
    LowerTriHat,
}

impl TableKind {
    /// The standard table columns, in order.
    pub const STANDARD: [TableKind; 6] = [
        TableKind::Exact(PrecondTag::LowerTri),
        TableKind::LowerTriHat,
        TableKind::Exact(PrecondTag::DiagPlus),
        TableKind::Exact(PrecondTag::DiagHatPlus),
        TableKind::Exact(PrecondTag::DiagMinus),
        TableKind::Exact(PrecondTag::DiagHatMinus),
    ];

    pub fn label(self) -> &'static str {
        match self {
            TableKind::Exact(t) => t.label(),
            TableKind::LowerTriHat => "Lhat",
        }
    }

    pub fn from_label(s: &str) -> Option<TableKind> {
        if s.eq_ignore_ascii_case("Lhat") {
            return Some(TableKind::LowerTriHat);
        }
        PrecondTag::from_label(s).map(TableKind::Exact)
    }

    /// How the second diagonal block of the preconditioner is formed.
    pub fn schur_label(self) -> &'static str {
        match self {
            TableKind::Exact(t) if t.is_hat() => "A22",
            TableKind::Exact(_) => "exact",
            TableKind::LowerTriHat => "A22",
        }
    }

    fn preconditioner(self, sys: &BlockSystem) -> PreconditionerKind {
        match self {
            TableKind::Exact(t) => PreconditionerKind::exact(t),
            TableKind::LowerTriHat => PreconditionerKind::provided(PrecondTag::LowerTri, sys.a22().clone()),
        }
    }
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_relres: f64,
}

impl From<&SolveResult> for SolveSummary {
    fn from(r: &SolveResult) -> Self {
        Self {
            iterations: r.iterations,
            converged: r.converged,
            final_relres: r.final_relres,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub kind: TableKind,
    pub solve: SolveSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub matrix_tag: MatrixTag,
    pub config: ExperimentConfig,
    pub cells: Vec<TableCell>,
}

impl TableRow {
    pub fn iterations(&self, kind: TableKind) -> Option<usize> {
        self.cells.iter().find(|c| c.kind == kind).map(|c| c.solve.iterations)
    }

    pub fn all_converged(&self) -> bool {
        self.cells.iter().all(|c| c.solve.converged)
    }
}

#[derive(Debug, Clone)]
pub struct TableResult {
    pub rows: Vec<TableRow>,
    /// Present when N was among the requested matrices.
    pub calibration: Option<RhoCalibration>,
}

/// GMRES with `b = 1` and `x0 = 0`.
pub fn solve_ones(sys: &BlockSystem, kind: &PreconditionerKind, cfg: &ExperimentConfig) -> Result<SolveResult> {
    let p = make_preconditioner(sys, kind)?;
    let b = vec![1.0; sys.dim()];
    gmres(sys, &p, &b, None, cfg.rel_tol, cfg.max_iters)
}

/// One table row per requested matrix, one cell per kind.
pub fn run_table(cfg: &ExperimentConfig, tags: &[MatrixTag], kinds: &[TableKind]) -> Result<TableResult> {
    let blocks = MnBlocks::generate(cfg)?;
    let calibration = if tags.contains(&MatrixTag::N) {
        Some(calibrate_rho(&blocks)?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(tags.len());
    for &tag in tags {
        let sys = match (tag, &calibration) {
            (MatrixTag::N, Some(c)) => blocks.system(blocks.n_block(c.rho))?,
            _ => blocks.m()?,
        };
        let sys = &sys;
        let mut cells = Vec::with_capacity(kinds.len());
        for &kind in kinds {
            let r = solve_ones(sys, &kind.preconditioner(sys), cfg)?;
            if !r.converged {
                log::warn!(
                    "{} {} {kind}: not converged after {} iterations (relres {:.3e})",
                    tag.label(),
                    cfg.constants_label(),
                    r.iterations,
                    r.final_relres
                );
            }
            cells.push(TableCell {
                kind,
                solve: (&r).into(),
            });
        }
        rows.push(TableRow {
            matrix_tag: tag,
            config: cfg.clone(),
            cells,
        });
    }
    Ok(TableResult { rows, calibration })
}

/// Which approximate Schur complement a ratio sweep perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioMode {
    /// `S*`, on N with ρ = 0.
    Star,
    /// `S×`, on N with ρ = 0.
    Cross,
    /// `S×` with A22 replaced by zero.
    CrossSaddle,
}

impl RatioMode {
    pub fn label(self) -> &'static str {
        match self {
            RatioMode::Star => "star",
            RatioMode::Cross => "cross",
            RatioMode::CrossSaddle => "cross-saddle",
        }
    }

    pub fn from_label(s: &str) -> Option<RatioMode> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "star" => Some(RatioMode::Star),
            "cross" => Some(RatioMode::Cross),
            "cross-saddle" => Some(RatioMode::CrossSaddle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioPoint {
    pub epsilon: f64,
    pub diagonal: SolveSummary,
    pub lower: SolveSummary,
}

impl RatioPoint {
    /// Block-diagonal over block-lower-triangular iterations.
    pub fn ratio(&self) -> f64 {
        self.diagonal.iterations as f64 / self.lower.iterations.max(1) as f64
    }
}

/// The system used by ratio sweeps: N with ρ = 0, or with a zero (2,2) block.
pub fn ratio_system(cfg: &ExperimentConfig, mode: RatioMode) -> Result<BlockSystem> {
    let blocks = MnBlocks::generate(cfg)?;
    match mode {
        RatioMode::Star | RatioMode::Cross => blocks.system(blocks.n_block(0.0)),
        RatioMode::CrossSaddle => blocks.system(DenseMatrix::zeros(cfg.n, cfg.n)),
    }
}

/// D+ and L with the approximate Schur complement of `mode` at every ε. The
/// perturbation `E` is drawn from the same seed at every grid point.
pub fn ratio_sweep(cfg: &ExperimentConfig, eps_grid: &[f64], mode: RatioMode) -> Result<Vec<RatioPoint>> {
    let sys = ratio_system(cfg, mode)?;
    let e_seed = cfg.seed.wrapping_add(ERROR_MATRIX_SEED_OFFSET);
    let mut out = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let s = match mode {
            RatioMode::Star => approx_schur_star(&sys, eps)?,
            RatioMode::Cross | RatioMode::CrossSaddle => approx_schur_cross(&sys, eps, e_seed)?,
        };
        let d = solve_ones(&sys, &PreconditionerKind::provided(PrecondTag::DiagPlus, s.clone()), cfg)?;
        let l = solve_ones(&sys, &PreconditionerKind::provided(PrecondTag::LowerTri, s), cfg)?;
        out.push(RatioPoint {
            epsilon: eps,
            diagonal: (&d).into(),
            lower: (&l).into(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub kind: PrecondTag,
    pub lambda: f64,
    pub abs_plus: f64,
    pub abs_minus: f64,
}

/// Magnitudes of the two preconditioned eigenvalues generated by each real λ.
pub fn spectrum_curves(grid: &[f64], kinds: &[PrecondTag]) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::with_capacity(grid.len() * kinds.len());
    for &kind in kinds {
        for &lambda in grid {
            let (p, m) = map_generalized_to_preconditioned(num_complex::Complex64::new(lambda, 0.0), kind)?;
            out.push(CurvePoint {
                kind,
                lambda,
                abs_plus: p.norm(),
                abs_minus: m.norm(),
            });
        }
    }
    Ok(out)
}

/// Parses `lo:hi:steps` into `steps` evenly spaced points including both ends.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Precondition(format!("grid must look like lo:hi:steps, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if steps == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremCheck {
    pub kind: PrecondTag,
    pub n2: usize,
    pub max_residual: f64,
    pub multiset_distance: f64,
    pub hausdorff: f64,
    pub kernel_a12: usize,
    pub kernel_a21: usize,
    pub complete_basis: bool,
    pub passed: bool,
}

/// Synthesizes a system with the given generalized spectrum (one value per
/// row of the second block) and checks the predicted spectra of `kinds`.
pub fn verify_theorem(lambdas: &[f64], kinds: &[PrecondTag], seed: u64, tol: f64) -> Result<Vec<TheoremCheck>> {
    let n2 = lambdas.len();
    let sys = synthesize_prescribed(n2, n2, lambdas, seed)?;
    kinds
        .iter()
        .map(|&kind| {
            let r = verify_prediction(&sys, kind, tol)?;
            Ok(TheoremCheck {
                kind,
                n2,
                max_residual: r.max_residual,
                multiset_distance: r.multiset_distance,
                hausdorff: r.hausdorff,
                kernel_a12: r.kernel_a12,
                kernel_a21: r.kernel_a21,
                complete_basis: r.complete_basis,
                passed: r.passed,
            })
        })
        .collect()
}
