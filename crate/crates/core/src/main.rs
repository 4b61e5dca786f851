use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use blockprec::block::PrecondTag;
use blockprec::experiments::output::{write_curves, write_ratio_sweep, write_table, write_theorem, write_vef};
use blockprec::experiments::{
    parse_grid, ratio_sweep, run_table, spectrum_curves, verify_theorem, ExperimentConfig, MatrixTag, RatioMode,
    TableKind,
};
use blockprec::vef::{vef_driver, vef_table, EddingtonField, TransportProblem, VefKind, VefVariant};

#[derive(Parser)]
#[command(name = "blockprec", version, about = "Block preconditioning experiments for 2x2 block systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// GMRES iteration counts for the M/N matrix pair.
    Table(TableArgs),
    /// Diagonal vs lower-triangular iterations with an approximate Schur complement.
    RatioSweep(RatioArgs),
    /// |eigenvalue| of the preconditioned operator as a function of the generalized eigenvalue.
    SpectrumCurves(CurveArgs),
    /// Checks predicted spectra on a system with prescribed generalized eigenvalues.
    VerifyTheorem(TheoremArgs),
    /// Preconditioned GMRES on the 1D VEF transport system.
    Vef(VefArgs),
}

#[derive(Args)]
struct Common {
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with code 2 if any solve fails to converge or any check fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct MatrixArgs {
    /// Block size.
    #[arg(long, default_value_t = 250)]
    n: usize,
    #[arg(long = "c_o", visible_alias = "c-o", default_value_t = 1.0)]
    c_o: f64,
    #[arg(long = "c1", default_value_t = 1.0)]
    c_1: f64,
    #[arg(long = "c2", default_value_t = 1.0)]
    c_2: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-16)]
    tol: f64,
    /// GMRES iteration cap (default: system dimension).
    #[arg(long)]
    max_iters: Option<usize>,
}

impl MatrixArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            n: self.n,
            c_o: self.c_o,
            c_1: self.c_1,
            c_2: self.c_2,
            seed: self.seed,
            rel_tol: self.tol,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Matrices to run, any of M and N.
    #[arg(long, value_delimiter = ',', default_value = "M,N")]
    matrices: Vec<String>,
    /// Columns, from L, Lhat, U, M, D+, Dhat+, D-, Dhat-.
    #[arg(long, value_delimiter = ',', default_value = "L,Lhat,D+,Dhat+,D-,Dhat-")]
    kinds: Vec<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RatioArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// star, cross or cross-saddle.
    #[arg(long, default_value = "star")]
    mode: String,
    /// `lo:hi:steps` or a comma-separated list.
    #[arg(long, default_value = "0:1:11", allow_hyphen_values = true)]
    eps_grid: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CurveArgs {
    /// `lo:hi:steps` grid of real generalized eigenvalues.
    #[arg(long, default_value = "-4:4:161", allow_hyphen_values = true)]
    grid: String,
    #[arg(long, value_delimiter = ',', default_value = "D+,D-,Dhat+,Dhat-")]
    kinds: Vec<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TheoremArgs {
    /// Size of the second block; ignored when --lambdas is given.
    #[arg(long, default_value_t = 8)]
    n2: usize,
    /// Prescribed generalized eigenvalues, `lo:hi:steps` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    lambdas: Option<String>,
    /// Diagonal kinds: D+, D-, Dhat+, Dhat-.
    #[arg(long, value_delimiter = ',', default_value = "D+,D-,Dhat+,Dhat-")]
    kinds: Vec<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VefArgs {
    #[arg(long, default_value_t = 200)]
    elements: usize,
    #[arg(long = "sigma-a", default_value_t = 0.0)]
    sigma_a: f64,
    /// Discrete ordinates (even).
    #[arg(long, default_value_t = 8)]
    angles: usize,
    /// Isotropic incoming angular flux on both faces.
    #[arg(long, default_value_t = 0.0)]
    inflow: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// D, L, Dt or Lt; all four when omitted.
    #[arg(long, value_delimiter = ',')]
    kind: Vec<String>,
    /// Scale row 2 by -1/3 with E = 1/3.
    #[arg(long)]
    symmetrized: bool,
    /// Converge the VEF iteration first and count iterations with the final Eddington factor.
    #[arg(long)]
    outer: bool,
    #[arg(long, default_value_t = 1e-8)]
    outer_tol: f64,
    #[arg(long, default_value_t = 100)]
    max_outer: usize,
    #[command(flatten)]
    common: Common,
}

fn parse_values(s: &str) -> Result<Vec<f64>> {
    if s.contains(':') {
        return Ok(parse_grid(s)?);
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("not a number: {v:?}")))
        .collect()
}

fn parse_tags(labels: &[String]) -> Result<Vec<PrecondTag>> {
    labels
        .iter()
        .map(|l| PrecondTag::from_label(l).with_context(|| format!("unknown preconditioner {l:?}")))
        .collect()
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Returns whether every solve converged / every check passed.
fn run(cli: Cli) -> Result<(bool, bool)> {
    match cli.command {
        Command::Table(a) => {
            let cfg = a.matrix.config();
            let tags = a
                .matrices
                .iter()
                .map(|m| match m.to_ascii_uppercase().as_str() {
                    "M" => Ok(MatrixTag::M),
                    "N" => Ok(MatrixTag::N),
                    _ => bail!("unknown matrix {m:?}, expected M or N"),
                })
                .collect::<Result<Vec<_>>>()?;
            let kinds = a
                .kinds
                .iter()
                .map(|k| TableKind::from_label(k).with_context(|| format!("unknown column {k:?}")))
                .collect::<Result<Vec<_>>>()?;
            let result = run_table(&cfg, &tags, &kinds)?;
            write_table(sink(&a.common.out)?, &cfg, &result)?;
            Ok((result.rows.iter().all(|r| r.all_converged()), a.common.strict))
        }
        Command::RatioSweep(a) => {
            let cfg = a.matrix.config();
            let mode = RatioMode::from_label(&a.mode)
                .with_context(|| format!("unknown mode {:?}, expected star, cross or cross-saddle", a.mode))?;
            let grid = parse_values(&a.eps_grid)?;
            let points = ratio_sweep(&cfg, &grid, mode)?;
            write_ratio_sweep(sink(&a.common.out)?, &cfg, mode, &points)?;
            let ok = points.iter().all(|p| p.diagonal.converged && p.lower.converged);
            Ok((ok, a.common.strict))
        }
        Command::SpectrumCurves(a) => {
            let points = spectrum_curves(&parse_grid(&a.grid)?, &parse_tags(&a.kinds)?)?;
            write_curves(sink(&a.common.out)?, &points)?;
            Ok((true, a.common.strict))
        }
        Command::VerifyTheorem(a) => {
            let lambdas = match &a.lambdas {
                Some(s) => parse_values(s)?,
                None => parse_grid(&format!("-2.7:3.1:{}", a.n2))?,
            };
            let checks = verify_theorem(&lambdas, &parse_tags(&a.kinds)?, a.seed, a.tol)?;
            write_theorem(sink(&a.common.out)?, a.seed, a.tol, &checks)?;
            Ok((checks.iter().all(|c| c.passed), a.common.strict))
        }
        Command::Vef(a) => {
            let kinds = if a.kind.is_empty() {
                VefKind::ALL.to_vec()
            } else {
                a.kind
                    .iter()
                    .map(|k| VefKind::from_label(k).with_context(|| format!("unknown VEF kind {k:?}")))
                    .collect::<Result<Vec<_>>>()?
            };
            if a.outer && a.symmetrized {
                bail!("the symmetrized variant is defined for E = 1/3 only; drop --outer or --symmetrized");
            }
            let problem = TransportProblem {
                n_elements: a.elements,
                sigma_a: a.sigma_a,
                n_angles: a.angles,
                inflow_left: a.inflow,
                inflow_right: a.inflow,
                ..TransportProblem::default()
            };
            problem.validate()?;
            let mut meta = vec![
                ("length".to_string(), problem.length.to_string()),
                ("sigma_t".into(), problem.sigma_t.to_string()),
                ("source".into(), problem.source.to_string()),
                ("angles".into(), problem.n_angles.to_string()),
                ("inflow".into(), a.inflow.to_string()),
                ("rel_tol".into(), format!("{:e}", a.tol)),
            ];
            let (eddington, outer_ok) = if a.outer {
                let d = vef_driver(&problem, VefKind::L, a.tol, a.outer_tol, a.max_outer)?;
                meta.push(("eddington".into(), "converged".into()));
                meta.push(("outer_iterations".into(), d.outer_iterations.to_string()));
                meta.push(("outer_converged".into(), d.converged.to_string()));
                (d.eddington, d.converged)
            } else {
                meta.push(("eddington".into(), "1/3".into()));
                (EddingtonField::constant(problem.n_elements, 1.0 / 3.0), true)
            };
            let variant = if a.symmetrized {
                VefVariant::Symmetrized
            } else {
                VefVariant::Nonsymmetric
            };
            let rows = vef_table(&problem, &eddington, &kinds, &[variant], a.tol)?;
            write_vef(sink(&a.common.out)?, &meta, &rows)?;
            Ok((outer_ok && rows.iter().all(|r| r.converged), a.common.strict))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok((true, _)) | Ok((false, false)) => ExitCode::SUCCESS,
        Ok((false, true)) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
