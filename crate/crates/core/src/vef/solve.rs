//! Block preconditioners for the VEF system, the linear solve and the outer
//! fixed-point iteration.

use std::sync::Arc;

use super::{assemble_vef, eddington, transport_sweep, EddingtonField, TransportProblem, VefDiscretization, VefVariant};
use crate::block::{BlockMap, BlockSolve, PrecondTag, PreconditionerInstance};
use crate::dense::{norm2, BandLu};
use crate::error::{Error, Result};
use crate::krylov::{gmres, Operator, SolveResult};

/// The four preconditioners: block diagonal or lower triangular, each with the
/// exact Schur complement `M_a + B M_t⁻¹ G` or the lumped `M_a + B M̃_t⁻¹ G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VefKind {
    D,
    L,
    Dt,
    Lt,
}

impl VefKind {
    pub const ALL: [VefKind; 4] = [VefKind::D, VefKind::L, VefKind::Dt, VefKind::Lt];

    pub fn label(self) -> &'static str {
        match self {
            VefKind::D => "D",
            VefKind::L => "L",
            VefKind::Dt => "Dt",
            VefKind::Lt => "Lt",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label().eq_ignore_ascii_case(s))
    }

    pub fn is_lumped(self) -> bool {
        matches!(self, VefKind::Dt | VefKind::Lt)
    }

    pub fn tag(self) -> PrecondTag {
        match self {
            VefKind::D | VefKind::Dt => PrecondTag::DiagPlus,
            VefKind::L | VefKind::Lt => PrecondTag::LowerTri,
        }
    }
}

/// The monolithic VEF operator, applied blockwise from the sparse blocks.
#[derive(Debug, Clone, Copy)]
pub struct VefOperator<'a> {
    disc: &'a VefDiscretization,
}

impl<'a> VefOperator<'a> {
    pub fn new(disc: &'a VefDiscretization) -> Self {
        Self { disc }
    }
}

impl Operator for VefOperator<'_> {
    fn dim(&self) -> usize {
        self.disc.dim()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "vector of length {} for a VEF system of order {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self.disc.apply(x))
    }
}

/// `S⁻¹ r` for the exact Schur complement, without forming S: solving
/// `[A11 A12; A21 A22] [y; z] = [0; r]` gives `z = S⁻¹ r`. The monolithic
/// matrix is banded in the element-interleaved ordering, so one band LU
/// replaces `n2` dense solves and a dense factorization of S.
struct ExactSchurSolve {
    lu: BandLu,
    n1: usize,
    n2: usize,
}

impl BlockSolve for ExactSchurSolve {
    fn dim(&self) -> usize {
        self.n2
    }
    fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.n2 {
            return Err(Error::Dimension("Schur right-hand side length mismatch".into()));
        }
        let mut rhs = vec![0.0; self.n1 + self.n2];
        for (p, &v) in r.iter().enumerate() {
            rhs[VefDiscretization::interleaved_phi(p)] = v;
        }
        let sol = self.lu.solve(&rhs)?;
        Ok((0..self.n2).map(|p| sol[VefDiscretization::interleaved_phi(p)]).collect())
    }
}

fn factor_checked(m: &crate::dense::BandMatrix, what: &'static str) -> Result<BandLu> {
    let lu = m.factor();
    if lu.is_singular() {
        return Err(Error::SingularBlock {
            block: what,
            detail: "zero pivot in the band factorization".into(),
        });
    }
    Ok(lu)
}

/// Builds one of the four preconditioners. A11 is always factored exactly;
/// lumping only enters the Schur complement.
pub fn vef_preconditioner(disc: &VefDiscretization, kind: VefKind) -> Result<PreconditionerInstance> {
    let a11: Arc<dyn BlockSolve> = Arc::new(factor_checked(&disc.a11_band(), "A11")?);
    let second: Arc<dyn BlockSolve> = if kind.is_lumped() {
        Arc::new(factor_checked(&disc.lumped_schur(), "the lumped Schur complement")?)
    } else {
        Arc::new(ExactSchurSolve {
            lu: factor_checked(&disc.monolithic_band(), "the VEF system")?,
            n1: disc.n1(),
            n2: disc.n2(),
        })
    };
    let a12: Arc<dyn BlockMap> = disc.a12.clone();
    let a21: Arc<dyn BlockMap> = disc.a21.clone();
    PreconditionerInstance::from_parts(kind.tag(), a11, second, Some(a12), Some(a21))
}

/// Left-preconditioned GMRES on the VEF system from a zero initial guess.
pub fn vef_solve(disc: &VefDiscretization, kind: VefKind, rel_tol: f64) -> Result<SolveResult> {
    let p = vef_preconditioner(disc, kind)?;
    gmres(&VefOperator::new(disc), &p, &disc.rhs, None, rel_tol, None)
}

#[derive(Debug, Clone)]
pub struct VefDriverResult {
    /// Scalar flux, two values per element.
    pub phi: Vec<f64>,
    /// Current at the quadratic nodes.
    pub current: Vec<f64>,
    pub eddington: EddingtonField,
    /// Number of transport sweeps performed.
    pub outer_iterations: usize,
    pub converged: bool,
    /// Relative change in φ after each sweep.
    pub change_history: Vec<f64>,
    /// GMRES iterations of every linear solve, the initial one first.
    pub linear_iterations: Vec<usize>,
    /// Smallest and largest Eddington factor seen over all sweeps.
    pub e_range: (f64, f64),
}

/// Fixed-point VEF iteration: starting from `E = 1/3`, alternate a transport
/// sweep, the Eddington update, assembly and a linear solve until the
/// relative change in φ is at most `outer_tol`.
pub fn vef_driver(
    problem: &TransportProblem,
    kind: VefKind,
    rel_tol: f64,
    outer_tol: f64,
    max_outer: usize,
) -> Result<VefDriverResult> {
    let n1 = problem.h1_nodes();
    let mut e = EddingtonField::constant(problem.n_elements, 1.0 / 3.0);
    let first = vef_solve(&assemble_vef(problem, &e, VefVariant::Nonsymmetric)?, kind, rel_tol)?;
    let mut linear_iterations = vec![first.iterations];
    let mut x = first.solution;
    let mut change_history = Vec::new();
    let mut e_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut converged = false;
    for _ in 0..max_outer {
        let flux = transport_sweep(problem, &x[n1..])?;
        e = eddington(&flux, problem)?;
        e_range = (e_range.0.min(e.min()), e_range.1.max(e.max()));
        let disc = assemble_vef(problem, &e, VefVariant::Nonsymmetric)?;
        let sol = vef_solve(&disc, kind, rel_tol)?;
        linear_iterations.push(sol.iterations);
        let diff: Vec<f64> = sol.solution[n1..].iter().zip(&x[n1..]).map(|(a, b)| a - b).collect();
        let scale = norm2(&sol.solution[n1..]);
        let change = if scale > 0.0 { norm2(&diff) / scale } else { norm2(&diff) };
        change_history.push(change);
        x = sol.solution;
        if change <= outer_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "VEF iteration stopped after {max_outer} sweeps, last change {:e}",
            change_history.last().copied().unwrap_or(f64::NAN)
        );
    }
    let phi = x.split_off(n1);
    Ok(VefDriverResult {
        phi,
        current: x,
        eddington: e,
        outer_iterations: change_history.len(),
        converged,
        change_history,
        linear_iterations,
        e_range,
    })
}

#[derive(Debug, Clone)]
pub struct VefTableRow {
    pub elements: usize,
    pub sigma_a: f64,
    pub kind: VefKind,
    pub symmetrized: bool,
    pub iterations: usize,
    pub converged: bool,
    pub final_relres: f64,
}

/// Iteration counts for every kind and variant on one problem. Nonsymmetric
/// rows use `eddington` (typically the converged field); symmetrized rows use
/// `E ≡ 1/3` as that variant requires.
pub fn vef_table(
    problem: &TransportProblem,
    eddington: &EddingtonField,
    kinds: &[VefKind],
    variants: &[VefVariant],
    rel_tol: f64,
) -> Result<Vec<VefTableRow>> {
    let mut rows = Vec::new();
    for &variant in variants {
        let disc = match variant {
            VefVariant::Nonsymmetric => assemble_vef(problem, eddington, variant)?,
            VefVariant::Symmetrized => VefDiscretization::symmetric(problem)?,
        };
        for &kind in kinds {
            let r = vef_solve(&disc, kind, rel_tol)?;
            rows.push(VefTableRow {
                elements: problem.n_elements,
                sigma_a: problem.sigma_a,
                kind,
                symmetrized: variant == VefVariant::Symmetrized,
                iterations: r.iterations,
                converged: r.converged,
                final_relres: r.final_relres,
            });
        }
    }
    Ok(rows)
}
