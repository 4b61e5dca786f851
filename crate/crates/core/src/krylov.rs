//! Left-preconditioned GMRES without restarts and the stationary iteration
//! `x <- x + P⁻¹(b - A x)`, both with per-iteration residual histories.

use std::fmt;

use crate::block::{BlockSystem, PreconditionerInstance};
use crate::dense::{axpy, dot, norm2, BandMatrix, DenseMatrix};
use crate::error::{Error, Result};

/// A linear map on vectors of length `dim`.
pub trait Operator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl Operator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.is_square() || x.len() != self.cols() {
            return Err(Error::Dimension(format!(
                "vector of length {} for a {}x{} operator",
                x.len(),
                self.rows(),
                self.cols()
            )));
        }
        Ok(self.matvec(x))
    }
}

impl Operator for BandMatrix {
    fn dim(&self) -> usize {
        BandMatrix::dim(self)
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension("band operator length mismatch".into()));
        }
        Ok(self.matvec(x))
    }
}

impl Operator for BlockSystem {
    fn dim(&self) -> usize {
        BlockSystem::dim(self)
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_block(x)
    }
}

/// The preconditioner as an operator applies `P⁻¹`.
impl Operator for PreconditionerInstance {
    fn dim(&self) -> usize {
        PreconditionerInstance::dim(self)
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        PreconditionerInstance::apply(self, x)
    }
}

/// The identity map, i.e. no preconditioning.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl Operator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }
}

/// Why an iteration stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Breakdown {
    /// The Krylov space became invariant; the iterate is exact.
    Happy,
    /// The new Arnoldi direction vanished without an invertible projection.
    Underflow,
    /// Five consecutive iterations each improved the residual by less than 0.1%.
    Stagnation,
    /// Fixed-point residual grew past 1e8.
    Divergence,
}

impl fmt::Display for Breakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Breakdown::Happy => "happy",
            Breakdown::Underflow => "underflow",
            Breakdown::Stagnation => "stagnation",
            Breakdown::Divergence => "divergence",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Relative preconditioned residual, starting with 1 for the initial guess.
    /// For GMRES these are the least-squares estimates.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub breakdown: Option<Breakdown>,
    /// `‖P⁻¹(b - A x)‖ / ‖P⁻¹(b - A x0)‖` recomputed at exit.
    pub final_relres: f64,
}

const STAGNATION_WINDOW: usize = 5;
const STAGNATION_IMPROVEMENT: f64 = 1e-3;
/// Stagnation is only declared once the residual sits near working precision;
/// above this level slow progress is genuine convergence behavior.
const STAGNATION_FLOOR: f64 = 1.5e-8;
/// `P⁻¹A v` is treated as lying in the current Krylov space once its new
/// component is this small relative to its norm. Rounding in a nearly invariant
/// space leaves components around `eps ‖P⁻¹A‖`, far above `eps`.
const INVARIANCE_TOL: f64 = 1.4901161193847656e-8;
const DIVERGENCE_LIMIT: f64 = 1e8;

fn check_dims(a: &dyn Operator, p: &dyn Operator, b: &[f64], x0: Option<&[f64]>) -> Result<()> {
    let n = a.dim();
    if p.dim() != n || b.len() != n || x0.is_some_and(|x| x.len() != n) {
        return Err(Error::Dimension(format!(
            "operator {n}, preconditioner {}, rhs {}",
            p.dim(),
            b.len()
        )));
    }
    Ok(())
}

fn preconditioned_residual(a: &dyn Operator, p: &dyn Operator, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let ax = a.apply(x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    p.apply(&r)
}

/// GMRES on `P⁻¹ A x = P⁻¹ b`.
///
/// Arnoldi uses modified Gram-Schmidt (a single pass, so in floating point the
/// iteration can run past `dim` steps); the least-squares problem is updated
/// with Givens rotations. The iteration stops when the estimated relative
/// preconditioned residual reaches `max(rel_tol, 2 eps cond)`, where `cond` is
/// the diagonal ratio of the triangular factor, so tolerances at machine
/// precision terminate. A Krylov space that is invariant to within `sqrt(eps)`
/// ends the run as a happy breakdown. `converged` additionally requires the
/// recomputed residual to be within `max(10 tol, sqrt(eps))`.
/// `x0 = None` starts from zero; `max_iters = None` allows `dim` iterations.
pub fn gmres(
    a: &dyn Operator,
    p: &dyn Operator,
    b: &[f64],
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iters: Option<usize>,
) -> Result<SolveResult> {
    check_dims(a, p, b, x0)?;
    if !(rel_tol > 0.0) {
        return Err(Error::Precondition(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let n = a.dim();
    let max_iters = max_iters.unwrap_or(n);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);

    let r0 = preconditioned_residual(a, p, b, &x)?;
    let beta = norm2(&r0);
    if beta == 0.0 {
        return Ok(SolveResult {
            solution: x,
            iterations: 0,
            residual_history: vec![0.0],
            converged: true,
            breakdown: None,
            final_relres: 0.0,
        });
    }

    let mut basis: Vec<Vec<f64>> = vec![r0.iter().map(|v| v / beta).collect()];
    // Columns of the rotated Hessenberg matrix, i.e. R stored by column.
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut history = vec![1.0];
    let mut breakdown = None;
    let mut converged = false;
    let mut slow_steps = 0;
    let (mut rmax, mut rmin) = (0.0f64, f64::INFINITY);
    let mut eff_tol = rel_tol;

    for k in 0..max_iters {
        let mut w = p.apply(&a.apply(&basis[k])?)?;
        let w_norm = norm2(&w);
        let mut h = vec![0.0; k + 2];
        for (i, v) in basis.iter().enumerate() {
            let c = dot(&w, v);
            h[i] = c;
            axpy(-c, v, &mut w);
        }
        let h_next = norm2(&w);
        let invariant = h_next <= INVARIANCE_TOL * w_norm;
        h[k + 1] = if invariant { 0.0 } else { h_next };

        for i in 0..k {
            let t = cs[i] * h[i] + sn[i] * h[i + 1];
            h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
            h[i] = t;
        }
        let denom = h[k].hypot(h[k + 1]);
        let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[k] / denom, h[k + 1] / denom) };
        h[k] = denom;
        h.truncate(k + 1);
        cs.push(c);
        sn.push(s);
        g.push(-s * g[k]);
        g[k] *= c;
        r_cols.push(h);

        rmax = rmax.max(denom);
        rmin = rmin.min(denom);
        let est = g[k + 1].abs() / beta;
        let prev = *history.last().expect("non-empty");
        history.push(est);

        if invariant || denom == 0.0 {
            if denom > 0.0 {
                breakdown = Some(Breakdown::Happy);
                converged = true;
            } else {
                breakdown = Some(Breakdown::Underflow);
                r_cols.pop();
                g.truncate(k + 1);
            }
            break;
        }

        let cond = if rmin > 0.0 { rmax / rmin } else { f64::INFINITY };
        eff_tol = rel_tol.max(2.0 * f64::EPSILON * cond);
        if est <= eff_tol {
            converged = true;
            break;
        }
        if est <= STAGNATION_FLOOR && est > prev * (1.0 - STAGNATION_IMPROVEMENT) {
            slow_steps += 1;
            if slow_steps >= STAGNATION_WINDOW {
                breakdown = Some(Breakdown::Stagnation);
                break;
            }
        } else {
            slow_steps = 0;
        }

        let mut v = w;
        let inv = 1.0 / h_next;
        v.iter_mut().for_each(|e| *e *= inv);
        basis.push(v);
    }

    // Back substitution R y = g and update x += V y.
    let m = r_cols.len();
    let mut y = g[..m].to_vec();
    for i in (0..m).rev() {
        for j in i + 1..m {
            y[i] -= r_cols[j][i] * y[j];
        }
        y[i] /= r_cols[i][i];
    }
    for (yi, v) in y.iter().zip(&basis) {
        axpy(*yi, v, &mut x);
    }

    let final_relres = norm2(&preconditioned_residual(a, p, b, &x)?) / beta;
    if converged && !(final_relres <= (10.0 * eff_tol).max(f64::EPSILON.sqrt())) {
        // The estimate and the true residual disagree: do not claim success.
        converged = false;
    }
    Ok(SolveResult {
        solution: x,
        iterations: history.len() - 1,
        residual_history: history,
        converged,
        breakdown,
        final_relres,
    })
}

/// Stationary iteration `x <- x + P⁻¹(b - A x)`.
///
/// Divergence (relative residual above 1e8 or non-finite) is reported in the
/// result rather than as an error.
pub fn fixed_point(
    a: &dyn Operator,
    p: &dyn Operator,
    b: &[f64],
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iters: usize,
) -> Result<SolveResult> {
    check_dims(a, p, b, x0)?;
    let n = a.dim();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = preconditioned_residual(a, p, b, &x)?;
    let beta = norm2(&r);
    let mut history = vec![if beta == 0.0 { 0.0 } else { 1.0 }];
    let mut converged = beta == 0.0;
    let mut breakdown = None;
    let mut rel = history[0];
    while !converged && history.len() <= max_iters {
        axpy(1.0, &r, &mut x);
        r = preconditioned_residual(a, p, b, &x)?;
        rel = norm2(&r) / beta;
        history.push(rel);
        if rel <= rel_tol {
            converged = true;
        } else if !rel.is_finite() || rel > DIVERGENCE_LIMIT {
            breakdown = Some(Breakdown::Divergence);
            break;
        }
    }
    Ok(SolveResult {
        solution: x,
        iterations: history.len() - 1,
        residual_history: history,
        converged,
        breakdown,
        final_relres: rel,
    })
}

/// Dense `P⁻¹ A`, column by column.
pub fn preconditioned_matrix(a: &dyn Operator, p: &dyn Operator) -> Result<DenseMatrix> {
    let n = a.dim();
    if p.dim() != n {
        return Err(Error::Dimension("operator and preconditioner differ in size".into()));
    }
    let mut out = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        out.set_column(j, &p.apply(&a.apply(&e)?)?);
        e[j] = 0.0;
    }
    Ok(out)
}

/// Dense fixed-point iteration matrix `I - P⁻¹ A`.
pub fn iteration_matrix(a: &dyn Operator, p: &dyn Operator) -> Result<DenseMatrix> {
    let mut m = preconditioned_matrix(a, p)?.scaled(-1.0);
    m.add_diagonal(1.0);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{make_preconditioner, random_block_system, A22Fill, PrecondTag};
    use crate::dense::lu_factor;

    #[test]
    fn identity_converges_immediately() {
        let a = DenseMatrix::identity(5);
        let b = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = gmres(&a, &Identity(5), &b, None, 1e-12, None).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 1);
        assert_eq!(r.solution, b.to_vec());
        let f = fixed_point(&a, &Identity(5), &b, None, 1e-12, 10).unwrap();
        assert!(f.converged);
        assert_eq!(f.iterations, 1);
    }

    #[test]
    fn unpreconditioned_matches_lu() {
        let sys = random_block_system(12, 8, 3.0, A22Fill::Random, 5).unwrap();
        let a = sys.monolithic();
        let b = vec![1.0; 20];
        let r = gmres(&sys, &Identity(20), &b, None, 1e-13, None).unwrap();
        assert!(r.converged);
        let x = lu_factor(&a).unwrap().solve(&b).unwrap();
        let diff: Vec<f64> = x.iter().zip(&r.solution).map(|(u, v)| u - v).collect();
        assert!(norm2(&diff) <= 1e-8 * norm2(&x));
        assert_eq!(r.iterations, r.residual_history.len() - 1);
        for w in r.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 10.0 * f64::EPSILON));
        }
    }

    #[test]
    fn exact_ldu_two_iterations_at_most() {
        let sys = random_block_system(10, 6, 0.0, A22Fill::Random, 2).unwrap();
        let p = make_preconditioner(&sys, &PrecondTag::Ldu.into()).unwrap();
        let b = vec![1.0; 16];
        let r = gmres(&sys, &p, &b, None, 1e-12, None).unwrap();
        assert!(r.converged && r.iterations <= 2, "{r:?}");
        let f = fixed_point(&sys, &p, &b, None, 1e-12, 10).unwrap();
        assert!(f.converged && f.iterations <= 2);
    }

    #[test]
    fn zero_rhs_and_errors() {
        let a = DenseMatrix::identity(3);
        let r = gmres(&a, &Identity(3), &[0.0; 3], None, 1e-10, None).unwrap();
        assert!(r.converged && r.iterations == 0);
        assert!(gmres(&a, &Identity(3), &[0.0; 2], None, 1e-10, None).is_err());
        assert!(gmres(&a, &Identity(3), &[1.0; 3], None, 0.0, None).is_err());
    }

    #[test]
    fn singular_operator_reports_underflow() {
        let a = DenseMatrix::from_diagonal(&[1.0, 0.0]);
        let r = gmres(&a, &Identity(2), &[0.0, 1.0], None, 1e-12, None).unwrap();
        assert!(!r.converged);
        assert_eq!(r.breakdown, Some(Breakdown::Underflow));
        assert!(r.solution.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn golden_ratio_divergence() {
        let a = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 0.0]]).unwrap();
        let sys = crate::block::BlockSystem::from_monolithic(&a, 1).unwrap();
        let p = make_preconditioner(&sys, &PrecondTag::DiagMinus.into()).unwrap();
        let f = fixed_point(&sys, &p, &[1.0, 1.0], None, 1e-12, 200).unwrap();
        assert!(!f.converged);
        assert_eq!(f.breakdown, Some(Breakdown::Divergence));
    }
}
