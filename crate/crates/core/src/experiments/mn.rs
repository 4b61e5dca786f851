//! The random symmetric test pair M, N and the calibration of ρ.

use log::warn;

use crate::block::BlockSystem;
use crate::dense::{lu_factor, symmetric_eigenvalues, DenseMatrix, UniformStream};
use crate::error::{Error, Result};

use super::ExperimentConfig;

/// Relative agreement required between the min-magnitude eigenvalues of M and N(ρ).
pub const RHO_MATCH_TOL: f64 = 1e-6;
const SCAN_POINTS: usize = 64;
const MAX_CANDIDATE_CHECKS: usize = 8;

/// How ρ was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoMethod {
    /// Solved for the values of ρ at which N(ρ) has eigenvalue ±m directly.
    Crossing,
    /// 64-point scan followed by bisection.
    Bisection,
    /// No root in range; the end of the interval closest to matching was returned.
    Boundary,
}

impl RhoMethod {
    pub fn label(self) -> &'static str {
        match self {
            RhoMethod::Crossing => "crossing",
            RhoMethod::Bisection => "scan+bisection",
            RhoMethod::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RhoCalibration {
    pub rho: f64,
    pub method: RhoMethod,
    /// Min-magnitude eigenvalue of M.
    pub target: f64,
    /// Min-magnitude eigenvalue of N(ρ).
    pub achieved: f64,
}

/// Blocks shared by M and N: `K = A11ᵀA11/c1`, `C = A12/c_o`, `G = A22ᵀA22/c2`.
#[derive(Debug, Clone)]
pub struct MnBlocks {
    pub k: DenseMatrix,
    pub c: DenseMatrix,
    pub g: DenseMatrix,
}

impl MnBlocks {
    /// Draws A11, A12, A22 (in that order) from one stream seeded with `seed`.
    pub fn generate(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n;
        let mut rng = UniformStream::new(cfg.seed);
        let a11 = rng.matrix(n, n, -1.0, 1.0)?;
        let a12 = rng.matrix(n, n, -1.0, 1.0)?;
        let a22 = rng.matrix(n, n, -1.0, 1.0)?;
        let k = symmetrize(a11.transpose_matmul(&a11)?.scaled(1.0 / cfg.c_1));
        let g = symmetrize(a22.transpose_matmul(&a22)?.scaled(1.0 / cfg.c_2));
        Ok(Self {
            k,
            c: a12.scaled(1.0 / cfg.c_o),
            g,
        })
    }

    fn n(&self) -> usize {
        self.k.rows()
    }

    /// `[K C; Cᵀ lower_right]` as a block system.
    pub fn system(&self, lower_right: DenseMatrix) -> Result<BlockSystem> {
        BlockSystem::new(self.k.clone(), self.c.clone(), self.c.transpose(), lower_right)
    }

    pub fn m(&self) -> Result<BlockSystem> {
        self.system(self.g.clone())
    }

    /// N(ρ): lower-right block `ρI - G`.
    pub fn n_block(&self, rho: f64) -> DenseMatrix {
        let mut b = self.g.scaled(-1.0);
        b.add_diagonal(rho);
        b
    }

    fn monolithic(&self, lower_right: &DenseMatrix) -> DenseMatrix {
        let n = self.n();
        let mut a = DenseMatrix::zeros(2 * n, 2 * n);
        a.set_submatrix(0, 0, &self.k);
        a.set_submatrix(0, n, &self.c);
        a.set_submatrix(n, 0, &self.c.transpose());
        a.set_submatrix(n, n, lower_right);
        a
    }

    /// Sorted eigenvalues of the symmetric matrix M.
    pub fn m_eigenvalues(&self) -> Result<Vec<f64>> {
        symmetric_eigenvalues(&self.monolithic(&self.g))
    }

    /// Smallest eigenvalue magnitude of N(ρ).
    pub fn n_min_abs(&self, rho: f64) -> Result<f64> {
        Ok(min_abs(&symmetric_eigenvalues(&self.monolithic(&self.n_block(rho)))?))
    }

    /// Largest admissible ρ, i.e. λ_min(G), so that ρI - G is negative semidefinite.
    pub fn rho_upper_bound(&self) -> Result<f64> {
        Ok(symmetric_eigenvalues(&self.g)?[0])
    }
}

fn symmetrize(a: DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    DenseMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

fn min_abs(v: &[f64]) -> f64 {
    v.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
}

fn matches_target(value: f64, target: f64) -> bool {
    (value - target).abs() <= RHO_MATCH_TOL * target.abs().max(f64::MIN_POSITIVE)
}

/// Chooses ρ in `[-‖M‖₂, λ_min(G)]` so that N(ρ) and M share their smallest
/// eigenvalue magnitude.
///
/// N(ρ) - sI is singular for `s = ±m` exactly when `ρ - s` is an eigenvalue of
/// `G + Cᵀ(K - sI)⁻¹C`, so the candidate values of ρ come from two symmetric
/// eigenproblems of order n. A candidate is accepted once a full eigensolve of
/// N(ρ) confirms that ±m is the smallest magnitude; the largest accepted ρ is
/// returned. When no candidate survives, the scan-and-bisection route runs, and
/// if that also fails the interval end closest to a match is returned with a
/// warning.
pub fn calibrate_rho(blocks: &MnBlocks) -> Result<RhoCalibration> {
    let m_eigs = blocks.m_eigenvalues()?;
    let target = min_abs(&m_eigs);
    let norm_m = m_eigs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let hi = blocks.rho_upper_bound()?;
    let lo = -norm_m;

    let mut candidates = Vec::new();
    for s in [target, -target] {
        let mut ks = blocks.k.clone();
        ks.add_diagonal(-s);
        let f = lu_factor(&ks)?;
        if f.is_singular() {
            continue;
        }
        let x = f.solve_matrix(&blocks.c)?;
        let t = symmetrize(blocks.g.add(&blocks.c.transpose_matmul(&x)?)?);
        for mu in symmetric_eigenvalues(&t)? {
            let rho = s + mu;
            if rho >= lo && rho <= hi {
                candidates.push(rho);
            }
        }
    }
    candidates.sort_by(|a, b| b.total_cmp(a));
    candidates.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    for &rho in candidates.iter().take(MAX_CANDIDATE_CHECKS) {
        let achieved = blocks.n_min_abs(rho)?;
        if matches_target(achieved, target) {
            return Ok(RhoCalibration {
                rho,
                method: RhoMethod::Crossing,
                target,
                achieved,
            });
        }
    }
    calibrate_rho_bisection(blocks, target, lo, hi)
}

/// Scan `[lo, hi]` on 64 points for a sign change of `min|eig N(ρ)| - target`,
/// then bisect in the bracket nearest `hi`. Without a sign change the end point
/// with the smaller relative mismatch is returned.
pub fn calibrate_rho_bisection(blocks: &MnBlocks, target: f64, lo: f64, hi: f64) -> Result<RhoCalibration> {
    if !(lo < hi) {
        return Err(Error::Precondition(format!("empty ρ interval [{lo}, {hi}]")));
    }
    let f = |rho: f64| -> Result<f64> { Ok(blocks.n_min_abs(rho)? - target) };
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&r| f(r)).collect::<Result<_>>()?;

    if let Some(i) = (0..SCAN_POINTS).rev().find(|&i| matches_target(values[i] + target, target)) {
        return Ok(RhoCalibration {
            rho: grid[i],
            method: RhoMethod::Bisection,
            target,
            achieved: values[i] + target,
        });
    }
    let bracket = (0..SCAN_POINTS - 1)
        .rev()
        .find(|&i| values[i].signum() != values[i + 1].signum());
    let Some(i) = bracket else {
        // No root: take the end of the interval whose value comes closest.
        let gap = |v: f64| ((v + target) / target).ln().abs();
        let end = if gap(values[0]) < gap(values[SCAN_POINTS - 1]) { 0 } else { SCAN_POINTS - 1 };
        warn!(
            "no ρ in [{lo:.6e}, {hi:.6e}] matches the min-magnitude eigenvalue {target:.6e}; using the end point {:.6e}",
            grid[end]
        );
        return Ok(RhoCalibration {
            rho: grid[end],
            method: RhoMethod::Boundary,
            target,
            achieved: values[end] + target,
        });
    };
    let (mut a, mut b) = (grid[i], grid[i + 1]);
    let mut fa = values[i];
    let mut mid = 0.5 * (a + b);
    let mut fm = f(mid)?;
    for _ in 0..200 {
        if matches_target(fm + target, target) || (b - a) <= 1e-15 * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if fa.signum() == fm.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
        mid = 0.5 * (a + b);
        fm = f(mid)?;
    }
    Ok(RhoCalibration {
        rho: mid,
        method: RhoMethod::Bisection,
        target,
        achieved: fm + target,
    })
}

/// The pair of Table-style test systems.
#[derive(Debug, Clone)]
pub struct MnPair {
    pub m: BlockSystem,
    pub n: BlockSystem,
    pub calibration: RhoCalibration,
}

/// Builds M and N for a configuration, calibrating ρ.
pub fn gen_mn(cfg: &ExperimentConfig) -> Result<MnPair> {
    let blocks = MnBlocks::generate(cfg)?;
    let calibration = calibrate_rho(&blocks)?;
    Ok(MnPair {
        m: blocks.m()?,
        n: blocks.system(blocks.n_block(calibration.rho))?,
        calibration,
    })
}
