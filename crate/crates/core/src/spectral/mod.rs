//! Closed-form spectra of block-diagonally preconditioned operators.
//!
//! For `D± = diag(A11, ±S22)` the spectrum of `D±⁻¹A` is determined by the
//! generalized eigenvalues λ̃ of the pencil `(A22, S22)`; for the hat kinds
//! `diag(A11, ±A22)` by the generalized eigenvalues λ̂ of `(S22, A22)`. Each
//! generalized eigenvalue yields two eigenvalues of the preconditioned
//! operator, and kernels of the off-diagonal blocks contribute ±1.
//!
//! Everything here is checked against a dense eigensolve of the explicitly
//! formed `P⁻¹A` by [`verify_prediction`].

mod complex;

use num_complex::Complex64;

use complex::{cnorm, complex_column_rank, real_times_complex, CVec, ShiftedLu};

use crate::block::{make_preconditioner, BlockSystem, PrecondTag};
use crate::dense::{
    eigenvalues_dense, lu_factor, rank_and_nullspace, ComplexMultiset, DenseMatrix, UniformStream,
};
use crate::error::{Error, Result};
use crate::krylov::preconditioned_matrix;

const INVERSE_ITERATION_SWEEPS: usize = 50;
const SHIFT_PERTURBATION: f64 = 1e-8;
const PENCIL_RESIDUAL_TOL: f64 = 1e-8;
const DEGENERATE_GAP: f64 = 1e-12;
/// Sweep budget for the dense eigensolves used in verification.
const VERIFY_SWEEPS: usize = 100;

/// Which pencil a generalized eigenvalue belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pencil {
    /// `A22 y = λ̃ S22 y`
    A22VsS22,
    /// `S22 y = λ̂ A22 y`
    S22VsA22,
}

impl Pencil {
    /// The pencil whose eigenvalues parameterize the spectrum of `tag`.
    pub fn for_kind(tag: PrecondTag) -> Result<Pencil> {
        match tag {
            PrecondTag::DiagPlus | PrecondTag::DiagMinus => Ok(Pencil::A22VsS22),
            PrecondTag::DiagHatPlus | PrecondTag::DiagHatMinus => Ok(Pencil::S22VsA22),
            other => Err(Error::UnsupportedKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneralizedEigenpair {
    pub lambda: Complex64,
    /// Eigenvector, present when inverse iteration met the residual target.
    pub y: Option<CVec>,
    pub pencil: Pencil,
    /// `‖L y - λ R y‖ / ((‖L‖ + |λ| ‖R‖) ‖y‖)` for the pencil `(L, R)`.
    pub residual: f64,
}

/// `R⁻¹ L` for the pencil, with the matrices `(L, R)`.
fn pencil_matrices(sys: &BlockSystem, pencil: Pencil) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix)> {
    let s = sys.assemble_schur().clone();
    let a22 = sys.a22().clone();
    let (left, right, factors) = match pencil {
        Pencil::A22VsS22 => (a22, s, sys.schur_factors()?),
        Pencil::S22VsA22 => (s, a22, sys.a22_factors()?),
    };
    let k = factors.solve_matrix(&left)?;
    Ok((k, left, right))
}

/// Generalized eigenvalues only.
pub fn generalized_eigenvalues(sys: &BlockSystem, pencil: Pencil) -> Result<ComplexMultiset> {
    let (k, _, _) = pencil_matrices(sys, pencil)?;
    eigenvalues_dense(&k, VERIFY_SWEEPS)
}

/// Generalized eigenpairs via the eigenvalues of `R⁻¹L` and shifted inverse
/// iteration for the vectors.
///
/// Pairs whose inverse iteration does not reach the pencil residual target
/// keep their eigenvalue and carry `y = None`.
pub fn generalized_eigenpairs(sys: &BlockSystem, pencil: Pencil) -> Result<Vec<GeneralizedEigenpair>> {
    let (k, left, right) = pencil_matrices(sys, pencil)?;
    let values = eigenvalues_dense(&k, VERIFY_SWEEPS)?;
    let n = k.rows();
    let (ln, rn) = (left.norm(), right.norm());
    let mut out = Vec::with_capacity(n);
    for (idx, &mu) in values.values().iter().enumerate() {
        let (y, residual) = match inverse_iteration(&k, mu, idx as u64) {
            Some(y) => {
                let ly = real_times_complex(&left, &y);
                let ry = real_times_complex(&right, &y);
                let r: CVec = ly.iter().zip(&ry).map(|(a, b)| a - mu * b).collect();
                let res = cnorm(&r) / ((ln + mu.norm() * rn) * cnorm(&y)).max(f64::MIN_POSITIVE);
                (Some(y), res)
            }
            None => (None, f64::INFINITY),
        };
        let y = if residual <= PENCIL_RESIDUAL_TOL { y } else { None };
        out.push(GeneralizedEigenpair {
            lambda: mu,
            y,
            pencil,
            residual,
        });
    }
    Ok(out)
}

/// Unit-norm approximate eigenvector of `k` for eigenvalue `mu`.
fn inverse_iteration(k: &DenseMatrix, mu: Complex64, start_seed: u64) -> Option<CVec> {
    let n = k.rows();
    let shift = mu + SHIFT_PERTURBATION * (1.0 + mu.norm());
    let lu = ShiftedLu::new(k, shift).ok()?;
    // Distinct start vectors per index so repeated eigenvalues of a
    // diagonalizable matrix get independent vectors from the eigenspace.
    let mut rng = UniformStream::new(0x5eed ^ start_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut v: CVec = (0..n).map(|_| Complex64::new(rng.uniform(0.5, 1.5), 0.0)).collect();
    let kn = k.norm().max(f64::MIN_POSITIVE);
    for _ in 0..INVERSE_ITERATION_SWEEPS {
        lu.solve(&mut v);
        let nv = cnorm(&v);
        if !nv.is_finite() || nv == 0.0 {
            return None;
        }
        v.iter_mut().for_each(|z| *z /= nv);
        let kv = real_times_complex(k, &v);
        let r: f64 = kv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - mu * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if r <= 1e-13 * kn {
            break;
        }
    }
    Some(v)
}

fn csqrt(z: Complex64) -> Complex64 {
    z.sqrt()
}

/// The two eigenvalues of the preconditioned operator produced by one
/// generalized eigenvalue; λ̃ for `D±`, λ̂ for the hat kinds.
pub fn map_generalized_to_preconditioned(
    lambda: Complex64,
    tag: PrecondTag,
) -> Result<(Complex64, Complex64)> {
    let one = Complex64::new(1.0, 0.0);
    let (center, radius) = match tag {
        PrecondTag::DiagPlus => (
            (lambda + 1.0) * 0.5,
            csqrt((lambda - 1.0) * (lambda + 3.0)) * 0.5,
        ),
        PrecondTag::DiagMinus => (
            -(lambda - 1.0) * 0.5,
            csqrt((lambda - 1.0) * (lambda - 1.0) + 4.0) * 0.5,
        ),
        PrecondTag::DiagHatPlus => (one, csqrt(one - lambda)),
        PrecondTag::DiagHatMinus => (Complex64::new(0.0, 0.0), csqrt(lambda)),
        other => return Err(Error::UnsupportedKind(other.to_string())),
    };
    Ok((center + radius, center - radius))
}

/// `[A11⁻¹A12 y / (λ - 1); y]`, the eigenvector for the formula eigenvalues of
/// every diagonal kind (the first block row of `P⁻¹A` is the same for all).
pub fn build_eigenvector(
    sys: &BlockSystem,
    tag: PrecondTag,
    lambda: Complex64,
    y: &[Complex64],
) -> Result<CVec> {
    if !tag.is_diagonal() {
        return Err(Error::UnsupportedKind(tag.to_string()));
    }
    if y.len() != sys.n2() {
        return Err(Error::Dimension(format!(
            "y has length {}, expected {}",
            y.len(),
            sys.n2()
        )));
    }
    if (lambda - 1.0).norm() <= DEGENERATE_GAP {
        return Err(Error::DegenerateEigenvalue(format!("{lambda}")));
    }
    let inv = 1.0 / (lambda - 1.0);
    let mut v: CVec = real_times_complex(sys.a11_inv_a12(), y)
        .into_iter()
        .map(|z| z * inv)
        .collect();
    v.extend_from_slice(y);
    Ok(v)
}

/// Where a predicted eigenpair comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    FormulaPlus,
    FormulaMinus,
    KernelA12,
    KernelA21,
}

#[derive(Debug, Clone)]
pub struct PredictedPair {
    pub value: Complex64,
    pub vector: Option<CVec>,
    pub origin: Origin,
}

#[derive(Debug, Clone)]
pub struct SpectrumPrediction {
    pub kind: PrecondTag,
    pub pairs: Vec<PredictedPair>,
    pub kernel_mult_a12: usize,
    pub kernel_mult_a21: usize,
    /// Every pair carries a vector and together they span the whole space.
    pub complete_basis: bool,
}

impl SpectrumPrediction {
    pub fn values(&self) -> Vec<Complex64> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

fn real_to_complex(v: &[f64]) -> CVec {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Predicted spectrum and eigenvectors of `P⁻¹A` for a diagonal kind.
///
/// Each vector `y ∈ ker(A12)` is also a generalized eigenvector with
/// eigenvalue 1; the `dim ker(A12)` generalized eigenvalues closest to 1 are
/// therefore replaced by a single eigenvalue each (+1 for the plus kinds, -1
/// for the minus kinds) with vector `[0; y]`. The remaining generalized
/// eigenvalues map to pairs, and the count is topped up to `n1 + n2` with +1
/// eigenvalues whose vectors `[x; 0]` come from `ker(A21)`.
pub fn predict_spectrum(sys: &BlockSystem, tag: PrecondTag) -> Result<SpectrumPrediction> {
    let pencil = Pencil::for_kind(tag)?;
    let gen = generalized_eigenpairs(sys, pencil)?;
    let ker12 = rank_and_nullspace(sys.a12(), 1.0);
    let ker21 = rank_and_nullspace(sys.a21(), 1.0);
    let (k12, k21) = (ker12.nullity(), ker21.nullity());
    let n1 = sys.n1();
    let total = sys.dim();

    let mut order: Vec<usize> = (0..gen.len()).collect();
    order.sort_by(|&a, &b| {
        (gen[a].lambda - 1.0)
            .norm()
            .total_cmp(&(gen[b].lambda - 1.0).norm())
    });
    let kernel_slots: Vec<usize> = order.iter().take(k12).copied().collect();

    let kernel_value = Complex64::new(if tag.is_minus() { -1.0 } else { 1.0 }, 0.0);
    let mut pairs = Vec::with_capacity(total);
    for c in 0..k12 {
        let mut v = vec![Complex64::new(0.0, 0.0); n1];
        v.extend(real_to_complex(&ker12.nullspace.column(c)));
        pairs.push(PredictedPair {
            value: kernel_value,
            vector: Some(v),
            origin: Origin::KernelA12,
        });
    }

    for (i, gp) in gen.iter().enumerate() {
        if kernel_slots.contains(&i) {
            continue;
        }
        let (lp, lm) = map_generalized_to_preconditioned(gp.lambda, tag)?;
        for (value, origin) in [(lp, Origin::FormulaPlus), (lm, Origin::FormulaMinus)] {
            let vector = match &gp.y {
                Some(y) => match build_eigenvector(sys, tag, value, y) {
                    Ok(v) => Some(v),
                    Err(Error::DegenerateEigenvalue(_)) => {
                        // λ = 1 from λ̃ = 1: then A21 A11⁻¹A12 y = 0 and
                        // [A11⁻¹A12 y; 0] is the eigenvector.
                        let mut v = real_times_complex(sys.a11_inv_a12(), y);
                        v.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), sys.n2()));
                        Some(v)
                    }
                    Err(e) => return Err(e),
                },
                None => None,
            };
            pairs.push(PredictedPair {
                value,
                vector,
                origin,
            });
        }
    }

    let fill = total.saturating_sub(pairs.len());
    // For the minus kinds a +1 eigenvector also exists for each y in ker(A12):
    // [x; y] with A21 x = -2 X y, X the (2,2) block of P. For the plus kinds
    // those +1 eigenvalues are defective.
    let minus_solver = if tag.is_minus() && sys.n1() == sys.n2() {
        lu_factor(sys.a21()).ok().filter(|f| !f.is_singular())
    } else {
        None
    };
    let second_block = if tag.is_hat() { sys.a22() } else { sys.assemble_schur() };
    for c in 0..fill {
        let vector = if c < k21 {
            let mut v = real_to_complex(&ker21.nullspace.column(c));
            v.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), sys.n2()));
            Some(v)
        } else {
            let j = c - k21;
            match (&minus_solver, j < k12) {
                (Some(f), true) => {
                    let y = ker12.nullspace.column(j);
                    let rhs: Vec<f64> = second_block.matvec(&y).iter().map(|v| -2.0 * v).collect();
                    f.solve(&rhs).ok().map(|x| {
                        let mut v = real_to_complex(&x);
                        v.extend(real_to_complex(&y));
                        v
                    })
                }
                _ => None,
            }
        };
        pairs.push(PredictedPair {
            value: Complex64::new(1.0, 0.0),
            vector,
            origin: Origin::KernelA21,
        });
    }

    let complete_basis = pairs.len() == total
        && pairs.iter().all(|p| p.vector.is_some())
        && {
            let cols: Vec<CVec> = pairs.iter().filter_map(|p| p.vector.clone()).collect();
            let cols: Vec<CVec> = cols
                .into_iter()
                .map(|v| {
                    let n = cnorm(&v);
                    v.into_iter().map(|z| z / n).collect()
                })
                .collect();
            complex_column_rank(&cols, 1e4) == total
        };

    Ok(SpectrumPrediction {
        kind: tag,
        pairs,
        kernel_mult_a12: k12,
        kernel_mult_a21: k21,
        complete_basis,
    })
}

/// Builds a system whose pencil `(A22, S22)` has exactly the prescribed
/// eigenvalues: `A11 = A12 = I`, `A21 = S (T - I)`, `A22 = S T` with
/// `T = V diag(λ̃) V⁻¹` and `S`, `V` random perturbations of `2I`.
pub fn synthesize_prescribed(n1: usize, n2: usize, lambda_tilde: &[f64], seed: u64) -> Result<BlockSystem> {
    if n1 != n2 {
        return Err(Error::Precondition(format!(
            "prescribed-spectrum synthesis needs square A12 (n1 = n2), got {n1} and {n2}"
        )));
    }
    if lambda_tilde.len() != n2 {
        return Err(Error::Dimension(format!(
            "{} eigenvalues prescribed for n2 = {n2}",
            lambda_tilde.len()
        )));
    }
    if let Some(i) = lambda_tilde.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    let n = n2;
    let mut rng = UniformStream::new(seed);
    let scale = 1.0 / (n as f64).sqrt();
    let mut s = rng.matrix(n, n, -scale, scale)?;
    s.add_diagonal(2.0);
    let mut v = rng.matrix(n, n, -scale, scale)?;
    v.add_diagonal(2.0);
    let vinv = lu_factor(&v)?.solve_matrix(&DenseMatrix::identity(n))?;
    let shifted: Vec<f64> = lambda_tilde.iter().map(|l| l - 1.0).collect();
    let mut vd = v.clone();
    for i in 0..n {
        for (j, d) in shifted.iter().enumerate() {
            vd[(i, j)] *= d;
        }
    }
    let t_minus_i = vd.matmul(&vinv)?;
    let a21 = s.matmul(&t_minus_i)?;
    let a22 = s.add(&a21)?;
    BlockSystem::new(DenseMatrix::identity(n), DenseMatrix::identity(n), a21, a22)
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub kind: PrecondTag,
    /// Largest `‖P⁻¹A v - λ v‖ / ‖v‖` over predicted pairs that carry vectors.
    pub max_residual: f64,
    pub pairs_without_vector: usize,
    /// Symmetric Hausdorff distance between predicted and computed values.
    pub hausdorff: f64,
    /// Multiplicity-aware distance (see [`multiset_distance`]).
    pub multiset_distance: f64,
    pub kernel_a12: usize,
    pub kernel_a21: usize,
    pub complete_basis: bool,
    pub predicted: Vec<Complex64>,
    pub computed: Vec<Complex64>,
    pub passed: bool,
}

/// Compares the prediction with a dense eigensolve of the explicit `P⁻¹A`.
/// Passes when both the eigen-residual and the multiset distance are `<= tol`;
/// pairs without a vector (defective eigenvalues) are counted, not failed.
pub fn verify_prediction(sys: &BlockSystem, tag: PrecondTag, tol: f64) -> Result<VerificationReport> {
    let prediction = predict_spectrum(sys, tag)?;
    let prec = make_preconditioner(sys, &tag.into())?;
    let pa = preconditioned_matrix(sys, &prec)?;
    let computed = eigenvalues_dense(&pa, VERIFY_SWEEPS)?.into_values();
    let predicted = prediction.values();

    let mut max_residual: f64 = 0.0;
    let mut missing = 0;
    for p in &prediction.pairs {
        match &p.vector {
            Some(v) => {
                let av = real_times_complex(&pa, v);
                let r: CVec = av.iter().zip(v).map(|(a, b)| a - p.value * b).collect();
                max_residual = max_residual.max(cnorm(&r) / cnorm(v));
            }
            None => missing += 1,
        }
    }
    let hausdorff = hausdorff_distance(&predicted, &computed);
    let multiset = multiset_distance(&predicted, &computed);
    let passed = max_residual <= tol && multiset <= tol;
    Ok(VerificationReport {
        kind: tag,
        max_residual,
        pairs_without_vector: missing,
        hausdorff,
        multiset_distance: multiset,
        kernel_a12: prediction.kernel_mult_a12,
        kernel_a21: prediction.kernel_mult_a21,
        complete_basis: prediction.complete_basis,
        predicted,
        computed,
        passed,
    })
}

/// Largest distance from a point of `a` to its nearest point of `b`.
pub fn distance_to_set(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .map(|z| b.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

pub fn hausdorff_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    distance_to_set(a, b).max(distance_to_set(b, a))
}

/// Multiplicity-aware distance between two eigenvalue multisets.
///
/// The union is grouped into clusters (single linkage, radius `1e-5 max(1,|z|)`).
/// Within a cluster the two sides must have equal counts, otherwise the
/// distance is infinite; the cluster contributes the distance between the
/// centroids of its two sides. Comparing centroids makes the measure
/// insensitive to the `sqrt(eps)` splitting of defective eigenvalues, whose
/// mean is accurate to rounding.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let all: Vec<(Complex64, bool)> = a
        .iter()
        .map(|&z| (z, true))
        .chain(b.iter().map(|&z| (z, false)))
        .collect();
    let m = all.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..m {
        for j in i + 1..m {
            let (zi, zj) = (all[i].0, all[j].0);
            let radius = 1e-5 * zi.norm().max(zj.norm()).max(1.0);
            if (zi - zj).norm() <= radius {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut clusters: std::collections::BTreeMap<usize, (Complex64, usize, Complex64, usize)> =
        std::collections::BTreeMap::new();
    for (i, &(z, from_a)) in all.iter().enumerate() {
        let r = find(&mut parent, i);
        let e = clusters
            .entry(r)
            .or_insert((Complex64::new(0.0, 0.0), 0, Complex64::new(0.0, 0.0), 0));
        if from_a {
            e.0 += z;
            e.1 += 1;
        } else {
            e.2 += z;
            e.3 += 1;
        }
    }
    clusters.values().fold(0.0, |d, &(sa, ca, sb, cb)| {
        if ca != cb {
            f64::INFINITY
        } else {
            d.max((sa / ca as f64 - sb / cb as f64).norm())
        }
    })
}
