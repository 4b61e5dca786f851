//! Mixed finite-element assembly of the VEF moment system.

use std::sync::Arc;

use super::{fem_rule, EddingtonField, TransportProblem, FEM_POINTS, MARSHAK_FACTOR};
use crate::block::BlockSystem;
use crate::dense::{BandMatrix, DenseMatrix, SparseMatrix};
use crate::error::{Error, Result};

/// Whether the second block row is kept as derived or scaled by `-1/3`, which
/// makes the operator symmetric when `E ≡ 1/3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VefVariant {
    Nonsymmetric,
    Symmetrized,
}

impl VefVariant {
    pub fn row2_scale(self) -> f64 {
        match self {
            VefVariant::Nonsymmetric => 1.0,
            VefVariant::Symmetrized => -1.0 / 3.0,
        }
    }
}

/// Assembled blocks of `[A11, A12; A21, A22] [J; φ] = [g; f]`.
///
/// J lives on the `2 n + 1` continuous quadratic nodes; φ has two
/// discontinuous linear values per element, `2e` at the left end and `2e + 1`
/// at the right end of element `e`.
#[derive(Debug, Clone)]
pub struct VefDiscretization {
    pub problem: TransportProblem,
    pub eddington: EddingtonField,
    pub variant: VefVariant,
    /// Node coordinates of the quadratic space.
    pub nodes: Vec<f64>,
    /// `∫ σ_t v_i v_j` alone.
    pub mass_t: SparseMatrix,
    /// `∫ σ_a u_i u_j`, block diagonal per element.
    pub mass_a: SparseMatrix,
    /// `∫ u_i v_j'`.
    pub divergence: SparseMatrix,
    /// `∫ v_i' E u_j`.
    pub gradient: SparseMatrix,
    /// `A11 = M_t` plus the Marshak boundary terms `2 E_b` at the end nodes.
    pub a11: Arc<SparseMatrix>,
    /// Row sums of `A11`.
    pub a11_lumped: Vec<f64>,
    /// `-G`.
    pub a12: Arc<SparseMatrix>,
    /// `B`, times the row scale.
    pub a21: Arc<SparseMatrix>,
    /// `M_a`, times the row scale.
    pub a22: Arc<SparseMatrix>,
    pub rhs: Vec<f64>,
}

// Quadratic Lagrange basis on [0, 1] with nodes 0, 1/2, 1, and derivatives in t.
fn quad_basis(t: f64) -> [f64; 3] {
    [(1.0 - t) * (1.0 - 2.0 * t), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)]
}

fn quad_basis_dt(t: f64) -> [f64; 3] {
    [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0]
}

fn linear_basis(t: f64) -> [f64; 2] {
    [1.0 - t, t]
}

/// Builds the VEF block system for a given Eddington field. Zero inflow adds
/// nothing to the right-hand side; isotropic inflow `ψ̄` contributes `±2 E_b ψ̄`.
pub fn assemble_vef(problem: &TransportProblem, e: &EddingtonField, variant: VefVariant) -> Result<VefDiscretization> {
    problem.validate()?;
    let n = problem.n_elements;
    if e.interior.len() != n * FEM_POINTS {
        return Err(Error::Dimension(format!(
            "Eddington field has {} interior values, the mesh needs {}",
            e.interior.len(),
            n * FEM_POINTS
        )));
    }
    let h = problem.element_length();
    let n1 = problem.h1_nodes();
    let n2 = 2 * n;
    let (tq, wq) = fem_rule();

    let mut mass_t = SparseMatrix::zeros(n1, n1);
    let mut mass_a = SparseMatrix::zeros(n2, n2);
    let mut divergence = SparseMatrix::zeros(n2, n1);
    let mut gradient = SparseMatrix::zeros(n1, n2);
    let mut f = vec![0.0; n2];
    for el in 0..n {
        let j0 = 2 * el;
        let p0 = 2 * el;
        for (q, (&t, &w)) in tq.iter().zip(&wq).enumerate() {
            let nv = quad_basis(t);
            let dv = quad_basis_dt(t);
            let u = linear_basis(t);
            let eq = e.interior[el * FEM_POINTS + q];
            for a in 0..3 {
                for b in 0..3 {
                    mass_t.add(j0 + a, j0 + b, w * h * problem.sigma_t * nv[a] * nv[b])?;
                }
                for c in 0..2 {
                    // dv/dx = dv/dt / h, and dx = h dt.
                    divergence.add(p0 + c, j0 + a, w * u[c] * dv[a])?;
                    gradient.add(j0 + a, p0 + c, w * dv[a] * eq * u[c])?;
                }
            }
            for c in 0..2 {
                f[p0 + c] += w * h * problem.source * u[c];
                if problem.sigma_a != 0.0 {
                    for d in 0..2 {
                        mass_a.add(p0 + c, p0 + d, w * h * problem.sigma_a * u[c] * u[d])?;
                    }
                }
            }
        }
    }

    let mut a11 = mass_t.clone();
    let bl = e.left / MARSHAK_FACTOR;
    let br = e.right / MARSHAK_FACTOR;
    a11.add(0, 0, bl)?;
    a11.add(n1 - 1, n1 - 1, br)?;
    let mut g = vec![0.0; n1];
    g[0] += bl * problem.inflow_left;
    g[n1 - 1] -= br * problem.inflow_right;
    let a11_lumped: Vec<f64> = (0..n1).map(|i| a11.row_entries(i).iter().map(|&(_, v)| v).sum()).collect();

    let s = variant.row2_scale();
    let mut rhs = g;
    rhs.extend(f.iter().map(|v| s * v));
    Ok(VefDiscretization {
        problem: problem.clone(),
        eddington: e.clone(),
        variant,
        nodes: (0..n1).map(|k| 0.5 * k as f64 * h).collect(),
        a12: Arc::new(gradient.scaled(-1.0)),
        a21: Arc::new(divergence.scaled(s)),
        a22: Arc::new(mass_a.scaled(s)),
        a11: Arc::new(a11),
        a11_lumped,
        mass_t,
        mass_a,
        divergence,
        gradient,
        rhs,
    })
}

impl VefDiscretization {
    /// `E ≡ 1/3` with the second row scaled by `-1/3`.
    pub fn symmetric(problem: &TransportProblem) -> Result<Self> {
        assemble_vef(
            problem,
            &EddingtonField::constant(problem.n_elements, 1.0 / 3.0),
            VefVariant::Symmetrized,
        )
    }

    pub fn n1(&self) -> usize {
        self.a11.rows()
    }

    pub fn n2(&self) -> usize {
        self.a22.rows()
    }

    pub fn dim(&self) -> usize {
        self.n1() + self.n2()
    }

    /// `A11` as a band matrix (bandwidth 2).
    pub fn a11_band(&self) -> BandMatrix {
        let n1 = self.n1();
        let mut m = BandMatrix::zeros(n1, 2, 2);
        for i in 0..n1 {
            for &(j, v) in self.a11.row_entries(i) {
                m.add(i, j, v).expect("quadratic elements couple nodes at most 2 apart");
            }
        }
        m
    }

    /// Position of J node `k` and φ value `p` in the element-interleaved
    /// ordering `J_0 J_1 φ_0 φ_1 J_2 J_3 φ_2 φ_3 ... J_2n`, in which the
    /// monolithic matrix has bandwidth 4.
    pub(crate) fn interleaved_j(k: usize) -> usize {
        4 * (k / 2) + k % 2
    }

    pub(crate) fn interleaved_phi(p: usize) -> usize {
        4 * (p / 2) + 2 + p % 2
    }

    /// Monolithic matrix in the interleaved ordering.
    pub fn monolithic_band(&self) -> BandMatrix {
        let (n1, n2) = (self.n1(), self.n2());
        let mut m = BandMatrix::zeros(n1 + n2, 4, 4);
        let put = |m: &mut BandMatrix, i: usize, j: usize, v: f64| {
            m.add(i, j, v).expect("element couplings lie within bandwidth 4");
        };
        for i in 0..n1 {
            for &(j, v) in self.a11.row_entries(i) {
                put(&mut m, Self::interleaved_j(i), Self::interleaved_j(j), v);
            }
            for &(j, v) in self.a12.row_entries(i) {
                put(&mut m, Self::interleaved_j(i), Self::interleaved_phi(j), v);
            }
        }
        for i in 0..n2 {
            for &(j, v) in self.a21.row_entries(i) {
                put(&mut m, Self::interleaved_phi(i), Self::interleaved_j(j), v);
            }
            for &(j, v) in self.a22.row_entries(i) {
                put(&mut m, Self::interleaved_phi(i), Self::interleaved_phi(j), v);
            }
        }
        m
    }

    /// `A22 - A21 Ã11⁻¹ A12` with the lumped (diagonal) `A11`, as a band
    /// matrix in φ ordering (neighboring elements couple through shared nodes).
    pub fn lumped_schur(&self) -> BandMatrix {
        let n2 = self.n2();
        let mut s = BandMatrix::zeros(n2, 3, 3);
        for i in 0..n2 {
            for &(j, v) in self.a22.row_entries(i) {
                s.add(i, j, v).expect("M_a is block diagonal");
            }
            for &(k, b) in self.a21.row_entries(i) {
                let scale = b / self.a11_lumped[k];
                for &(j, g) in self.a12.row_entries(k) {
                    s.add(i, j, -scale * g).expect("shared nodes couple neighboring elements only");
                }
            }
        }
        s
    }

    /// Dense block system, for small meshes and cross-checks.
    pub fn to_block_system(&self) -> Result<BlockSystem> {
        BlockSystem::new(
            self.a11.to_dense(),
            self.a12.to_dense(),
            self.a21.to_dense(),
            self.a22.to_dense(),
        )
    }

    /// `[A11 A12; A21 A22]` applied to `[x1; x2]`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (x1, x2) = x.split_at(self.n1());
        let mut y1 = self.a11.matvec(x1);
        for (a, b) in y1.iter_mut().zip(self.a12.matvec(x2)) {
            *a += b;
        }
        let mut y2 = self.a21.matvec(x1);
        for (a, b) in y2.iter_mut().zip(self.a22.matvec(x2)) {
            *a += b;
        }
        y1.extend(y2);
        y1
    }

    /// Dense monolithic matrix in block ordering.
    pub fn monolithic_dense(&self) -> DenseMatrix {
        let (n1, n2) = (self.n1(), self.n2());
        let mut m = DenseMatrix::zeros(n1 + n2, n1 + n2);
        m.set_submatrix(0, 0, &self.a11.to_dense());
        m.set_submatrix(0, n1, &self.a12.to_dense());
        m.set_submatrix(n1, 0, &self.a21.to_dense());
        m.set_submatrix(n1, n1, &self.a22.to_dense());
        m
    }
}
