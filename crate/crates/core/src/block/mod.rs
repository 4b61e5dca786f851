//! 2x2 block systems `[A11 A12; A21 A22]`, their (2,2) Schur complement and
//! the block preconditioners built from them.

mod precond;

use std::sync::{Arc, OnceLock};

pub use precond::{
    assemble_preconditioner, make_preconditioner, PrecondTag, PreconditionerInstance,
    PreconditionerKind, SchurMode,
};

use crate::dense::{lu_factor, BandLu, DenseMatrix, LuFactors, SparseMatrix, UniformStream};
use crate::error::{Error, Result};

/// Something that applies the inverse of a diagonal block.
pub trait BlockSolve: Send + Sync {
    fn dim(&self) -> usize;
    fn solve(&self, r: &[f64]) -> Result<Vec<f64>>;
}

/// Something that applies an off-diagonal block.
pub trait BlockMap: Send + Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

impl BlockSolve for LuFactors {
    fn dim(&self) -> usize {
        LuFactors::dim(self)
    }
    fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        LuFactors::solve(self, r)
    }
}

impl BlockSolve for BandLu {
    fn dim(&self) -> usize {
        BandLu::dim(self)
    }
    fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        BandLu::solve(self, r)
    }
}

impl BlockMap for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }
}

impl BlockMap for SparseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }
}

/// A dense block system with a cached factorization of A11.
///
/// The Schur complement `S22 = A22 - A21 A11⁻¹ A12` and the pieces it is made
/// from are computed on first use and then shared; `OnceLock` makes that
/// single-assignment even when the system is shared across threads.
#[derive(Clone)]
pub struct BlockSystem {
    a11: Arc<DenseMatrix>,
    a12: Arc<DenseMatrix>,
    a21: Arc<DenseMatrix>,
    a22: Arc<DenseMatrix>,
    a11_lu: Arc<LuFactors>,
    a11_inv_a12: OnceLock<Arc<DenseMatrix>>,
    s22: OnceLock<Arc<DenseMatrix>>,
    s22_lu: OnceLock<Result<Arc<LuFactors>>>,
    a22_lu: OnceLock<Result<Arc<LuFactors>>>,
}

impl std::fmt::Debug for BlockSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockSystem")
            .field("n1", &self.n1())
            .field("n2", &self.n2())
            .finish_non_exhaustive()
    }
}

impl BlockSystem {
    /// Validates block shapes and factors A11, which must be nonsingular.
    pub fn new(a11: DenseMatrix, a12: DenseMatrix, a21: DenseMatrix, a22: DenseMatrix) -> Result<Self> {
        let n1 = a11.rows();
        let n2 = a22.rows();
        let shapes_ok = a11.is_square()
            && a22.is_square()
            && a12.rows() == n1
            && a12.cols() == n2
            && a21.rows() == n2
            && a21.cols() == n1;
        if !shapes_ok {
            return Err(Error::Dimension(format!(
                "inconsistent blocks: A11 {}x{}, A12 {}x{}, A21 {}x{}, A22 {}x{}",
                a11.rows(),
                a11.cols(),
                a12.rows(),
                a12.cols(),
                a21.rows(),
                a21.cols(),
                a22.rows(),
                a22.cols()
            )));
        }
        let lu = lu_factor(&a11)?;
        if lu.is_singular() {
            return Err(Error::SingularBlock {
                block: "A11",
                detail: "pivot below threshold in LU".into(),
            });
        }
        Ok(Self {
            a11: Arc::new(a11),
            a12: Arc::new(a12),
            a21: Arc::new(a21),
            a22: Arc::new(a22),
            a11_lu: Arc::new(lu),
            a11_inv_a12: OnceLock::new(),
            s22: OnceLock::new(),
            s22_lu: OnceLock::new(),
            a22_lu: OnceLock::new(),
        })
    }

    /// Splits a square matrix after its first `n1` rows and columns.
    pub fn from_monolithic(a: &DenseMatrix, n1: usize) -> Result<Self> {
        if !a.is_square() || n1 > a.rows() {
            return Err(Error::Dimension(format!(
                "cannot split {}x{} at {n1}",
                a.rows(),
                a.cols()
            )));
        }
        let n2 = a.rows() - n1;
        Self::new(
            a.submatrix(0, 0, n1, n1),
            a.submatrix(0, n1, n1, n2),
            a.submatrix(n1, 0, n2, n1),
            a.submatrix(n1, n1, n2, n2),
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

    pub fn a11(&self) -> &DenseMatrix {
        &self.a11
    }

    pub fn a12(&self) -> &DenseMatrix {
        &self.a12
    }

    pub fn a21(&self) -> &DenseMatrix {
        &self.a21
    }

    pub fn a22(&self) -> &DenseMatrix {
        &self.a22
    }

    pub(crate) fn a12_shared(&self) -> Arc<DenseMatrix> {
        Arc::clone(&self.a12)
    }

    pub(crate) fn a21_shared(&self) -> Arc<DenseMatrix> {
        Arc::clone(&self.a21)
    }

    pub fn a11_factors(&self) -> Arc<LuFactors> {
        Arc::clone(&self.a11_lu)
    }

    /// True when A22 is exactly zero.
    pub fn is_saddle_point(&self) -> bool {
        self.a22.max_abs() == 0.0
    }

    /// `A11⁻¹ A12`, computed once.
    pub fn a11_inv_a12(&self) -> &DenseMatrix {
        self.a11_inv_a12.get_or_init(|| {
            Arc::new(
                self.a11_lu
                    .solve_matrix(&self.a12)
                    .expect("A11 factorization verified nonsingular at construction"),
            )
        })
    }

    /// `A21 A11⁻¹ A12`, the part of the Schur complement that couples the blocks.
    pub fn coupling(&self) -> DenseMatrix {
        self.a22.sub(self.assemble_schur()).expect("shapes agree")
    }

    /// `S22 = A22 - A21 A11⁻¹ A12`, assembled on first call and cached.
    pub fn assemble_schur(&self) -> &DenseMatrix {
        self.s22.get_or_init(|| {
            let w = self
                .a21
                .matmul(self.a11_inv_a12())
                .expect("A21 A11⁻¹A12 shapes agree");
            Arc::new(self.a22.sub(&w).expect("S22 shapes agree"))
        })
    }

    /// Cached LU of S22, or the singular-block error.
    pub fn schur_factors(&self) -> Result<Arc<LuFactors>> {
        self.s22_lu
            .get_or_init(|| factor_block(self.assemble_schur(), "S22"))
            .clone()
    }

    /// Cached LU of A22, or the singular-block error.
    pub fn a22_factors(&self) -> Result<Arc<LuFactors>> {
        self.a22_lu.get_or_init(|| factor_block(&self.a22, "A22")).clone()
    }

    /// y = A x by four block products.
    pub fn apply_block(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (n1, n2) = (self.n1(), self.n2());
        if x.len() != n1 + n2 {
            return Err(Error::Dimension(format!(
                "vector of length {} for a block system of order {}",
                x.len(),
                n1 + n2
            )));
        }
        let (x1, x2) = x.split_at(n1);
        let mut y1 = self.a11.matvec(x1);
        crate::dense::axpy(1.0, &self.a12.matvec(x2), &mut y1);
        let mut y2 = self.a21.matvec(x1);
        crate::dense::axpy(1.0, &self.a22.matvec(x2), &mut y2);
        y1.extend(y2);
        Ok(y1)
    }

    pub fn monolithic(&self) -> DenseMatrix {
        let n1 = self.n1();
        let mut a = DenseMatrix::zeros(self.dim(), self.dim());
        a.set_submatrix(0, 0, &self.a11);
        a.set_submatrix(0, n1, &self.a12);
        a.set_submatrix(n1, 0, &self.a21);
        a.set_submatrix(n1, n1, &self.a22);
        a
    }

    /// Same off-diagonal blocks and A11, different A22.
    pub fn with_a22(&self, a22: DenseMatrix) -> Result<BlockSystem> {
        if a22.rows() != self.n2() || a22.cols() != self.n2() {
            return Err(Error::Dimension("replacement A22 has wrong shape".into()));
        }
        Ok(Self {
            a11: Arc::clone(&self.a11),
            a12: Arc::clone(&self.a12),
            a21: Arc::clone(&self.a21),
            a22: Arc::new(a22),
            a11_lu: Arc::clone(&self.a11_lu),
            a11_inv_a12: self.a11_inv_a12.clone(),
            s22: OnceLock::new(),
            s22_lu: OnceLock::new(),
            a22_lu: OnceLock::new(),
        })
    }
}

fn factor_block(m: &DenseMatrix, name: &'static str) -> Result<Arc<LuFactors>> {
    let lu = lu_factor(m)?;
    if lu.is_singular() {
        return Err(Error::SingularBlock {
            block: name,
            detail: "pivot below threshold in LU".into(),
        });
    }
    Ok(Arc::new(lu))
}

/// How to fill A22 in [`random_block_system`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum A22Fill {
    Random,
    Zero,
}

/// Blocks with entries uniform on (-1, 1), drawn in the order A11, A12, A21,
/// A22 from one seeded stream; `shift` is added to the diagonal of A11 (and of
/// A22 when it is random).
pub fn random_block_system(
    n1: usize,
    n2: usize,
    shift: f64,
    a22: A22Fill,
    seed: u64,
) -> Result<BlockSystem> {
    let mut rng = UniformStream::new(seed);
    let mut a11 = rng.matrix(n1, n1, -1.0, 1.0)?;
    a11.add_diagonal(shift);
    let a12 = rng.matrix(n1, n2, -1.0, 1.0)?;
    let a21 = rng.matrix(n2, n1, -1.0, 1.0)?;
    let a22 = match a22 {
        A22Fill::Random => {
            let mut m = rng.matrix(n2, n2, -1.0, 1.0)?;
            m.add_diagonal(shift);
            m
        }
        A22Fill::Zero => DenseMatrix::zeros(n2, n2),
    };
    BlockSystem::new(a11, a12, a21, a22)
}
