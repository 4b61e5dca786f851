//! Dense real linear algebra: storage, LU, eigenvalues, rank, random fill,
//! plus the banded and sparse helpers the transport discretization needs.

mod banded;
mod eigen;
mod lu;
mod matrix;
mod random;
mod rank;
mod sparse;

pub use banded::{BandLu, BandMatrix};
pub use eigen::{
    eigenvalues_dense, hessenberg_in_place, symmetric_eigenvalues, ComplexMultiset,
    DEFAULT_MAX_SWEEPS,
};
pub use lu::{lu_factor, lu_solve, lu_solve_matrix, LuFactors, SINGULAR_PIVOT_RATIO};
pub use matrix::DenseMatrix;
pub use random::{random_uniform_matrix, UniformStream};
pub use rank::{rank_and_nullspace, RankInfo};
pub use sparse::SparseMatrix;

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    // Four accumulators let the compiler vectorize without reassociation flags.
    let mut acc = [0.0; 4];
    let chunks = x.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += x[i] * y[i];
        acc[1] += x[i + 1] * y[i + 1];
        acc[2] += x[i + 2] * y[i + 2];
        acc[3] += x[i + 3] * y[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..x.len() {
        s += x[i] * y[i];
    }
    s
}

/// y += a x
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
