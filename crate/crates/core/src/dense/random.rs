use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Seeded stream of uniform doubles.
///
/// The generator is ChaCha8 seeded through `seed_from_u64`; each draw takes the
/// top 53 bits of one `next_u64` output. Both choices are part of the output
/// contract: changing either changes every generated matrix.
#[derive(Debug, Clone)]
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform on [0, 1).
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Next `rows x cols` matrix from the stream, filled row by row.
    pub fn matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Result<DenseMatrix> {
        check_interval(lo, hi)?;
        Ok(DenseMatrix::from_fn(rows, cols, |_, _| self.uniform(lo, hi)))
    }

    pub fn vector(&mut self, len: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
        check_interval(lo, hi)?;
        Ok((0..len).map(|_| self.uniform(lo, hi)).collect())
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Precondition(format!(
            "uniform interval [{lo}, {hi}] is empty or non-finite"
        )));
    }
    Ok(())
}

/// Matrix with i.i.d. entries uniform on [lo, hi), deterministic in `seed`.
pub fn random_uniform_matrix(
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<DenseMatrix> {
    UniformStream::new(seed).matrix(rows, cols, lo, hi)
}
