//! Small complex dense helpers for inverse iteration and eigen-residuals.

use num_complex::Complex64;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

pub(crate) type CVec = Vec<Complex64>;

pub(crate) fn cnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real matrix times complex vector.
pub(crate) fn real_times_complex(a: &DenseMatrix, v: &[Complex64]) -> CVec {
    (0..a.rows())
        .map(|i| {
            a.row(i)
                .iter()
                .zip(v)
                .fold(Complex64::new(0.0, 0.0), |s, (&aij, &vj)| s + vj * aij)
        })
        .collect()
}

/// Partial-pivoting LU of `A - shift I` for a real `A`.
pub(crate) struct ShiftedLu {
    n: usize,
    lu: CVec,
    piv: Vec<usize>,
}

impl ShiftedLu {
    pub(crate) fn new(a: &DenseMatrix, shift: Complex64) -> Result<Self> {
        let n = a.rows();
        let mut lu: CVec = a.as_slice().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for i in 0..n {
            lu[i * n + i] -= shift;
        }
        let mut piv = Vec::with_capacity(n);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[i * n + k].norm().total_cmp(&lu[j * n + k].norm()))
                .unwrap_or(k);
            piv.push(p);
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu[k * n + k];
            if pivot.norm() == 0.0 {
                return Err(Error::Singular("shifted matrix exactly singular".into()));
            }
            for i in k + 1..n {
                let m = lu[i * n + k] / pivot;
                lu[i * n + k] = m;
                if m.norm_sqr() != 0.0 {
                    for j in k + 1..n {
                        let t = lu[k * n + j];
                        lu[i * n + j] -= m * t;
                    }
                }
            }
        }
        Ok(Self { n, lu, piv })
    }

    pub(crate) fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        for (k, &p) in self.piv.iter().enumerate() {
            b.swap(k, p);
        }
        for i in 1..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s / self.lu[i * n + i];
        }
    }
}

/// Rank of a complex matrix given by columns, via its real 2n x 2m embedding.
pub(crate) fn complex_column_rank(cols: &[CVec], tol_scale: f64) -> usize {
    let n = cols.first().map_or(0, Vec::len);
    let m = cols.len();
    let emb = DenseMatrix::from_fn(2 * n, 2 * m, |i, j| {
        let z = cols[j % m][i % n];
        match (i < n, j < m) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    crate::dense::rank_and_nullspace(&emb, tol_scale).rank / 2
}
