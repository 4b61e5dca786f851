use super::{DenseMatrix, SINGULAR_PIVOT_RATIO};
use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row keeps a window of `2*kl + ku + 1` slots starting at column
/// `i - kl`, leaving room for the fill-in that row pivoting produces, so the
/// factorization can run in place on a copy.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` at (i, j); entries outside the declared band are an error.
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        if i >= self.n || j >= self.n || !self.in_band(i, j) {
            return Err(Error::Dimension(format!(
                "entry ({i}, {j}) outside band kl={} ku={} of order {}",
                self.kl, self.ku, self.n
            )));
        }
        let s = self.slot(i, j);
        self.data[s] += v;
        Ok(())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Banded LU with partial pivoting.
    pub fn factor(&self) -> BandLu {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut f = self.clone();
        let tiny = SINGULAR_PIVOT_RATIO * self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut singular = n > 0 && tiny == 0.0;
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = f.data[f.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = f.data[f.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots.push(p);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (f.slot(k, j), f.slot(p, j));
                    f.data.swap(a, b);
                }
            }
            if best <= tiny {
                singular = true;
                if best == 0.0 {
                    continue;
                }
            }
            let pivot = f.data[f.slot(k, k)];
            for i in k + 1..=last_row {
                let sik = f.slot(i, k);
                let m = f.data[sik] / pivot;
                f.data[sik] = m;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        let (a, b) = (f.slot(i, j), f.slot(k, j));
                        f.data[a] -= m * f.data[b];
                    }
                }
            }
        }
        BandLu {
            f,
            pivots,
            singular,
        }
    }
}

/// Factors produced by [`BandMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandLu {
    f: BandMatrix,
    pivots: Vec<usize>,
    singular: bool,
}

impl BandLu {
    pub fn dim(&self) -> usize {
        self.f.n
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.f.n;
        if self.singular {
            return Err(Error::Singular("banded factorization flagged singular".into()));
        }
        if b.len() != n {
            return Err(Error::Dimension(format!(
                "right-hand side of length {} for banded order {n}",
                b.len()
            )));
        }
        let (kl, ku) = (self.f.kl, self.f.ku);
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    x[i] -= self.f.data[self.f.slot(i, k)] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let hi = (i + kl + ku).min(n - 1);
            let mut s = x[i];
            for j in i + 1..=hi {
                s -= self.f.data[self.f.slot(i, j)] * x[j];
            }
            x[i] = s / self.f.data[self.f.slot(i, i)];
        }
        Ok(x)
    }
}
