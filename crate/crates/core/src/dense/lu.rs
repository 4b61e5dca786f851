use super::DenseMatrix;
use crate::error::{Error, Result};

/// Relative pivot magnitude below which a factorization is flagged singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

/// Partial-pivoting LU factors, `P A = L U`, with L unit lower triangular
/// stored below the diagonal of `lu` and U on and above it.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    /// LAPACK-style interchanges: at step k, row k was swapped with `pivots[k]`.
    pivots: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn packed(&self) -> &DenseMatrix {
        &self.lu
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Permutation sign, ±1.
    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn determinant(&self) -> f64 {
        (0..self.dim()).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }

    pub fn lower(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[(i, j)],
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => 0.0,
        })
    }

    pub fn upper(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| if j >= i { self.lu[(i, j)] } else { 0.0 })
    }

    /// Applies the row interchanges to a copy of `a`, giving `P a`.
    pub fn permute_rows(&self, a: &DenseMatrix) -> DenseMatrix {
        let mut out = a.clone();
        for (k, &p) in self.pivots.iter().enumerate() {
            if p != k {
                for j in 0..out.cols() {
                    let t = out[(k, j)];
                    out[(k, j)] = out[(p, j)];
                    out[(p, j)] = t;
                }
            }
        }
        out
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        lu_solve(self, b)
    }

    pub fn solve_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        lu_solve_matrix(self, b)
    }

    fn check_usable(&self, rhs_len: usize) -> Result<()> {
        if self.singular {
            return Err(Error::Singular(
                "factorization flagged singular; solve refused".into(),
            ));
        }
        if rhs_len != self.dim() {
            return Err(Error::Dimension(format!(
                "right-hand side of length {rhs_len} for a {0}x{0} factorization",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Partial-pivoting LU factorization.
///
/// The factorization always completes; `is_singular` is set when some pivot
/// falls below `1e-14 * max|A|` (a zero matrix is singular).
pub fn lu_factor(a: &DenseMatrix) -> Result<LuFactors> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "LU of a non-square {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let scale = a.max_abs();
    let tiny = SINGULAR_PIVOT_RATIO * scale;
    let mut lu = a.clone();
    let mut pivots = Vec::with_capacity(n);
    let mut sign = 1.0;
    let mut singular = scale == 0.0 && n > 0;

    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for i in k + 1..n {
            let v = lu[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        pivots.push(p);
        if p != k {
            sign = -sign;
            let cols = lu.cols();
            let data = lu.as_mut_slice();
            for j in 0..cols {
                data.swap(k * cols + j, p * cols + j);
            }
        }
        if best <= tiny {
            singular = true;
            if best == 0.0 {
                continue;
            }
        }
        let pivot = lu[(k, k)];
        let cols = lu.cols();
        let data = lu.as_mut_slice();
        let (head, tail) = data.split_at_mut((k + 1) * cols);
        let pivot_row = &head[k * cols + k + 1..k * cols + cols];
        for i in 0..n - k - 1 {
            let row = &mut tail[i * cols..(i + 1) * cols];
            let m = row[k] / pivot;
            row[k] = m;
            if m != 0.0 {
                super::axpy(-m, pivot_row, &mut row[k + 1..]);
            }
        }
    }

    Ok(LuFactors {
        lu,
        pivots,
        sign,
        singular,
    })
}

pub fn lu_solve(f: &LuFactors, b: &[f64]) -> Result<Vec<f64>> {
    f.check_usable(b.len())?;
    let n = f.dim();
    let lu = &f.lu;
    let mut x = b.to_vec();
    for (k, &p) in f.pivots.iter().enumerate() {
        x.swap(k, p);
    }
    for i in 1..n {
        let s = super::dot(&lu.row(i)[..i], &x[..i]);
        x[i] -= s;
    }
    for i in (0..n).rev() {
        let s = super::dot(&lu.row(i)[i + 1..], &x[i + 1..]);
        x[i] = (x[i] - s) / lu[(i, i)];
    }
    Ok(x)
}

/// Solves for every column of `b` at once; row-oriented so each step is an axpy.
pub fn lu_solve_matrix(f: &LuFactors, b: &DenseMatrix) -> Result<DenseMatrix> {
    f.check_usable(b.rows())?;
    let n = f.dim();
    let m = b.cols();
    let lu = &f.lu;
    let mut x = f.permute_rows(b);
    let data = x.as_mut_slice();
    for i in 1..n {
        let (done, rest) = data.split_at_mut(i * m);
        let xi = &mut rest[..m];
        for (k, &l) in lu.row(i)[..i].iter().enumerate() {
            if l != 0.0 {
                super::axpy(-l, &done[k * m..(k + 1) * m], xi);
            }
        }
    }
    for i in (0..n).rev() {
        let (head, done) = data.split_at_mut((i + 1) * m);
        let xi = &mut head[i * m..];
        for (k, &u) in lu.row(i)[i + 1..].iter().enumerate() {
            if u != 0.0 {
                super::axpy(-u, &done[k * m..(k + 1) * m], xi);
            }
        }
        let d = 1.0 / lu[(i, i)];
        xi.iter_mut().for_each(|v| *v *= d);
    }
    Ok(x)
}
