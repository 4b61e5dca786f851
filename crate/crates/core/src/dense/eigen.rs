//! Eigenvalues of real dense matrices.
//!
//! The general path balances the matrix, reduces it to upper Hessenberg form
//! with Householder reflectors and runs the implicit Francis double-shift QR
//! iteration with deflation. Only eigenvalues are produced; eigenvectors are
//! recovered where needed by inverse iteration in the spectral module.
//!
//! Symmetric input can take a cheaper route, Householder tridiagonalization
//! followed by implicit QL, which the experiments use for repeated
//! min-magnitude eigenvalue queries on 500x500 matrices.

use num_complex::Complex64;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Default iteration budget per eigenvalue.
pub const DEFAULT_MAX_SWEEPS: usize = 30;

/// Unordered multiset of eigenvalues of a real matrix. Non-real values come in
/// conjugate pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMultiset {
    values: Vec<Complex64>,
}

impl ComplexMultiset {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Values sorted by real part, then imaginary part.
    pub fn sorted(&self) -> Vec<Complex64> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    /// Real parts sorted ascending.
    pub fn real_parts_sorted(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.values.iter().map(|z| z.re).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, z| m.min(z.norm()))
    }

    /// Checks conjugate-pair closure up to `tol`.
    pub fn is_conjugate_closed(&self, tol: f64) -> bool {
        let mut used = vec![false; self.values.len()];
        for (i, z) in self.values.iter().enumerate() {
            if z.im.abs() <= tol || used[i] {
                continue;
            }
            let partner = self.values.iter().enumerate().position(|(j, w)| {
                j != i && !used[j] && (w - z.conj()).norm() <= tol
            });
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                }
                None => return false,
            }
        }
        true
    }
}

#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of a square real matrix via balancing, Householder Hessenberg
/// reduction and Francis double-shift QR.
///
/// Fails with [`Error::Convergence`] when one eigenvalue needs more than
/// `max_sweeps` QR sweeps; the error names the unreduced block.
pub fn eigenvalues_dense(a: &DenseMatrix, max_sweeps: usize) -> Result<ComplexMultiset> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a non-square {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(ComplexMultiset::new(Vec::new()));
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg_in_place(&mut h);
    francis_qr(h.as_mut_slice(), n, max_sweeps.max(1)).map(ComplexMultiset::new)
}

/// Diagonal similarity scaling by powers of two so row and column norms match.
pub(crate) fn balance(a: &mut DenseMatrix) {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                a.row_mut(i).iter_mut().for_each(|v| *v *= g);
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form (similarity transform).
pub fn hessenberg_in_place(a: &mut DenseMatrix) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    for k in 0..n - 2 {
        let alpha_norm = (k + 1..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let alpha = -sign(alpha_norm, x0);
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // Left: A[k+1.., k..] -= beta v (vᵀ A)
        tmp[k..n].iter_mut().for_each(|t| *t = 0.0);
        for i in k + 1..n {
            let vi = v[i];
            let row = &a.row(i)[k..];
            for (t, &aij) in tmp[k..n].iter_mut().zip(row) {
                *t += vi * aij;
            }
        }
        for i in k + 1..n {
            let f = beta * v[i];
            let row = &mut a.row_mut(i)[k..];
            for (aij, &t) in row.iter_mut().zip(&tmp[k..n]) {
                *aij -= f * t;
            }
        }
        // Right: A[.., k+1..] -= beta (A v) vᵀ
        for i in 0..n {
            let row = a.row_mut(i);
            let s: f64 = (k + 1..n).map(|j| row[j] * v[j]).sum();
            let f = beta * s;
            for j in k + 1..n {
                row[j] -= f * v[j];
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

/// Implicit double-shift QR on an upper Hessenberg matrix stored row-major in
/// `h` (destroyed). Eigenvalues only; the active window shrinks by deflation.
fn francis_qr(h: &mut [f64], n: usize, max_sweeps: usize) -> Result<Vec<Complex64>> {
    // 1-based indexing keeps the index arithmetic of the classic formulation.
    macro_rules! a {
        ($i:expr, $j:expr) => {
            h[(($i - 1) as usize) * n + (($j - 1) as usize)]
        };
    }
    let ni = n as isize;
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=ni {
        for j in (i - 1).max(1)..=ni {
            anorm += a!(i, j).abs();
        }
    }

    let mut nn = ni;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0usize;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a!(l - 1, l - 1).abs() + a!(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a!(l, l - 1).abs() + s == s {
                    a!(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a!(nn, nn);
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = 0.0;
                nn -= 1;
            } else {
                let mut y = a!(nn - 1, nn - 1);
                let mut w = a!(nn, nn - 1) * a!(nn - 1, nn);
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    let (u1, u2) = ((nn - 1) as usize, nn as usize);
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[u1] = x + z;
                        wr[u2] = x + z;
                        if z != 0.0 {
                            wr[u2] = x - w / z;
                        }
                        wi[u1] = 0.0;
                        wi[u2] = 0.0;
                    } else {
                        wr[u1] = x + p;
                        wr[u2] = x + p;
                        wi[u1] = -z;
                        wi[u2] = z;
                    }
                    nn -= 2;
                } else {
                    if its >= max_sweeps {
                        return Err(Error::Convergence {
                            lo: (l - 1) as usize,
                            hi: (nn - 1) as usize,
                            sweeps: its,
                        });
                    }
                    if its > 0 && its.is_multiple_of(10) {
                        // exceptional shift
                        t += x;
                        for i in 1..=nn {
                            a!(i, i) -= x;
                        }
                        let s = a!(nn, nn - 1).abs() + a!(nn - 1, nn - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;

                    let mut m = nn - 2;
                    let (mut p, mut q, mut r);
                    let mut z;
                    loop {
                        z = a!(m, m);
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a!(m + 1, m) + a!(m, m + 1);
                        q = a!(m + 1, m + 1) - z - r - s;
                        r = a!(m + 2, m + 1);
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a!(m, m - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a!(m - 1, m - 1).abs() + z.abs() + a!(m + 1, m + 1).abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        a!(i, i - 2) = 0.0;
                        if i != m + 2 {
                            a!(i, i - 3) = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = a!(k, k - 1);
                            q = a!(k + 1, k - 1);
                            r = 0.0;
                            if k != nn - 1 {
                                r = a!(k + 2, k - 1);
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a!(k, k - 1) = -a!(k, k - 1);
                                }
                            } else {
                                a!(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let mut pp = a!(k, j) + q * a!(k + 1, j);
                                if k != nn - 1 {
                                    pp += r * a!(k + 2, j);
                                    a!(k + 2, j) -= pp * z;
                                }
                                a!(k + 1, j) -= pp * y;
                                a!(k, j) -= pp * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let mut pp = x * a!(i, k) + y * a!(i, k + 1);
                                if k != nn - 1 {
                                    pp += z * a!(i, k + 2);
                                    a!(i, k + 2) -= pp * r;
                                }
                                a!(i, k + 1) -= pp * q;
                                a!(i, k) -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l >= nn - 1 {
                break;
            }
        }
    }

    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Eigenvalues of a symmetric matrix, ascending. Only the lower triangle is read.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "symmetric eigenvalues of a non-square {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut w = a.clone();
    let (mut d, mut e) = tridiagonalize(&mut w);
    tridiagonal_ql(&mut d, &mut e)?;
    let mut out = d[1..].to_vec();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Householder tridiagonalization (lower triangle, eigenvalues-only variant).
/// Returns 1-based diagonal `d` and subdiagonal `e` (e[i] couples i-1 and i).
fn tridiagonalize(w: &mut DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = w.rows();
    let data = w.as_mut_slice();
    macro_rules! a {
        ($i:expr, $j:expr) => {
            data[($i - 1) * n + ($j - 1)]
        };
    }
    let mut d = vec![0.0; n + 1];
    let mut e = vec![0.0; n + 1];
    for i in (2..=n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 1 {
            let scale: f64 = (1..=l).map(|k| a!(i, k).abs()).sum();
            if scale == 0.0 {
                e[i] = a!(i, l);
            } else {
                for k in 1..=l {
                    a!(i, k) /= scale;
                    h += a!(i, k) * a!(i, k);
                }
                let f = a!(i, l);
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a!(i, l) = f - g;
                let mut ff = 0.0;
                for j in 1..=l {
                    let mut g = 0.0;
                    for k in 1..=j {
                        g += a!(j, k) * a!(i, k);
                    }
                    for k in j + 1..=l {
                        g += a!(k, j) * a!(i, k);
                    }
                    e[j] = g / h;
                    ff += e[j] * a!(i, j);
                }
                let hh = ff / (h + h);
                for j in 1..=l {
                    let f = a!(i, j);
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 1..=j {
                        a!(j, k) -= f * e[k] + g * a!(i, k);
                    }
                }
            }
        } else {
            e[i] = a!(i, l);
        }
        d[i] = h;
    }
    e[1] = 0.0;
    for i in 1..=n {
        d[i] = a!(i, i);
    }
    (d, e)
}

/// Implicit QL with Wilkinson-style shifts on a symmetric tridiagonal matrix.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len() - 1;
    for i in 2..=n {
        e[i - 1] = e[i];
    }
    e[n] = 0.0;
    for l in 1..=n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() + dd == dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == 60 {
                return Err(Error::Convergence {
                    lo: l - 1,
                    hi: m - 1,
                    sweeps: iter,
                });
            }
            iter += 1;
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + sign(r, g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m - 1;
            let mut early = false;
            loop {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if i == l {
                    break;
                }
                i -= 1;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
