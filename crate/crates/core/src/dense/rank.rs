use super::DenseMatrix;

/// Numerical rank and an orthonormal basis of the null space.
#[derive(Debug, Clone)]
pub struct RankInfo {
    pub rank: usize,
    /// Columns span ker(A); `cols(A) - rank` of them.
    pub nullspace: DenseMatrix,
    /// Threshold that separated retained from discarded diagonal entries of R.
    pub threshold: f64,
}

impl RankInfo {
    pub fn nullity(&self) -> usize {
        self.nullspace.cols()
    }
}

/// Rank via column-pivoted Householder QR of Aᵀ.
///
/// With Aᵀ Π = Q R, the first `rank` columns of Q span range(Aᵀ) and the
/// remaining ones span its orthogonal complement, ker(A). A diagonal entry of
/// R counts toward the rank when it exceeds
/// `max(rows, cols) * eps * ‖A‖_F * tol_scale`.
pub fn rank_and_nullspace(a: &DenseMatrix, tol_scale: f64) -> RankInfo {
    let m = a.rows();
    let n = a.cols();
    // W = Aᵀ, n x m, stored column-major as m columns of length n so each
    // pivot column is contiguous.
    let mut w: Vec<Vec<f64>> = (0..m).map(|i| a.row(i).to_vec()).collect();
    let threshold = (m.max(n) as f64) * f64::EPSILON * a.norm() * tol_scale.max(0.0);

    let steps = m.min(n);
    let mut reflectors: Vec<(usize, Vec<f64>, f64)> = Vec::with_capacity(steps);
    let mut rank = 0;
    for k in 0..steps {
        let (p, best) = (k..m)
            .map(|j| (j, super::norm2(&w[j][k..])))
            .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if best <= threshold {
            break;
        }
        w.swap(k, p);
        let x = &w[k][k..];
        let alpha = if x[0] >= 0.0 { -best } else { best };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vv = super::dot(&v, &v);
        rank += 1;
        if vv == 0.0 {
            continue;
        }
        let beta = 2.0 / vv;
        for col in w.iter_mut().skip(k) {
            let s = beta * super::dot(&v, &col[k..]);
            super::axpy(-s, &v, &mut col[k..]);
        }
        reflectors.push((k, v, beta));
    }

    // Trailing columns of Q = H_0 H_1 ... applied to e_j, j >= rank.
    let nullity = n - rank;
    let mut basis = DenseMatrix::zeros(n, nullity);
    let mut e = vec![0.0; n];
    for (c, j) in (rank..n).enumerate() {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        for (k, v, beta) in reflectors.iter().rev() {
            let s = beta * super::dot(v, &e[*k..]);
            super::axpy(-s, v, &mut e[*k..]);
        }
        basis.set_column(c, &e);
    }

    RankInfo {
        rank,
        nullspace: basis,
        threshold,
    }
}
