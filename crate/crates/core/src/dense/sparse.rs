use super::DenseMatrix;
use crate::error::{Error, Result};

/// Row-list sparse matrix; just enough to apply finite-element couplings
/// without storing their zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Vec::new(); rows],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Accumulates `v` into (i, j).
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        if i >= self.rows || j >= self.cols {
            return Err(Error::Dimension(format!(
                "entry ({i}, {j}) outside {}x{}",
                self.rows, self.cols
            )));
        }
        let row = &mut self.entries[i];
        match row.iter_mut().find(|(c, _)| *c == j) {
            Some((_, x)) => *x += v,
            None => row.push((j, v)),
        }
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i]
            .iter()
            .find(|(c, _)| *c == j)
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn row_entries(&self, i: usize) -> &[(usize, f64)] {
        &self.entries[i]
    }

    pub fn nnz(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "sparse matvec dimension mismatch");
        self.entries
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "sparse transpose matvec dimension mismatch");
        let mut y = vec![0.0; self.cols];
        for (row, &xi) in self.entries.iter().zip(x) {
            for &(j, v) in row {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = SparseMatrix::zeros(self.cols, self.rows);
        for (i, row) in self.entries.iter().enumerate() {
            for &(j, v) in row {
                t.entries[j].push((i, v));
            }
        }
        t
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        for row in &mut out.entries {
            for e in row.iter_mut() {
                e.1 *= s;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (i, row) in self.entries.iter().enumerate() {
            for &(j, v) in row {
                d[(i, j)] += v;
            }
        }
        d
    }

    pub fn from_dense(d: &DenseMatrix) -> SparseMatrix {
        let mut s = SparseMatrix::zeros(d.rows(), d.cols());
        for i in 0..d.rows() {
            s.entries[i] = d
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, &v)| (j, v))
                .collect();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulates_and_applies() {
        let mut s = SparseMatrix::zeros(2, 3);
        s.add(0, 1, 2.0).unwrap();
        s.add(0, 1, 0.5).unwrap();
        s.add(1, 2, -1.0).unwrap();
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.get(0, 1), 2.5);
        assert_eq!(s.matvec(&[1.0, 1.0, 1.0]), vec![2.5, -1.0]);
        assert_eq!(s.matvec_transpose(&[1.0, 2.0]), vec![0.0, 2.5, -2.0]);
        assert_eq!(s.transpose().to_dense(), s.to_dense().transpose());
        assert_eq!(SparseMatrix::from_dense(&s.to_dense()), s);
        assert!(s.add(2, 0, 1.0).is_err());
    }
}
