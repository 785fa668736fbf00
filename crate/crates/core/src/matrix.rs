//! Dense row-major design matrices and exactly symmetric square matrices.

use crate::error::{Error, Result};

/// A real `n x p` matrix stored row-major: `n` observations, `p` features.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidMatrix(format!("dimensions must be positive, got {n}x{p}")));
        }
        let expected = n.checked_mul(p).ok_or_else(|| Error::InvalidMatrix("n*p overflows".into()))?;
        if data.len() != expected {
            return Err(Error::InvalidMatrix(format!(
                "expected {expected} entries for {n}x{p}, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                pos / p,
                pos % p
            )));
        }
        Ok(Self { n, p, data })
    }

    pub fn zeros(n: usize, p: usize) -> Result<Self> {
        Self::new(n, p, vec![0.0; n * p])
    }

    /// `n x p` matrix with ones on the main diagonal.
    pub fn identity(n: usize, p: usize) -> Result<Self> {
        let mut m = Self::zeros(n, p)?;
        for i in 0..n.min(p) {
            m.data[i * p + i] = 1.0;
        }
        Ok(m)
    }

    /// Builds a matrix from its columns, each of the same length `n`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidMatrix("columns have different lengths".into()));
        }
        let mut data = vec![0.0; n * p];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                data[i * p + j] = *v;
            }
        }
        Self::new(n, p, data)
    }

    /// Builds a matrix from a generator called in row-major order.
    pub fn from_fn(n: usize, p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(n * p);
        for i in 0..n {
            for j in 0..p {
                data.push(f(i, j));
            }
        }
        Self::new(n, p, data)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    /// Columns copied out into contiguous storage.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        let mut cols = vec![Vec::with_capacity(self.n); self.p];
        for row in self.data.chunks_exact(self.p) {
            for (c, v) in cols.iter_mut().zip(row) {
                c.push(*v);
            }
        }
        cols
    }

    /// Multiplies column `j` by `c`.
    pub fn scale_column(&mut self, j: usize, c: f64) {
        for i in 0..self.n {
            self.data[i * self.p + j] *= c;
        }
    }

    /// Reorders columns so that new column `t` is old column `perm[t]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.p {
            return Err(Error::InvalidParameter("permutation length differs from p".into()));
        }
        Self::from_fn(self.n, self.p, |i, t| self.get(i, perm[t]))
    }

    /// `X u` for a dense `u` of length `p`.
    pub fn mul_vec(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.p, "vector length must equal p");
        self.data
            .chunks_exact(self.p)
            .map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// The Gram matrix `X^T X`.
    pub fn gram(&self) -> SymmetricMatrix {
        let cols = self.columns();
        let p = self.p;
        let mut g = SymmetricMatrix::zeros(p);
        for a in 0..p {
            for b in a..p {
                g.set(a, b, dot(&cols[a], &cols[b]));
            }
        }
        g
    }
}

/// Dot product with four independent accumulators.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// A square matrix whose `(i, j)` and `(j, i)` entries are always equal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from a full row-major square array, rejecting asymmetric input.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!("expected {} entries", dim * dim)));
        }
        for i in 0..dim {
            for j in 0..i {
                if data[i * dim + j] != data[j * dim + i] {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self { dim, data })
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Principal submatrix on the given (ordered) index set.
    pub fn principal(&self, idx: &[usize]) -> SymmetricMatrix {
        SymmetricMatrix::from_upper(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `u^T M u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            s += u[i] * dot(row, u);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(DesignMatrix::new(0, 2, vec![]).is_err());
        assert!(DesignMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DesignMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DesignMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn gram_of_duplicated_column() {
        let x = DesignMatrix::from_columns(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let g = x.gram();
        assert_eq!(g.as_slice(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn from_rows_checks_symmetry() {
        assert!(SymmetricMatrix::from_rows(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
        assert!(SymmetricMatrix::from_rows(2, vec![0.0, 1.0, 1.5, 0.0]).is_err());
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..11).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}
