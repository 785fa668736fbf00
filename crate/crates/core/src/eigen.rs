//! Symmetric eigenvalue routines.
//!
//! Small and moderate matrices go through cyclic Jacobi, which keeps exact
//! symmetry and is accurate to a few ulps of the matrix norm. The largest
//! eigenvalue of big structured operators (graph adjacency) goes through
//! Lanczos with full reorthogonalization, which only needs matrix-vector
//! products.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{dot, SymmetricMatrix};
use crate::rng;

pub const JACOBI_TOLERANCE: f64 = 1e-10;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) and optionally eigenvectors (columns, row-major).
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<f64>>,
}

/// Extreme eigenvalues `(lambda_min, lambda_max)`.
pub fn symmetric_eigen_range(m: &SymmetricMatrix) -> Result<(f64, f64)> {
    let e = jacobi(m, false)?;
    match (e.values.first(), e.values.last()) {
        (Some(lo), Some(hi)) => Ok((*lo, *hi)),
        _ => Ok((0.0, 0.0)),
    }
}

/// Spectral norm of a symmetric matrix, i.e. its largest absolute eigenvalue.
pub fn symmetric_op_norm(m: &SymmetricMatrix) -> Result<f64> {
    let (lo, hi) = symmetric_eigen_range(m)?;
    Ok(lo.abs().max(hi.abs()))
}

fn off_diagonal_norm(a: &[f64], n: usize) -> (f64, f64) {
    let mut off = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = a[i * n + j] * a[i * n + j];
            total += v;
            if i != j {
                off += v;
            }
        }
    }
    (off.sqrt(), total.sqrt())
}

/// Cyclic Jacobi eigendecomposition.
pub fn jacobi(m: &SymmetricMatrix, with_vectors: bool) -> Result<Eigen> {
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    let mut v = with_vectors.then(|| {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        id
    });
    jacobi_in_place(&mut a, n, v.as_deref_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = v.map(|v| {
        let mut sorted = vec![0.0; n * n];
        for (new, &old) in order.iter().enumerate() {
            for k in 0..n {
                sorted[k * n + new] = v[k * n + old];
            }
        }
        sorted
    });
    Ok(Eigen { values, vectors })
}

/// Extreme eigenvalues of the symmetric `n x n` row-major array `a`,
/// which is overwritten.
pub fn jacobi_extremes_in_place(a: &mut [f64], n: usize) -> Result<(f64, f64)> {
    jacobi_in_place(a, n, None)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        lo = lo.min(a[i * n + i]);
        hi = hi.max(a[i * n + i]);
    }
    Ok((lo, hi))
}

/// Diagonalizes `a` in place; accumulates rotations into `v` when given.
fn jacobi_in_place(a: &mut [f64], n: usize, mut v: Option<&mut [f64]>) -> Result<()> {
    let (_, frob) = off_diagonal_norm(a, n);
    // absolute target, relaxed only when roundoff in the matrix norm makes it unreachable
    let tol = (0.1 * JACOBI_TOLERANCE).max(8.0 * f64::EPSILON * frob);

    let mut sweeps = 0;
    loop {
        let (off, _) = off_diagonal_norm(a, n);
        if off <= tol {
            return Ok(());
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
}

/// Result of a Lanczos run for the largest eigenvalue.
#[derive(Debug, Clone, Copy)]
pub struct LanczosResult {
    pub value: f64,
    /// Residual norm `||A y - value y||` of the returned Ritz pair.
    pub residual: f64,
    pub iterations: usize,
}

/// Largest eigenvalue of the symmetric operator `apply` on `R^dim`.
///
/// `apply(x, y)` must write `A x` into `y`. The start vector comes from a
/// fixed internal stream, so the result is a pure function of the operator.
pub fn lanczos_largest(
    dim: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    tol: f64,
    max_iter: usize,
) -> Result<LanczosResult> {
    if dim == 0 {
        return Ok(LanczosResult { value: 0.0, residual: 0.0, iterations: 0 });
    }
    let max_iter = max_iter.min(dim).max(1);
    let mut start_rng = rng::stream(0x5eed_1a2c, "lanczos-start", dim as u64);
    let mut q: Vec<f64> = (0..dim).map(|_| start_rng.random::<f64>() - 0.5).collect();
    normalize(&mut q);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_iter);
    let mut alpha: Vec<f64> = Vec::with_capacity(max_iter);
    let mut beta: Vec<f64> = Vec::with_capacity(max_iter);
    let mut w = vec![0.0; dim];
    let mut last = LanczosResult { value: f64::NAN, residual: f64::INFINITY, iterations: 0 };

    for j in 0..max_iter {
        apply(&q, &mut w);
        let a = dot(&q, &w);
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi -= a * qi;
        }
        if let (Some(prev), Some(b)) = (basis.last(), beta.last()) {
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= b * pi;
            }
        }
        basis.push(q.clone());
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let b = dot(&w, &w).sqrt();

        let check = j + 1 == max_iter || b <= 1e-13 || (j + 1) % 5 == 0;
        if check {
            let (value, last_comp) = tridiagonal_top_pair(&alpha, &beta);
            let residual = b * last_comp.abs();
            last = LanczosResult { value, residual, iterations: j + 1 };
            if residual <= tol || b <= 1e-13 {
                return Ok(last);
            }
        }
        if j + 1 == max_iter {
            break;
        }
        beta.push(b);
        for (qi, wi) in q.iter_mut().zip(&w) {
            *qi = wi / b;
        }
    }
    if last.iterations == dim {
        return Ok(last);
    }
    Err(Error::NoConvergence { sweeps: last.iterations, residual: last.residual })
}

fn normalize(v: &mut [f64]) {
    let nrm = dot(v, v).sqrt();
    for x in v.iter_mut() {
        *x /= nrm;
    }
}

/// Number of eigenvalues of the tridiagonal `(alpha, beta)` strictly below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..alpha.len() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        d = alpha[i] - x - if i == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (x.abs() + 1.0);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of a symmetric tridiagonal matrix and the last
/// component of its unit eigenvector.
pub fn tridiagonal_top_pair(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let mut radius: f64 = 0.0;
    for i in 0..k {
        let left = if i > 0 { beta[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < k { beta[i].abs() } else { 0.0 };
        radius = radius.max(alpha[i].abs() + left + right);
    }
    let (mut lo, mut hi) = (-radius - 1.0, radius + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(alpha, beta, mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = hi;

    // inverse iteration on (T - lambda I), shifted slightly to stay regular
    let shift = lambda + 1e-10 * (radius + 1.0);
    let mut y = vec![1.0; k];
    for _ in 0..3 {
        y = solve_tridiagonal(alpha, beta, shift, &y);
        let nrm = dot(&y, &y).sqrt();
        if !nrm.is_finite() || nrm == 0.0 {
            break;
        }
        for v in y.iter_mut() {
            *v /= nrm;
        }
    }
    (lambda, *y.last().unwrap_or(&0.0))
}

fn solve_tridiagonal(alpha: &[f64], beta: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    // Gaussian elimination with partial pivoting on (T - shift I).
    let k = alpha.len();
    if k == 1 {
        let d = alpha[0] - shift;
        return vec![rhs[0] / if d == 0.0 { f64::EPSILON } else { d }];
    }
    // band storage: for row i, entries at columns i, i+1, i+2 after pivoting
    let mut d: Vec<f64> = alpha.iter().map(|a| a - shift).collect();
    let mut u1: Vec<f64> = (0..k).map(|i| if i + 1 < k { beta[i] } else { 0.0 }).collect();
    let mut u2 = vec![0.0; k];
    let mut l: Vec<f64> = (0..k).map(|i| if i > 0 { beta[i - 1] } else { 0.0 }).collect();
    let mut b = rhs.to_vec();
    for i in 0..k - 1 {
        let sub = l[i + 1];
        if sub.abs() > d[i].abs() {
            // swap rows i and i+1
            let (di, u1i, u2i, bi) = (d[i], u1[i], u2[i], b[i]);
            d[i] = sub;
            u1[i] = d[i + 1];
            u2[i] = u1[i + 1];
            b[i] = b[i + 1];
            l[i + 1] = di;
            d[i + 1] = u1i;
            u1[i + 1] = u2i;
            b[i + 1] = bi;
        }
        let piv = if d[i] == 0.0 { f64::EPSILON } else { d[i] };
        let f = l[i + 1] / piv;
        d[i + 1] -= f * u1[i];
        u1[i + 1] -= f * u2[i];
        b[i + 1] -= f * b[i];
        l[i + 1] = 0.0;
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = b[i];
        if i + 1 < k {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < k {
            s -= u2[i] * x[i + 2];
        }
        let piv = if d[i] == 0.0 { f64::EPSILON } else { d[i] };
        x[i] = s / piv;
    }
    x
}
