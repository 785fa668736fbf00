//! Restricted isometry margins and incoherence.
//!
//! A matrix `X` satisfies RIP with sparsity `k` and distortion `theta` when
//! every `k`-column Gram submatrix `X_S^T X_S` has its spectrum inside
//! `[1 - theta, 1 + theta]`. The exact margin is the largest
//! `||X_S^T X_S - I_k||_op` over all `k`-subsets `S`.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::eigen::jacobi_extremes_in_place;
use crate::error::{Error, Result};
use crate::matrix::{DesignMatrix, SymmetricMatrix};
use crate::subsets::{binomial, for_each_subset};

/// Default cap on the number of subsets enumerated by the exact margin.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Sparsity level and distortion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RipParams {
    pub k: usize,
    pub theta: f64,
}

impl RipParams {
    pub fn new(k: usize, theta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("sparsity k must be at least 1".into()));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!("distortion theta must lie in (0, 1), got {theta}")));
        }
        Ok(Self { k, theta })
    }

    /// Checks `k <= p` for a matrix with `p` columns.
    pub fn check_for(&self, x: &DesignMatrix) -> Result<()> {
        if self.k > x.p() {
            return Err(Error::InvalidParameter(format!("k = {} exceeds p = {}", self.k, x.p())));
        }
        Ok(())
    }
}

/// `X^T X - I_p`.
pub fn gram_deviation(x: &DesignMatrix) -> SymmetricMatrix {
    let mut g = x.gram();
    for i in 0..g.dim() {
        g.set(i, i, g.get(i, i) - 1.0);
    }
    g
}

pub use crate::eigen::symmetric_eigen_range;

/// Exact RIP margin with the default enumeration cap.
pub fn rip_margin_exact(x: &DesignMatrix, k: usize) -> Result<f64> {
    rip_margin_exact_with_cap(x, k, DEFAULT_ENUMERATION_CAP)
}

pub fn rip_margin_exact_with_cap(x: &DesignMatrix, k: usize, cap: u128) -> Result<f64> {
    margin_from_deviation(&gram_deviation(x), k, cap)
}

/// Exact margin given a precomputed Gram deviation `X^T X - I`.
pub fn margin_from_deviation(dev: &SymmetricMatrix, k: usize, cap: u128) -> Result<f64> {
    let p = dev.dim();
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= p, got k = {k}, p = {p}")));
    }
    let count = binomial(p, k);
    if count > cap {
        return Err(Error::EnumerationInfeasible { p, k, count, cap });
    }
    if k == 1 {
        return Ok((0..p).fold(0.0, |m, i| m.max(dev.get(i, i).abs())));
    }
    let mut worst: f64 = 0.0;
    let mut failure = None;
    let mut buf = vec![0.0; k * k];
    for_each_subset(p, k, |s| {
        if failure.is_some() {
            return;
        }
        for (a, &sa) in s.iter().enumerate() {
            for (b, &sb) in s.iter().enumerate() {
                buf[a * k + b] = dev.get(sa, sb);
            }
        }
        match jacobi_extremes_in_place(&mut buf, k) {
            Ok((lo, hi)) => worst = worst.max(lo.abs()).max(hi.abs()),
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(worst),
    }
}

/// Lower bound on the margin from random `k`-sparse unit directions.
///
/// Half of the directions are sign vectors `+-1/sqrt(k)` on a random support,
/// the other half are Gaussian directions on a random support.
pub fn rip_margin_sampled<R: Rng + ?Sized>(x: &DesignMatrix, k: usize, trials: usize, rng: &mut R) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let p = x.p();
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= p, got k = {k}, p = {p}")));
    }
    let dev = gram_deviation(x);
    let mut u = vec![0.0; k];
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let support = index::sample(rng, p, k).into_vec();
        if t % 2 == 0 {
            let scale = 1.0 / (k as f64).sqrt();
            for ui in u.iter_mut() {
                *ui = if rng.random::<bool>() { scale } else { -scale };
            }
        } else {
            let mut norm2 = 0.0;
            for ui in u.iter_mut() {
                *ui = rng.sample(StandardNormal);
                norm2 += *ui * *ui;
            }
            let norm = norm2.sqrt();
            if norm == 0.0 {
                continue;
            }
            for ui in u.iter_mut() {
                *ui /= norm;
            }
        }
        // |u^T (X^T X - I) u| = | ||X u||^2 - 1 | for unit u
        let mut q = 0.0;
        for (a, &sa) in support.iter().enumerate() {
            for (b, &sb) in support.iter().enumerate() {
                q += u[a] * dev.get(sa, sb) * u[b];
            }
        }
        worst = worst.max(q.abs());
    }
    Ok(worst)
}

/// Whether `X` is in `RIP(k, theta)`, decided by exact enumeration.
pub fn is_rip(x: &DesignMatrix, params: RipParams) -> Result<bool> {
    params.check_for(x)?;
    Ok(rip_margin_exact(x, params.k)? <= params.theta)
}

/// Largest absolute entry of `X^T X - I_p`, diagonal included.
pub fn max_incoherence(x: &DesignMatrix) -> f64 {
    gram_deviation(x).max_abs()
}
