//! Zero-mean, unit-variance sub-Gaussian entry laws `Q`, their normalized
//! versions `Q/sqrt(n)`, and the median split of the normalized law into
//! an upper and a lower conditional half.

use std::f64::consts::{FRAC_2_PI, E};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistKind {
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    #[serde(rename = "uniform")]
    UniformSym,
}

impl DistKind {
    pub const ALL: [DistKind; 3] = [DistKind::Gaussian, DistKind::Rademacher, DistKind::UniformSym];

    pub fn as_str(self) -> &'static str {
        match self {
            DistKind::Gaussian => "gaussian",
            DistKind::Rademacher => "rademacher",
            DistKind::UniformSym => "uniform",
        }
    }
}

impl fmt::Display for DistKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(DistKind::Gaussian),
            "rademacher" => Ok(DistKind::Rademacher),
            "uniform" => Ok(DistKind::UniformSym),
            other => Err(Error::InvalidParameter(format!(
                "unknown distribution {other:?} (expected gaussian, rademacher or uniform)"
            ))),
        }
    }
}

/// A member of the sub-Gaussian family: sampler, declared parameter `sigma`
/// and median `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubGaussianDist {
    pub kind: DistKind,
    pub sigma: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

/// One conditional half of `Q/sqrt(n)` split at its median.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfDist {
    pub parent: SubGaussianDist,
    pub side: Side,
    pub n: usize,
}

impl SubGaussianDist {
    pub fn new(kind: DistKind) -> Self {
        let sigma = match kind {
            DistKind::Gaussian | DistKind::Rademacher => 1.0,
            // bounded support [-a, a] is sub-Gaussian with parameter a
            DistKind::UniformSym => SQRT3,
        };
        Self { kind, sigma, xi: 0.0 }
    }

    pub fn gaussian() -> Self {
        Self::new(DistKind::Gaussian)
    }

    pub fn rademacher() -> Self {
        Self::new(DistKind::Rademacher)
    }

    pub fn uniform() -> Self {
        Self::new(DistKind::UniformSym)
    }

    /// One draw from `Q`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DistKind::Gaussian => rng.sample(StandardNormal),
            DistKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            DistKind::UniformSym => SQRT3 * (2.0 * rng.random::<f64>() - 1.0),
        }
    }

    /// One draw from `Q/sqrt(n)`.
    pub fn sample_normalized<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> f64 {
        self.sample(rng) / (n as f64).sqrt()
    }

    pub fn half(&self, side: Side, n: usize) -> HalfDist {
        HalfDist { parent: *self, side, n }
    }

    /// `sqrt(n)` times the mean of the upper half, which does not depend on `n`.
    pub fn halves_mean_constant(&self) -> f64 {
        match self.kind {
            DistKind::Gaussian => FRAC_2_PI.sqrt(),
            DistKind::Rademacher => 1.0,
            DistKind::UniformSym => SQRT3 / 2.0,
        }
    }

    /// An `n x p` matrix of independent `Q/sqrt(n)` entries, drawn row-major.
    pub fn matrix_sample<R: Rng + ?Sized>(&self, n: usize, p: usize, rng: &mut R) -> Result<DesignMatrix> {
        let scale = 1.0 / (n as f64).sqrt();
        DesignMatrix::from_fn(n, p, |_, _| self.sample(rng) * scale)
    }

    /// CDF of `Q` (right-continuous).
    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            DistKind::Gaussian => 0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2),
            DistKind::Rademacher => {
                if x < -1.0 {
                    0.0
                } else if x < 1.0 {
                    0.5
                } else {
                    1.0
                }
            }
            DistKind::UniformSym => ((x + SQRT3) / (2.0 * SQRT3)).clamp(0.0, 1.0),
        }
    }
}

impl HalfDist {
    /// One draw from the conditional half.
    ///
    /// The split is by strict sign around the median `0`: continuous kinds
    /// give `+-|Z|/sqrt(n)`, Rademacher gives the point masses `+-1/sqrt(n)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let magnitude = self.parent.sample(rng).abs() / (self.n as f64).sqrt();
        match self.side {
            Side::Upper => self.parent.xi / (self.n as f64).sqrt() + magnitude,
            Side::Lower => self.parent.xi / (self.n as f64).sqrt() - magnitude,
        }
    }

    /// Mean of the half: `+-c1/sqrt(n)`.
    pub fn mean(&self) -> f64 {
        let c = self.parent.halves_mean_constant() / (self.n as f64).sqrt();
        match self.side {
            Side::Upper => c,
            Side::Lower => -c,
        }
    }
}

/// Value of the closed-form lower bound on `P(X in RIP(k, theta))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityBound {
    pub value: f64,
    /// `k log(9ep/k) - n theta^2 / (256 sigma^4)`.
    pub exponent: f64,
    /// Set when the bound is `<= 0` and therefore says nothing.
    pub vacuous: bool,
}

/// `1 - 2 exp{k log(9ep/k) - n theta^2 / (256 sigma^4)}`, unclamped.
pub fn rip_probability_lower_bound(n: usize, p: usize, k: usize, theta: f64, sigma: f64) -> Result<ProbabilityBound> {
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= p, got k = {k}, p = {p}")));
    }
    if !(theta > 0.0) || !(sigma >= 1.0) {
        return Err(Error::InvalidParameter(format!("need theta > 0 and sigma >= 1, got {theta}, {sigma}")));
    }
    let (n, p, k) = (n as f64, p as f64, k as f64);
    let exponent = k * (9.0 * E * p / k).ln() - n * theta * theta / (256.0 * sigma.powi(4));
    let value = 1.0 - 2.0 * exponent.exp();
    Ok(ProbabilityBound { value, exponent, vacuous: value <= 0.0 })
}
