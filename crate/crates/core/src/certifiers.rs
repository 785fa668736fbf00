//! RIP certifiers: decision rules that may decline a matrix but never
//! accept one that violates RIP.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::rip::{max_incoherence, rip_margin_exact, RipParams};

/// Default decline budget for a certifier on random matrices.
pub const DEFAULT_DECLINE_BUDGET: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifierOutcome {
    pub certified: bool,
    pub statistic: f64,
    pub threshold: f64,
}

impl CertifierOutcome {
    fn decide(statistic: f64, threshold: f64) -> Self {
        Self { certified: statistic <= threshold, statistic, threshold }
    }
}

pub trait Certifier {
    fn name(&self) -> &'static str;
    fn certify(&self, x: &DesignMatrix, params: RipParams) -> Result<CertifierOutcome>;
}

/// Exact sparse operator norm test: certified iff the exact RIP margin is at
/// most `theta`.
#[derive(Debug, Clone, Copy, Default)]
pub struct OpNormExact;

/// Incoherence threshold `14 sigma^2 sqrt(log p / n)`, only usable where
/// `n >= 196 sigma^4 k^2 log p / theta^2`.
#[derive(Debug, Clone, Copy)]
pub struct IncoherencePaper {
    pub sigma: f64,
}

/// `k * incoherence <= theta`, sound in every regime by Gershgorin.
#[derive(Debug, Clone, Copy, Default)]
pub struct IncoherenceSound;

/// Declines everything.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantDecline;

pub fn certify_opnorm_exact(x: &DesignMatrix, params: RipParams) -> Result<CertifierOutcome> {
    params.check_for(x)?;
    let margin = rip_margin_exact(x, params.k)?;
    Ok(CertifierOutcome::decide(margin, params.theta))
}

/// Smallest integer `n` with `n >= 196 sigma^4 k^2 ln(p) / theta^2`.
pub fn incoherence_required_n(p: usize, k: usize, theta: f64, sigma: f64) -> usize {
    let bound = 196.0 * sigma.powi(4) * (k * k) as f64 * (p as f64).ln() / (theta * theta);
    bound.ceil().max(0.0) as usize
}

/// `14 sigma^2 sqrt(ln(p) / n)`.
pub fn incoherence_threshold(n: usize, p: usize, sigma: f64) -> f64 {
    14.0 * sigma * sigma * ((p as f64).ln() / n as f64).sqrt()
}

pub fn certify_incoherence_paper(x: &DesignMatrix, params: RipParams, sigma: f64) -> Result<CertifierOutcome> {
    params.check_for(x)?;
    if !(sigma >= 1.0) {
        return Err(Error::InvalidParameter(format!("sigma must be at least 1, got {sigma}")));
    }
    let (n, p) = (x.n(), x.p());
    let required_n = incoherence_required_n(p, params.k, params.theta, sigma);
    if n < required_n {
        return Err(Error::RegimeViolation { n, required_n });
    }
    Ok(CertifierOutcome::decide(max_incoherence(x), incoherence_threshold(n, p, sigma)))
}

pub fn certify_incoherence_sound(x: &DesignMatrix, params: RipParams) -> Result<CertifierOutcome> {
    params.check_for(x)?;
    let stat = params.k as f64 * max_incoherence(x);
    Ok(CertifierOutcome::decide(stat, params.theta))
}

impl Certifier for OpNormExact {
    fn name(&self) -> &'static str {
        "opnorm-exact"
    }

    fn certify(&self, x: &DesignMatrix, params: RipParams) -> Result<CertifierOutcome> {
        certify_opnorm_exact(x, params)
    }
}

impl Certifier for IncoherencePaper {
    fn name(&self) -> &'static str {
        "incoherence-paper"
    }

    fn certify(&self, x: &DesignMatrix, params: RipParams) -> Result<CertifierOutcome> {
        certify_incoherence_paper(x, params, self.sigma)
    }
}

impl Certifier for IncoherenceSound {
    fn name(&self) -> &'static str {
        "incoherence-sound"
    }

    fn certify(&self, x: &DesignMatrix, params: RipParams) -> Result<CertifierOutcome> {
        certify_incoherence_sound(x, params)
    }
}

impl Certifier for ConstantDecline {
    fn name(&self) -> &'static str {
        "constant-decline"
    }

    fn certify(&self, _x: &DesignMatrix, params: RipParams) -> Result<CertifierOutcome> {
        Ok(CertifierOutcome { certified: false, statistic: f64::INFINITY, threshold: params.theta })
    }
}

/// Selector for the three certifiers exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertifierKind {
    OpnormExact,
    IncoherencePaper,
    IncoherenceSound,
}

impl CertifierKind {
    pub const ALL: [CertifierKind; 3] =
        [CertifierKind::OpnormExact, CertifierKind::IncoherencePaper, CertifierKind::IncoherenceSound];

    pub fn as_str(self) -> &'static str {
        match self {
            CertifierKind::OpnormExact => "opnorm-exact",
            CertifierKind::IncoherencePaper => "incoherence-paper",
            CertifierKind::IncoherenceSound => "incoherence-sound",
        }
    }

    /// Boxed certifier; `sigma` is only read by the incoherence-paper rule.
    pub fn build(self, sigma: f64) -> Box<dyn Certifier + Send + Sync> {
        match self {
            CertifierKind::OpnormExact => Box::new(OpNormExact),
            CertifierKind::IncoherencePaper => Box::new(IncoherencePaper { sigma }),
            CertifierKind::IncoherenceSound => Box::new(IncoherenceSound),
        }
    }
}

impl fmt::Display for CertifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CertifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CertifierKind::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown certifier {s:?}")))
    }
}
