//! Goodness-of-fit and moment helpers used by the experiment harness.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * x * x).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs().max(1e-300) {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test of `samples` against a continuous CDF.
///
/// Sorts `samples` in place. Returns `(D, p-value)`.
pub fn ks_one_sample(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    samples.sort_unstable_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
    }
    let en = n.sqrt();
    (d, kolmogorov_survival((en + 0.12 + 0.11 / en) * d))
}

/// Two-sample Kolmogorov–Smirnov test. Sorts both inputs in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> (f64, f64) {
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let en = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    (d, kolmogorov_survival((en + 0.12 + 0.11 / en) * d))
}

/// Pearson chi-square test of observed counts against expected
/// probabilities. Returns `(statistic, p-value)`.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> (f64, f64) {
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = total * p;
        if e > 0.0 {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    let df = cells.saturating_sub(1).max(1) as f64;
    let dist = ChiSquared::new(df).expect("positive degrees of freedom");
    (stat, 1.0 - dist.cdf(stat))
}

/// Running first and second moments with a fixed summation order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub sum_fourth: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        let x2 = x * x;
        self.count += 1;
        self.sum += x;
        self.sum_sq += x2;
        self.sum_fourth += x2 * x2;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.sum_fourth += other.sum_fourth;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Mean of squares, i.e. the variance when the mean is known to be 0.
    pub fn second_moment(&self) -> f64 {
        self.sum_sq / self.count as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.second_moment() - m * m).max(0.0)
    }

    /// Standard error of [`Moments::second_moment`].
    pub fn second_moment_se(&self) -> f64 {
        let n = self.count as f64;
        let m2 = self.second_moment();
        ((self.sum_fourth / n - m2 * m2).max(0.0) / n).sqrt()
    }
}

/// Standard error of a rate `r` estimated from `trials` Bernoulli draws.
pub fn rate_se(rate: f64, trials: usize) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    (rate * (1.0 - rate) / trials as f64).sqrt()
}
