use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Hypergeometric};
use serde::{Deserialize, Serialize};

use super::{BoundSide, Experiment, ExperimentSummary};
use crate::distributions::{DistKind, SubGaussianDist};
use crate::error::{Error, Result};
use crate::graphs::{DenseSeed, Graph};
use crate::rng;

/// Deviation frequencies of the intersection sizes `#(U cap K)`,
/// `#(W cap K)` and the cross edge count `N_{U,W;K}`.
///
/// `U` and `W` are one combined draw without replacement, so
/// `#(U cap K) ~ HyperGeom(m, kappa, n)` and, given it,
/// `#(W cap K) ~ HyperGeom(m - n, kappa - #(U cap K), p)`. Edges outside `K`
/// never enter `N`, so no graph on `m` vertices is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaEvents {
    pub m: usize,
    pub kappa: usize,
    pub n: usize,
    pub p: usize,
    pub epsilon: f64,
    pub trials: usize,
}

/// The dense graph on `K`; a clique is counted in closed form.
pub enum EventsSeed {
    Clique,
    Graph(Graph),
}

#[derive(Debug, Clone, Copy)]
pub struct EventsTrial {
    pub u_in_k: u64,
    pub w_in_k: u64,
    pub cross_edges: u64,
}

impl LemmaEvents {
    fn mean_u(&self) -> f64 {
        (self.n * self.kappa) as f64 / self.m as f64
    }

    fn mean_w(&self) -> f64 {
        (self.p * self.kappa) as f64 / self.m as f64
    }

    /// `(1/2 + epsilon/4) n p kappa^2 / m^2`.
    fn edge_floor(&self) -> f64 {
        let (m, n, p, k) = (self.m as f64, self.n as f64, self.p as f64, self.kappa as f64);
        (0.5 + self.epsilon / 4.0) * n * p * k * k / (m * m)
    }

    fn events(&self, t: &EventsTrial) -> [bool; 3] {
        let slack = self.epsilon / 8.0;
        [
            (t.u_in_k as f64 - self.mean_u()).abs() > slack * self.mean_u(),
            (t.w_in_k as f64 - self.mean_w()).abs() > slack * self.mean_w(),
            (t.cross_edges as f64) < self.edge_floor(),
        ]
    }

    /// The three Chebyshev bounds.
    pub fn bounds(&self) -> [f64; 3] {
        let (m, n, p, k, e) = (self.m as f64, self.n as f64, self.p as f64, self.kappa as f64, self.epsilon);
        [
            8.0 / e * (m / (n * k)).sqrt(),
            8.0 / e * (m / (p * k)).sqrt(),
            4.0 / e * (m * (p * k + n * k + m) / (n * p * k * k)).sqrt(),
        ]
    }
}

const EVENT_NAMES: [&str; 3] = ["u_intersection_deviates", "w_intersection_deviates", "cross_edges_low"];

impl Experiment for LemmaEvents {
    const NAME: &'static str = "lemma-events";
    type Trial = EventsTrial;
    type Context = EventsSeed;

    fn trials(&self) -> usize {
        self.trials
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/2], got {}", self.epsilon)));
        }
        if self.kappa < 2 || self.kappa > self.m {
            return Err(Error::InvalidParameter(format!("need 2 <= kappa <= m, got kappa = {}", self.kappa)));
        }
        if self.n == 0 || self.p == 0 || 2 * self.n >= self.m || 2 * self.p >= self.m {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= n, p < m/2, got n = {}, p = {}, m = {}",
                self.n, self.p, self.m
            )));
        }
        Ok(())
    }

    fn prepare(&self, master_seed: u64) -> Result<EventsSeed> {
        if self.epsilon == 0.5 {
            return Ok(EventsSeed::Clique);
        }
        let mut r = rng::stream(master_seed, "lemma-events-seed", 0);
        let seed = DenseSeed::random_dense(self.kappa, self.epsilon, &mut r)?;
        Ok(EventsSeed::Graph(seed.graph().clone()))
    }

    fn run_trial(&self, seed: &EventsSeed, _index: usize, rng: &mut ChaCha8Rng) -> Result<EventsTrial> {
        let hyper = |total: usize, good: usize, draws: usize| {
            Hypergeometric::new(total as u64, good as u64, draws as u64)
                .map_err(|e| Error::InvalidParameter(format!("hypergeometric({total}, {good}, {draws}): {e}")))
        };
        let a = hyper(self.m, self.kappa, self.n)?.sample(rng);
        let b = hyper(self.m - self.n, self.kappa - a as usize, self.p)?.sample(rng);
        let cross_edges = match seed {
            EventsSeed::Clique => a * b,
            EventsSeed::Graph(h) => {
                let picked = index::sample(rng, self.kappa, (a + b) as usize).into_vec();
                let (left, right) = picked.split_at(a as usize);
                h.edges_between(left, right) as u64
            }
        };
        Ok(EventsTrial { u_in_k: a, w_in_k: b, cross_edges })
    }

    fn record(&self, t: &EventsTrial) -> (Vec<(&'static str, f64)>, Option<bool>) {
        let e = self.events(t);
        (
            vec![
                ("u_in_k", t.u_in_k as f64),
                ("w_in_k", t.w_in_k as f64),
                ("cross_edges", t.cross_edges as f64),
                (EVENT_NAMES[0], f64::from(u8::from(e[0]))),
                (EVENT_NAMES[1], f64::from(u8::from(e[1]))),
                (EVENT_NAMES[2], f64::from(u8::from(e[2]))),
            ],
            None,
        )
    }

    fn summarize(&self, _seed: &EventsSeed, trials: &[EventsTrial], s: &mut ExperimentSummary) {
        let mut counts = [0u64; 3];
        for t in trials {
            for (c, hit) in counts.iter_mut().zip(self.events(t)) {
                *c += u64::from(hit);
            }
        }
        for ((name, count), bound) in EVENT_NAMES.iter().zip(counts).zip(self.bounds()) {
            let rate = s.add_rate(name, count);
            s.add_bound(name, BoundSide::Upper, &rate, bound);
        }
        let nonvacuous = s.bounds.iter().filter(|b| !b.vacuous).count();
        s.stat("nonvacuous_bounds", nonvacuous as f64);
        s.stat("edge_floor", self.edge_floor());
        s.stat("mean_u_in_k", self.mean_u());
        s.stat("mean_w_in_k", self.mean_w());
    }
}

fn default_occupancy_a() -> usize {
    3
}

/// Row occupancy when `k` of `n x ell` cells are chosen without replacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaOccupancy {
    pub n: usize,
    pub ell: usize,
    pub k: usize,
    pub trials: usize,
    /// Level for the maximum-occupancy event.
    #[serde(default = "default_occupancy_a")]
    pub a: usize,
    /// Exponent with `k <= n^gamma`; defaults to `ln k / ln n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct OccupancyTrial {
    /// Rows holding at least one chosen cell.
    pub occupied: usize,
    pub max_per_row: usize,
}

impl LemmaOccupancy {
    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| (self.k as f64).ln() / (self.n as f64).ln())
    }

    /// `k - k^2/(2n) - sqrt(k ln k)`.
    pub fn support_floor(&self) -> f64 {
        let (k, n) = (self.k as f64, self.n as f64);
        k - k * k / (2.0 * n) - (k * k.ln()).sqrt()
    }

    /// `n^{1 - a(1 - gamma)} (1 - n^{-(1 - gamma)})`.
    pub fn max_bound(&self) -> f64 {
        let (n, a, g) = (self.n as f64, self.a as f64, self.gamma());
        n.powf(1.0 - a * (1.0 - g)) * (1.0 - n.powf(-(1.0 - g)))
    }
}

impl Experiment for LemmaOccupancy {
    const NAME: &'static str = "lemma-occupancy";
    type Trial = OccupancyTrial;
    type Context = ();

    fn trials(&self) -> usize {
        self.trials
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k >= self.n {
            return Err(Error::InvalidParameter(format!("need 1 <= k < n, got k = {}, n = {}", self.k, self.n)));
        }
        if self.ell == 0 || self.a == 0 {
            return Err(Error::InvalidParameter("ell and a must be positive".into()));
        }
        let g = self.gamma();
        if !(0.0..1.0).contains(&g) {
            return Err(Error::InvalidParameter(format!("gamma must lie in [0, 1), got {g}")));
        }
        if (self.k as f64) > (self.n as f64).powf(g) * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("k = {} exceeds n^gamma = {}", self.k, (self.n as f64).powf(g))));
        }
        Ok(())
    }

    fn prepare(&self, _master_seed: u64) -> Result<()> {
        Ok(())
    }

    fn run_trial(&self, _ctx: &(), _index: usize, rng: &mut ChaCha8Rng) -> Result<OccupancyTrial> {
        let mut rows: Vec<usize> = index::sample(rng, self.n * self.ell, self.k).into_iter().map(|c| c / self.ell).collect();
        rows.sort_unstable();
        let (mut occupied, mut max_per_row, mut run) = (0, 0, 0);
        for (i, &r) in rows.iter().enumerate() {
            if i == 0 || r != rows[i - 1] {
                occupied += 1;
                run = 0;
            }
            run += 1;
            max_per_row = max_per_row.max(run);
        }
        Ok(OccupancyTrial { occupied, max_per_row })
    }

    fn record(&self, t: &OccupancyTrial) -> (Vec<(&'static str, f64)>, Option<bool>) {
        (vec![("occupied_rows", t.occupied as f64), ("max_per_row", t.max_per_row as f64)], None)
    }

    fn summarize(&self, _ctx: &(), trials: &[OccupancyTrial], s: &mut ExperimentSummary) {
        let floor = self.support_floor();
        let low = trials.iter().filter(|t| t.occupied as f64 <= floor).count() as u64;
        let rate = s.add_rate("support_low", low);
        s.add_bound("support_low", BoundSide::Upper, &rate, 1.0 / (self.k * self.k) as f64);
        let high = trials.iter().filter(|t| t.max_per_row >= self.a).count() as u64;
        let rate = s.add_rate("max_occupancy_high", high);
        s.add_bound("max_occupancy_high", BoundSide::Upper, &rate, self.max_bound());

        let (n, g) = (self.n as f64, self.gamma());
        s.stat("gamma", g);
        s.stat("support_floor", floor);
        // the geometric-series step before the final simplification
        s.stat("max_occupancy_bound_unsimplified", n.powf(1.0 - self.a as f64 * (1.0 - g)) / (1.0 - n.powf(-(1.0 - g))));
        s.stat("occupied_rows_min", trials.iter().map(|t| t.occupied).min().unwrap_or(0) as f64);
        s.stat("max_per_row_max", trials.iter().map(|t| t.max_per_row).max().unwrap_or(0) as f64);
    }
}

/// Two-sided tail of `sum_i (X_i^2 - E X_i^2)` for `n` independent draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailBound {
    pub distribution: DistKind,
    pub n: usize,
    pub theta: f64,
    pub trials: usize,
}

impl TailBound {
    fn sigma(&self) -> f64 {
        SubGaussianDist::new(self.distribution).sigma
    }

    /// `exp{-(theta^2 / (64 n sigma^4) min theta / (8 sigma^2))}`.
    pub fn upper_bound(&self) -> f64 {
        let s2 = self.sigma().powi(2);
        let quad = self.theta * self.theta / (64.0 * self.n as f64 * s2 * s2);
        (-quad.min(self.theta / (8.0 * s2))).exp()
    }

    /// `exp{-theta^2 / (64 n sigma^4)}`.
    pub fn lower_bound(&self) -> f64 {
        let s2 = self.sigma().powi(2);
        (-self.theta * self.theta / (64.0 * self.n as f64 * s2 * s2)).exp()
    }
}

impl Experiment for TailBound {
    const NAME: &'static str = "tail-bound";
    /// The centred sum.
    type Trial = f64;
    type Context = ();

    fn trials(&self) -> usize {
        self.trials
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("need n >= 1 and theta > 0, got n = {}, theta = {}", self.n, self.theta)));
        }
        Ok(())
    }

    fn prepare(&self, _master_seed: u64) -> Result<()> {
        Ok(())
    }

    fn run_trial(&self, _ctx: &(), _index: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
        let q = SubGaussianDist::new(self.distribution);
        // every supported law has unit variance
        let mut sum = 0.0;
        for _ in 0..self.n {
            let x = q.sample(rng);
            sum += x * x - 1.0;
        }
        Ok(sum)
    }

    fn record(&self, sum: &f64) -> (Vec<(&'static str, f64)>, Option<bool>) {
        (vec![("centred_sum", *sum)], None)
    }

    fn summarize(&self, _ctx: &(), sums: &[f64], s: &mut ExperimentSummary) {
        let upper = sums.iter().filter(|&&x| x >= self.theta).count() as u64;
        let rate = s.add_rate("upper_tail", upper);
        s.add_bound("upper_tail", BoundSide::Upper, &rate, self.upper_bound());
        let lower = sums.iter().filter(|&&x| x <= -self.theta).count() as u64;
        let rate = s.add_rate("lower_tail", lower);
        s.add_bound("lower_tail", BoundSide::Upper, &rate, self.lower_bound());
        s.stat("sigma", self.sigma());
        s.stat("sum_max", sums.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        s.stat("sum_min", sums.iter().copied().fold(f64::INFINITY, f64::min));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run, RunOptions, Verdict};

    #[test]
    fn events_small_parameters_are_vacuous() {
        let exp = LemmaEvents { m: 1000, kappa: 50, n: 100, p: 100, epsilon: 0.5, trials: 50 };
        assert!(exp.bounds().iter().all(|&b| b >= 1.0));
        let out = run(&exp, 1, RunOptions::default()).unwrap();
        assert!(out.summary.bounds.iter().all(|b| b.vacuous && b.pass));
        assert_eq!(out.summary.verdict, Verdict::Pass);
    }

    #[test]
    fn events_zero_epsilon_rejected() {
        let exp = LemmaEvents { m: 1000, kappa: 50, n: 100, p: 100, epsilon: 0.0, trials: 5 };
        assert!(run(&exp, 1, RunOptions::default()).is_err());
        let exp = LemmaEvents { m: 1000, kappa: 50, n: 600, p: 100, epsilon: 0.5, trials: 5 };
        assert!(run(&exp, 1, RunOptions::default()).is_err());
    }

    #[test]
    fn events_random_dense_counts_edges() {
        let exp = LemmaEvents { m: 2000, kappa: 200, n: 500, p: 500, epsilon: 0.25, trials: 20 };
        let out = run(&exp, 4, RunOptions::default()).unwrap();
        for t in &out.trials {
            assert!(t.cross_edges <= t.u_in_k * t.w_in_k);
        }
    }

    #[test]
    fn occupancy_k_one_is_degenerate() {
        let exp = LemmaOccupancy { n: 100, ell: 4, k: 1, trials: 100, a: 3, gamma: None };
        let out = run(&exp, 1, RunOptions::default()).unwrap();
        assert_eq!(out.summary.rate("support_low").unwrap().count, 0);
        assert!(out.summary.bound("support_low").unwrap().vacuous);
        assert_eq!(out.summary.verdict, Verdict::Pass);
    }

    #[test]
    fn occupancy_a_one_is_vacuous() {
        let exp = LemmaOccupancy { n: 10_000, ell: 4, k: 100, trials: 50, a: 1, gamma: None };
        let out = run(&exp, 1, RunOptions::default()).unwrap();
        assert_eq!(out.summary.rate("max_occupancy_high").unwrap().rate, 1.0);
        assert!(out.summary.bound("max_occupancy_high").unwrap().vacuous);
    }

    #[test]
    fn occupancy_rejects_k_at_least_n() {
        let exp = LemmaOccupancy { n: 10, ell: 2, k: 10, trials: 1, a: 3, gamma: None };
        assert!(run(&exp, 1, RunOptions::default()).is_err());
    }

    #[test]
    fn rademacher_tail_is_degenerate() {
        let exp = TailBound { distribution: DistKind::Rademacher, n: 50, theta: 1.0, trials: 100 };
        let out = run(&exp, 1, RunOptions::default()).unwrap();
        assert!(out.trials.iter().all(|&x| x == 0.0));
        assert_eq!(out.summary.rate("upper_tail").unwrap().count, 0);
        assert_eq!(out.summary.rate("lower_tail").unwrap().count, 0);
    }

    #[test]
    fn tail_bound_near_zero_theta_is_vacuous() {
        let exp = TailBound { distribution: DistKind::Gaussian, n: 10, theta: 1e-9, trials: 10 };
        assert!(exp.upper_bound() > 1.0 - 1e-12);
        let out = run(&exp, 1, RunOptions::default()).unwrap();
        assert_eq!(out.summary.verdict, Verdict::Pass);
    }
}
