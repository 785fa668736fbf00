use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BoundSide, Experiment, ExperimentSummary, RateEstimate, TestResult};
use crate::distributions::DistKind;
use crate::error::{Error, Result};
use crate::graphs::{er_generate, plant, spectral_statistic, DenseSeed, SeedKind};
use crate::matrix::DesignMatrix;
use crate::reduction::{
    derive_dims, hard_sequence, null_entry_cdf, null_entry_pmf, rademacher_category, reduce, score_identity,
    witness_quadratic_form, DerivedDims, HardSequence, ReductionConfig,
};
use crate::rip::{rip_margin_exact, DEFAULT_ENUMERATION_CAP};
use crate::stats::{chi_square, ks_one_sample, Moments};
use crate::subsets::binomial;

fn default_ks_samples() -> usize {
    2000
}

/// Distributional checks of the reduction output on Erdős–Rényi inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionNull {
    pub reduction: ReductionConfig,
    pub trials: usize,
    /// Entries per trial pooled into the KS sample.
    #[serde(default = "default_ks_samples")]
    pub ks_samples_per_trial: usize,
}

/// Entry-level summaries of one reduced matrix.
#[derive(Debug, Clone, Default)]
pub struct EntryStats {
    /// Leading entries in row-major order, for the pooled KS test.
    pub sample: Vec<f64>,
    pub moments: Moments,
    /// `n x_{i,j} x_{i,j+1}` over disjoint horizontal pairs.
    pub horizontal: Moments,
    /// `n x_{i,j} x_{i+1,j}` over disjoint vertical pairs.
    pub vertical: Moments,
    /// Rademacher category counts.
    pub categories: Vec<u64>,
}

impl EntryStats {
    fn collect(x: &DesignMatrix, cols: std::ops::Range<usize>, n: usize, ell: usize, kind: DistKind, keep: usize) -> Self {
        let mut s = EntryStats::default();
        if kind == DistKind::Rademacher {
            s.categories = vec![0; ell * ell + 1];
        }
        let nf = n as f64;
        for i in 0..x.n() {
            for j in cols.clone() {
                let v = x.get(i, j);
                s.moments.push(v);
                if s.sample.len() < keep {
                    s.sample.push(v);
                }
                if kind == DistKind::Rademacher {
                    s.categories[rademacher_category(v, n, ell)] += 1;
                }
                if (j - cols.start).is_multiple_of(2) && j + 1 < cols.end {
                    s.horizontal.push(nf * v * x.get(i, j + 1));
                }
                if i % 2 == 0 && i + 1 < x.n() {
                    s.vertical.push(nf * v * x.get(i + 1, j));
                }
            }
        }
        s
    }

    fn merge_into(&self, acc: &mut EntryStats) {
        acc.sample.extend_from_slice(&self.sample);
        acc.moments.merge(&self.moments);
        acc.horizontal.merge(&self.horizontal);
        acc.vertical.merge(&self.vertical);
        if acc.categories.len() < self.categories.len() {
            acc.categories.resize(self.categories.len(), 0);
        }
        for (a, b) in acc.categories.iter_mut().zip(&self.categories) {
            *a += b;
        }
    }
}

pub struct NullTrial {
    pub folded: EntryStats,
    /// Appended fresh columns, empty when `p = n`.
    pub padding: EntryStats,
}

fn mean_se(m: &Moments) -> f64 {
    (m.variance() / m.count as f64).sqrt()
}

fn push_entry_tests(s: &mut ExperimentSummary, prefix: &str, pooled: &mut EntryStats, kind: DistKind, n: usize, ell: usize) {
    if pooled.moments.count == 0 {
        return;
    }
    let name = |t: &str| format!("{prefix}{t}");
    match kind {
        DistKind::Rademacher => {
            let (stat, p) = chi_square(&pooled.categories, &null_entry_pmf(ell));
            s.tests.push(TestResult::fit(&name("chi_square"), stat, p));
        }
        _ => {
            let (d, p) = ks_one_sample(&mut pooled.sample, |x| null_entry_cdf(kind, n, ell, x));
            s.tests.push(TestResult::fit(&name("ks"), d, p));
        }
    }
    let m = &pooled.moments;
    s.tests.push(TestResult::near(&name("mean"), m.mean(), 0.0, mean_se(m)));
    s.tests.push(TestResult::near(&name("variance"), m.second_moment(), 1.0 / n as f64, m.second_moment_se()));
    for (label, c) in [("horizontal_correlation", &pooled.horizontal), ("vertical_correlation", &pooled.vertical)] {
        if c.count > 1 {
            s.tests.push(TestResult::near(&name(label), c.mean(), 0.0, mean_se(c)));
        }
    }
}

impl Experiment for ReductionNull {
    const NAME: &'static str = "reduction-null";
    type Trial = NullTrial;
    type Context = DerivedDims;

    fn trials(&self) -> usize {
        self.trials
    }

    fn validate(&self) -> Result<()> {
        derive_dims(&self.reduction).map(|_| ())
    }

    fn prepare(&self, _master_seed: u64) -> Result<DerivedDims> {
        derive_dims(&self.reduction)
    }

    fn run_trial(&self, dims: &DerivedDims, _index: usize, rng: &mut ChaCha8Rng) -> Result<NullTrial> {
        let g = er_generate(self.reduction.m, rng)?.graph;
        let (x, _) = reduce(&g, &self.reduction, rng)?;
        let kind = self.reduction.distribution;
        let keep = self.ks_samples_per_trial;
        Ok(NullTrial {
            folded: EntryStats::collect(&x, 0..dims.n, dims.n, dims.ell, kind, keep),
            padding: EntryStats::collect(&x, dims.n..dims.p, dims.n, 1, kind, keep),
        })
    }

    fn record(&self, t: &NullTrial) -> (Vec<(&'static str, f64)>, Option<bool>) {
        let f = &t.folded;
        (
            vec![
                ("mean", f.moments.mean()),
                ("second_moment", f.moments.second_moment()),
                ("horizontal_correlation", f.horizontal.mean()),
                ("vertical_correlation", f.vertical.mean()),
            ],
            None,
        )
    }

    fn summarize(&self, dims: &DerivedDims, trials: &[NullTrial], s: &mut ExperimentSummary) {
        let kind = self.reduction.distribution;
        let mut folded = EntryStats::default();
        let mut padding = EntryStats::default();
        for t in trials {
            t.folded.merge_into(&mut folded);
            t.padding.merge_into(&mut padding);
        }
        s.stat("n", dims.n as f64);
        s.stat("p", dims.p as f64);
        s.stat("ell", dims.ell as f64);
        s.stat("k", dims.k as f64);
        s.stat("variance_target", 1.0 / dims.n as f64);
        push_entry_tests(s, "", &mut folded, kind, dims.n, dims.ell);
        push_entry_tests(s, "padding_", &mut padding, kind, dims.n, 1);
        if dims.ell > 1 && kind != DistKind::Gaussian {
            s.notes.push(format!(
                "entries of the folded block are averages of {} draws; tested against that exact law",
                dims.ell * dims.ell
            ));
        }
    }
}

fn default_delta() -> f64 {
    0.05
}

fn default_witness_threshold() -> f64 {
    2.0
}

fn default_min_violation_rate() -> f64 {
    0.95
}

/// Witness and score diagnostics of the reduction on planted inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionPlanted {
    pub reduction: ReductionConfig,
    pub seed_kind: SeedKind,
    pub epsilon: f64,
    pub trials: usize,
    /// Regime parameters passed to `hard_sequence` to pick `theta`.
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Second fixed level reported for the witness value.
    #[serde(default = "default_witness_threshold")]
    pub witness_threshold: f64,
    #[serde(default = "default_min_violation_rate")]
    pub min_violation_rate: f64,
}

pub struct PlantedContext {
    dims: DerivedDims,
    sequence: HardSequence,
    clique: Option<DenseSeed>,
}

#[derive(Debug, Clone)]
pub struct PlantedTrial {
    pub witness: f64,
    pub k1: usize,
    pub planted_rows: usize,
    pub identity_lhs: i64,
    pub identity_rhs: i64,
    /// Exact RIP margin of the folded block when enumeration is affordable.
    pub margin: Option<f64>,
}

impl ReductionPlanted {
    fn exact_feasible(&self, dims: &DerivedDims) -> bool {
        binomial(dims.n, dims.k) <= DEFAULT_ENUMERATION_CAP
    }
}

impl Experiment for ReductionPlanted {
    const NAME: &'static str = "reduction-planted";
    type Trial = PlantedTrial;
    type Context = PlantedContext;

    fn trials(&self) -> usize {
        self.trials
    }

    fn validate(&self) -> Result<()> {
        let dims = derive_dims(&self.reduction)?;
        if self.seed_kind == SeedKind::Explicit {
            return Err(Error::Config("seed_kind must be clique or random-dense".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(Error::InvalidSeedGraph(format!("epsilon must lie in (0, 1/2], got {}", self.epsilon)));
        }
        hard_sequence(dims.n, self.alpha, self.reduction.beta, self.delta)?;
        Ok(())
    }

    fn prepare(&self, _master_seed: u64) -> Result<PlantedContext> {
        let dims = derive_dims(&self.reduction)?;
        let sequence = hard_sequence(dims.n, self.alpha, self.reduction.beta, self.delta)?;
        let clique = (self.seed_kind == SeedKind::Clique).then(|| DenseSeed::clique(self.reduction.kappa));
        Ok(PlantedContext { dims, sequence, clique })
    }

    fn run_trial(&self, ctx: &PlantedContext, _index: usize, rng: &mut ChaCha8Rng) -> Result<PlantedTrial> {
        let seed = match &ctx.clique {
            Some(c) => c.clone(),
            None => DenseSeed::random_dense(self.reduction.kappa, self.epsilon, rng)?,
        };
        let inst = plant(self.reduction.m, &seed, rng)?;
        let planted = inst.planted_set.as_deref().unwrap_or_default();
        let (_, trace) = reduce(&inst.graph, &self.reduction, rng)?;
        let w = witness_quadratic_form(&trace, planted, self.epsilon)?;
        let (lhs, rhs) = score_identity(&trace, &inst.graph, planted)?;
        let margin = if self.exact_feasible(&ctx.dims) { Some(rip_margin_exact(&trace.xtilde, ctx.dims.k)?) } else { None };
        Ok(PlantedTrial {
            witness: w.value,
            k1: w.k1,
            planted_rows: w.rows.len(),
            identity_lhs: lhs,
            identity_rhs: rhs,
            margin,
        })
    }

    fn record(&self, t: &PlantedTrial) -> (Vec<(&'static str, f64)>, Option<bool>) {
        let mut stats = vec![
            ("witness", t.witness),
            ("k1", t.k1 as f64),
            ("planted_rows", t.planted_rows as f64),
            ("identity_lhs", t.identity_lhs as f64),
            ("identity_rhs", t.identity_rhs as f64),
        ];
        if let Some(m) = t.margin {
            stats.push(("margin", m));
        }
        (stats, Some(t.identity_lhs == t.identity_rhs))
    }

    fn summarize(&self, ctx: &PlantedContext, trials: &[PlantedTrial], s: &mut ExperimentSummary) {
        let theta = ctx.sequence.theta;
        s.stat("theta", theta);
        s.stat("theta_floor", ctx.sequence.theta_floor);
        s.stat("theta_ceiling", ctx.sequence.theta_ceiling);
        s.stat("n", ctx.dims.n as f64);
        s.stat("k", ctx.dims.k as f64);
        s.stat("ell", ctx.dims.ell as f64);

        let above = trials.iter().filter(|t| t.witness > 1.0 + theta).count() as u64;
        let rate = s.add_rate("witness_above_1_plus_theta", above);
        s.add_bound("violation_rate", BoundSide::Lower, &rate, self.min_violation_rate);
        let level = trials.iter().filter(|t| t.witness >= self.witness_threshold).count() as u64;
        s.add_rate("witness_at_least_threshold", level);

        let mismatches = trials.iter().filter(|t| t.identity_lhs != t.identity_rhs).count();
        s.tests.push(TestResult::flag("score_identity_mismatches", mismatches as f64, mismatches == 0));

        if trials.iter().all(|t| t.margin.is_some()) {
            let violated = trials.iter().filter(|t| t.margin.is_some_and(|m| m > theta)).count() as u64;
            s.add_rate("exact_rip_violated", violated);
        } else {
            s.notes.push(format!(
                "exact RIP of the folded block skipped: C({}, {}) subsets exceed the enumeration cap",
                ctx.dims.n, ctx.dims.k
            ));
        }

        let values: Vec<f64> = trials.iter().map(|t| t.witness).collect();
        s.stat("witness_mean", values.iter().sum::<f64>() / values.len() as f64);
        s.stat("witness_min", values.iter().copied().fold(f64::INFINITY, f64::min));
        s.stat("witness_max", values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        s.stat("planted_rows_mean", trials.iter().map(|t| t.planted_rows as f64).sum::<f64>() / trials.len() as f64);
    }
}

fn default_min_accuracy() -> f64 {
    0.95
}

/// Spectral detection over alternating null and planted trials.
///
/// Even trials are Erdős–Rényi; odd trials carry a planted seed, unless
/// `kappa = 0`, in which case every trial is null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spectral {
    pub m: usize,
    pub kappa: usize,
    #[serde(default = "half")]
    pub epsilon: f64,
    pub tau: f64,
    pub trials: usize,
    /// Defaults to a clique when `epsilon = 1/2` and a random dense seed otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_kind: Option<SeedKind>,
    #[serde(default = "default_min_accuracy")]
    pub min_accuracy: f64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralTrial {
    pub planted: bool,
    pub statistic: f64,
    pub detected: bool,
    /// Rayleigh quotient of the planted-set indicator.
    pub rayleigh: Option<f64>,
    /// Density excess of the seed actually planted.
    pub seed_epsilon: Option<f64>,
}

impl Spectral {
    fn seed_kind(&self) -> SeedKind {
        self.seed_kind.unwrap_or(if self.epsilon == 0.5 { SeedKind::Clique } else { SeedKind::RandomDense })
    }

    /// `epsilon (kappa - 1) - 3/2`.
    pub fn rayleigh_floor(&self, epsilon: f64) -> f64 {
        epsilon * (self.kappa as f64 - 1.0) - 1.5
    }
}

/// Slack for comparing an iterative eigenvalue with an exact quotient.
const SPECTRAL_SLACK: f64 = 1e-6;

impl Experiment for Spectral {
    const NAME: &'static str = "spectral";
    type Trial = SpectralTrial;
    type Context = Option<DenseSeed>;

    fn trials(&self) -> usize {
        self.trials
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.kappa > self.m {
            return Err(Error::InvalidParameter(format!("need 1 <= m and kappa <= m, got m = {}, kappa = {}", self.m, self.kappa)));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be finite and non-negative, got {}", self.tau)));
        }
        if self.kappa > 0 {
            if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
                return Err(Error::InvalidSeedGraph(format!("epsilon must lie in (0, 1/2], got {}", self.epsilon)));
            }
            if self.seed_kind() == SeedKind::Explicit {
                return Err(Error::Config("seed_kind must be clique or random-dense".into()));
            }
        }
        Ok(())
    }

    fn prepare(&self, _master_seed: u64) -> Result<Option<DenseSeed>> {
        Ok((self.kappa > 0 && self.seed_kind() == SeedKind::Clique).then(|| DenseSeed::clique(self.kappa)))
    }

    fn run_trial(&self, clique: &Option<DenseSeed>, index: usize, rng: &mut ChaCha8Rng) -> Result<SpectralTrial> {
        let planted = self.kappa > 0 && index % 2 == 1;
        let inst = if planted {
            let seed = match clique {
                Some(c) => c.clone(),
                None => DenseSeed::random_dense(self.kappa, self.epsilon, rng)?,
            };
            plant(self.m, &seed, rng)?
        } else {
            er_generate(self.m, rng)?
        };
        let statistic = spectral_statistic(&inst.graph)?;
        // compare directly so that tau = 0 is allowed
        let detected = statistic > self.tau;
        let (rayleigh, seed_epsilon) = match (&inst.planted_set, &inst.seed_graph) {
            (Some(k), Some(seed)) => {
                let kf = k.len() as f64;
                let within = inst.graph.edges_within(k) as f64;
                (Some((2.0 * within - kf * kf / 2.0) / kf), Some(seed.epsilon))
            }
            _ => (None, None),
        };
        Ok(SpectralTrial { planted, statistic, detected, rayleigh, seed_epsilon })
    }

    fn record(&self, t: &SpectralTrial) -> (Vec<(&'static str, f64)>, Option<bool>) {
        let mut stats = vec![
            ("planted", f64::from(u8::from(t.planted))),
            ("statistic", t.statistic),
            ("detected", f64::from(u8::from(t.detected))),
        ];
        if let Some(r) = t.rayleigh {
            stats.push(("rayleigh", r));
        }
        (stats, Some(t.detected == t.planted))
    }

    fn summarize(&self, _ctx: &Option<DenseSeed>, trials: &[SpectralTrial], s: &mut ExperimentSummary) {
        let correct = trials.iter().filter(|t| t.detected == t.planted).count() as u64;
        let accuracy = s.add_rate("accuracy", correct);
        s.add_bound("accuracy", BoundSide::Lower, &accuracy, self.min_accuracy);

        let nulls: Vec<&SpectralTrial> = trials.iter().filter(|t| !t.planted).collect();
        let planted: Vec<&SpectralTrial> = trials.iter().filter(|t| t.planted).collect();
        let fp = nulls.iter().filter(|t| t.detected).count() as u64;
        s.rates.push(RateEstimate::new("false_positive", fp, nulls.len() as u64));
        if !planted.is_empty() {
            let tp = planted.iter().filter(|t| t.detected).count() as u64;
            s.rates.push(RateEstimate::new("true_positive", tp, planted.len() as u64));
        }

        let max_of = |v: &[&SpectralTrial]| v.iter().map(|t| t.statistic).fold(f64::NEG_INFINITY, f64::max);
        let min_of = |v: &[&SpectralTrial]| v.iter().map(|t| t.statistic).fold(f64::INFINITY, f64::min);
        if !nulls.is_empty() {
            s.stat("null_statistic_max", max_of(&nulls));
            s.stat("null_statistic_max_over_sqrt_m", max_of(&nulls) / (self.m as f64).sqrt());
        }
        if !planted.is_empty() {
            s.stat("planted_statistic_min", min_of(&planted));
            // statistic - max(Rayleigh quotient, eps (kappa - 1) - 3/2); never negative in theory
            let gap = planted
                .iter()
                .map(|t| {
                    let floor = self.rayleigh_floor(t.seed_epsilon.unwrap_or(self.epsilon));
                    t.statistic - t.rayleigh.unwrap_or(floor).max(floor)
                })
                .fold(f64::INFINITY, f64::min);
            s.stat("rayleigh_floor", self.rayleigh_floor(self.epsilon));
            s.tests.push(TestResult::flag("rayleigh_bound_min_gap", gap, gap >= -SPECTRAL_SLACK));
        }
    }
}
