//! Seeded Monte Carlo experiments.
//!
//! Every experiment is a parameter struct implementing [`Experiment`]. Trial
//! `i` draws its randomness from `derive_seed(master, NAME, i)` only, trials
//! may run on any number of threads, and aggregation walks the trials in
//! index order, so a summary depends on the parameters and the master seed
//! alone.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rng;
use crate::stats::rate_se;

mod lemmas;
mod reduction_exp;
mod rip_exp;

pub use lemmas::{LemmaEvents, LemmaOccupancy, TailBound};
pub use reduction_exp::{ReductionNull, ReductionPlanted, Spectral};
pub use rip_exp::{CertifierExperiment, RipProbability};

/// Tolerance, in standard errors, for rate comparisons.
pub const SE_TOLERANCE: f64 = 4.0;
/// Significance level for goodness-of-fit tests.
pub const TEST_LEVEL: f64 = 0.01;

/// One trial's seed and measured statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub trial: u64,
    pub seed: u64,
    pub params: Value,
    pub statistics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub name: String,
    pub count: u64,
    pub trials: u64,
    pub rate: f64,
    pub se: f64,
}

impl RateEstimate {
    pub fn new(name: &str, count: u64, trials: u64) -> Self {
        let rate = if trials == 0 { 0.0 } else { count as f64 / trials as f64 };
        Self { name: name.into(), count, trials, rate, se: rate_se(rate, trials as usize) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSide {
    /// The empirical value should not exceed the bound.
    Upper,
    /// The empirical value should not fall below the bound.
    Lower,
}

/// An empirical rate printed beside its theoretical bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub side: BoundSide,
    pub empirical: f64,
    pub se: f64,
    pub bound: f64,
    /// Bound outside `(0, 1)`: it constrains nothing and passes automatically.
    pub vacuous: bool,
    /// The comparison holds with no allowance for Monte Carlo error.
    pub strict: bool,
    /// The comparison holds within [`SE_TOLERANCE`] standard errors.
    pub pass: bool,
}

impl BoundCheck {
    pub fn new(name: &str, side: BoundSide, rate: &RateEstimate, bound: f64) -> Self {
        let vacuous = !(bound > 0.0 && bound < 1.0);
        let slack = SE_TOLERANCE * rate.se;
        let (strict, within) = match side {
            BoundSide::Upper => (rate.rate <= bound, rate.rate <= bound + slack),
            BoundSide::Lower => (rate.rate >= bound, rate.rate >= bound - slack),
        };
        Self {
            name: name.into(),
            side,
            empirical: rate.rate,
            se: rate.se,
            bound,
            vacuous,
            strict: strict || vacuous,
            pass: within || vacuous,
        }
    }
}

/// A named pass/fail diagnostic: a goodness-of-fit test or a tolerance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub statistic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl TestResult {
    /// Goodness-of-fit test passing at [`TEST_LEVEL`].
    pub fn fit(name: &str, statistic: f64, p_value: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            p_value: Some(p_value),
            reference: None,
            tolerance: None,
            pass: p_value >= TEST_LEVEL,
        }
    }

    /// `|statistic - reference| <= SE_TOLERANCE * se`.
    pub fn near(name: &str, statistic: f64, reference: f64, se: f64) -> Self {
        let tolerance = SE_TOLERANCE * se;
        Self {
            name: name.into(),
            statistic,
            p_value: None,
            reference: Some(reference),
            tolerance: Some(tolerance),
            pass: (statistic - reference).abs() <= tolerance,
        }
    }

    pub fn flag(name: &str, statistic: f64, pass: bool) -> Self {
        Self { name: name.into(), statistic, p_value: None, reference: None, tolerance: None, pass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub experiment: String,
    pub master_seed: u64,
    pub trials: u64,
    pub params: Value,
    pub rates: Vec<RateEstimate>,
    pub bounds: Vec<BoundCheck>,
    pub tests: Vec<TestResult>,
    pub statistics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ExperimentSummary {
    fn new(experiment: &str, master_seed: u64, trials: u64, params: Value) -> Self {
        Self {
            experiment: experiment.into(),
            master_seed,
            trials,
            params,
            rates: Vec::new(),
            bounds: Vec::new(),
            tests: Vec::new(),
            statistics: BTreeMap::new(),
            notes: Vec::new(),
            verdict: Verdict::Pass,
            error: None,
        }
    }

    pub fn add_rate(&mut self, name: &str, count: u64) -> RateEstimate {
        let r = RateEstimate::new(name, count, self.trials);
        self.rates.push(r.clone());
        r
    }

    pub fn add_bound(&mut self, name: &str, side: BoundSide, rate: &RateEstimate, bound: f64) {
        let check = BoundCheck::new(name, side, rate, bound);
        if check.vacuous {
            self.notes.push(format!("bound {name} = {bound} is vacuous; passes automatically"));
        }
        self.bounds.push(check);
    }

    pub fn stat(&mut self, name: &str, value: f64) {
        self.statistics.insert(name.into(), value);
    }

    pub fn rate(&self, name: &str) -> Option<&RateEstimate> {
        self.rates.iter().find(|r| r.name == name)
    }

    pub fn bound(&self, name: &str) -> Option<&BoundCheck> {
        self.bounds.iter().find(|b| b.name == name)
    }

    pub fn test(&self, name: &str) -> Option<&TestResult> {
        self.tests.iter().find(|t| t.name == name)
    }

    fn finish(&mut self) {
        if self.error.is_some() {
            self.verdict = Verdict::Error;
        } else if self.bounds.iter().all(|b| b.pass) && self.tests.iter().all(|t| t.pass) {
            self.verdict = Verdict::Pass;
        } else {
            self.verdict = Verdict::Fail;
        }
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A Monte Carlo experiment: parameters plus per-trial and aggregate logic.
pub trait Experiment: Serialize + Sync {
    const NAME: &'static str;
    /// Per-trial output.
    type Trial: Send;
    /// State shared by all trials, built once from the master seed.
    type Context: Sync;

    fn trials(&self) -> usize;

    fn validate(&self) -> Result<()>;

    fn prepare(&self, master_seed: u64) -> Result<Self::Context>;

    fn run_trial(&self, ctx: &Self::Context, index: usize, rng: &mut ChaCha8Rng) -> Result<Self::Trial>;

    /// Named statistics and optional pass flag for the trial's record.
    fn record(&self, trial: &Self::Trial) -> (Vec<(&'static str, f64)>, Option<bool>);

    fn summarize(&self, ctx: &Self::Context, trials: &[Self::Trial], summary: &mut ExperimentSummary);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jobs: 1 }
    }
}

/// Completed run: the summary plus every trial's output.
pub struct Run<'a, E: Experiment> {
    pub experiment: &'a E,
    pub summary: ExperimentSummary,
    pub trials: Vec<E::Trial>,
}

impl<E: Experiment> Run<'_, E> {
    pub fn records(&self) -> impl Iterator<Item = TrialRecord> + '_ {
        let master = self.summary.master_seed;
        self.trials.iter().enumerate().map(move |(i, t)| {
            let (stats, pass) = self.experiment.record(t);
            TrialRecord {
                experiment: E::NAME.into(),
                trial: i as u64,
                seed: trial_seed::<E>(master, i),
                params: self.summary.params.clone(),
                statistics: stats.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
                pass,
            }
        })
    }

    /// One JSON object per line.
    pub fn write_records(&self, out: &mut dyn Write) -> Result<()> {
        for r in self.records() {
            serde_json::to_writer(&mut *out, &r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// `trial,seed,<statistic...>` rows.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let mut header_written = false;
        for r in self.records() {
            if !header_written {
                let names: Vec<&str> = r.statistics.keys().map(String::as_str).collect();
                writeln!(out, "trial,seed,{}", names.join(","))?;
                header_written = true;
            }
            let values: Vec<String> = r.statistics.values().map(|v| v.to_string()).collect();
            writeln!(out, "{},{},{}", r.trial, r.seed, values.join(","))?;
        }
        Ok(())
    }
}

/// Seed of trial `index` under `master`.
pub fn trial_seed<E: Experiment>(master: u64, index: usize) -> u64 {
    rng::derive_seed(master, E::NAME, index as u64)
}

/// Replays one trial in isolation.
pub fn replay_trial<E: Experiment>(exp: &E, master: u64, index: usize) -> Result<E::Trial> {
    exp.validate()?;
    let ctx = exp.prepare(master)?;
    let mut r = rng::from_seed(trial_seed::<E>(master, index));
    exp.run_trial(&ctx, index, &mut r)
}

/// Runs every trial and aggregates.
///
/// Parameter errors are returned as `Err`; an error inside a trial yields
/// a summary with verdict [`Verdict::Error`] naming the first failing trial.
pub fn run<E: Experiment>(exp: &E, master_seed: u64, opts: RunOptions) -> Result<Run<'_, E>> {
    if exp.trials() == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    exp.validate()?;
    let params = serde_json::to_value(exp)?;
    let mut summary = ExperimentSummary::new(E::NAME, master_seed, exp.trials() as u64, params);
    let ctx = exp.prepare(master_seed)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("jobs: cannot build thread pool: {e}")))?;
    let results: Vec<Result<E::Trial>> = pool.install(|| {
        (0..exp.trials())
            .into_par_iter()
            .map(|i| {
                let mut r = rng::from_seed(trial_seed::<E>(master_seed, i));
                exp.run_trial(&ctx, i, &mut r)
            })
            .collect()
    });

    let mut trials = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => trials.push(t),
            Err(e) => {
                summary.error = Some(format!("trial {i}: {e}"));
                summary.finish();
                return Ok(Run { experiment: exp, summary, trials: Vec::new() });
            }
        }
    }
    exp.summarize(&ctx, &trials, &mut summary);
    summary.finish();
    Ok(Run { experiment: exp, summary, trials })
}

/// The experiments reachable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RipProbability,
    Certifier,
    ReductionNull,
    ReductionPlanted,
    Spectral,
    LemmaEvents,
    LemmaOccupancy,
    TailBound,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::RipProbability,
        ExperimentKind::Certifier,
        ExperimentKind::ReductionNull,
        ExperimentKind::ReductionPlanted,
        ExperimentKind::Spectral,
        ExperimentKind::LemmaEvents,
        ExperimentKind::LemmaOccupancy,
        ExperimentKind::TailBound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::RipProbability => RipProbability::NAME,
            ExperimentKind::Certifier => CertifierExperiment::NAME,
            ExperimentKind::ReductionNull => ReductionNull::NAME,
            ExperimentKind::ReductionPlanted => ReductionPlanted::NAME,
            ExperimentKind::Spectral => Spectral::NAME,
            ExperimentKind::LemmaEvents => LemmaEvents::NAME,
            ExperimentKind::LemmaOccupancy => LemmaOccupancy::NAME,
            ExperimentKind::TailBound => TailBound::NAME,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.as_str()).collect();
                Error::InvalidParameter(format!("unknown experiment '{s}'; expected one of {}", names.join(", ")))
            })
    }
}

/// Output files requested from [`run_named`].
#[derive(Default)]
pub struct Sinks<'a> {
    pub records: Option<&'a mut dyn Write>,
    pub csv: Option<&'a mut dyn Write>,
}

/// Parses `params` as the experiment's parameter struct without running it.
pub fn resolve_params(kind: ExperimentKind, params: Value) -> Result<Value> {
    fn roundtrip<E: Experiment + DeserializeOwned>(params: Value) -> Result<Value> {
        let exp: E = serde_json::from_value(params).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        exp.validate()?;
        Ok(serde_json::to_value(&exp)?)
    }
    match kind {
        ExperimentKind::RipProbability => roundtrip::<RipProbability>(params),
        ExperimentKind::Certifier => roundtrip::<CertifierExperiment>(params),
        ExperimentKind::ReductionNull => roundtrip::<ReductionNull>(params),
        ExperimentKind::ReductionPlanted => roundtrip::<ReductionPlanted>(params),
        ExperimentKind::Spectral => roundtrip::<Spectral>(params),
        ExperimentKind::LemmaEvents => roundtrip::<LemmaEvents>(params),
        ExperimentKind::LemmaOccupancy => roundtrip::<LemmaOccupancy>(params),
        ExperimentKind::TailBound => roundtrip::<TailBound>(params),
    }
}

/// Runs an experiment from its JSON parameters, streaming records to `sinks`.
pub fn run_named(kind: ExperimentKind, params: Value, master_seed: u64, opts: RunOptions, sinks: Sinks<'_>) -> Result<ExperimentSummary> {
    fn go<E: Experiment + DeserializeOwned>(params: Value, master_seed: u64, opts: RunOptions, sinks: Sinks<'_>) -> Result<ExperimentSummary> {
        let exp: E = serde_json::from_value(params).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let done = run(&exp, master_seed, opts)?;
        if let Some(out) = sinks.records {
            done.write_records(out)?;
        }
        if let Some(out) = sinks.csv {
            done.write_csv(out)?;
        }
        Ok(done.summary)
    }
    match kind {
        ExperimentKind::RipProbability => go::<RipProbability>(params, master_seed, opts, sinks),
        ExperimentKind::Certifier => go::<CertifierExperiment>(params, master_seed, opts, sinks),
        ExperimentKind::ReductionNull => go::<ReductionNull>(params, master_seed, opts, sinks),
        ExperimentKind::ReductionPlanted => go::<ReductionPlanted>(params, master_seed, opts, sinks),
        ExperimentKind::Spectral => go::<Spectral>(params, master_seed, opts, sinks),
        ExperimentKind::LemmaEvents => go::<LemmaEvents>(params, master_seed, opts, sinks),
        ExperimentKind::LemmaOccupancy => go::<LemmaOccupancy>(params, master_seed, opts, sinks),
        ExperimentKind::TailBound => go::<TailBound>(params, master_seed, opts, sinks),
    }
}
