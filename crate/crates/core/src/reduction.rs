//! The graph-to-matrix reduction.
//!
//! Given a graph on `m` vertices, draw `2N` distinct vertices `U`, `W`
//! (`N = floor(m / L)`), turn the bipartite adjacency between them into a
//! `+-1` matrix `A`, replace each sign by a draw from the matching half of
//! the median-split entry law, average the `ell x ell` grid of `n x n`
//! blocks with weight `1/ell`, and pad with fresh columns up to `p`.
//!
//! On an Erdős–Rényi input `A` is a matrix of independent fair signs, so
//! the output has independent entries with the same law as a plain random
//! design. A planted dense subgraph leaves a block of aligned signs that a
//! sparse test vector can see.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certifiers::Certifier;
use crate::distributions::{DistKind, Side, SubGaussianDist};
use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::matrix::DesignMatrix;
use crate::rip::RipParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PRule {
    /// `p = n`.
    EqualN,
    /// Fixed `p`, which must be at least `n`.
    Explicit(usize),
}

fn default_block_factor() -> usize {
    10
}

fn default_p_rule() -> PRule {
    PRule::EqualN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionConfig {
    pub m: usize,
    pub kappa: usize,
    #[serde(rename = "L", default = "default_block_factor")]
    pub block_factor: usize,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_p_rule")]
    pub p_rule: PRule,
    pub distribution: DistKind,
    /// Density excess of the planted seed; diagnostics only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl ReductionConfig {
    pub fn new(m: usize, kappa: usize, beta: f64, distribution: DistKind) -> Self {
        Self { m, kappa, block_factor: 10, beta, p_rule: PRule::EqualN, distribution, epsilon: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_factor < 2 {
            return Err(Error::Config(format!("L must be at least 2, got {}", self.block_factor)));
        }
        if self.kappa > self.m {
            return Err(Error::Config(format!("kappa = {} exceeds m = {}", self.kappa, self.m)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be a finite non-negative number, got {}", self.beta)));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps <= 0.5) {
                return Err(Error::Config(format!("epsilon must lie in (0, 1/2], got {eps}")));
            }
        }
        Ok(())
    }

    pub fn dist(&self) -> SubGaussianDist {
        SubGaussianDist::new(self.distribution)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedDims {
    /// Number of vertices drawn on each side.
    #[serde(rename = "N")]
    pub big_n: usize,
    pub ell: usize,
    pub n: usize,
    pub k: usize,
    pub p: usize,
}

/// `k = floor(kappa/L)`, `ell = floor(k^beta)`, `N = floor(m/L)`,
/// `n = floor(N/ell)`, `p` from the rule.
pub fn derive_dims(cfg: &ReductionConfig) -> Result<DerivedDims> {
    cfg.validate()?;
    let k = cfg.kappa / cfg.block_factor;
    if k == 0 {
        return Err(Error::Config(format!(
            "k = floor(kappa / L) = floor({} / {}) is zero",
            cfg.kappa, cfg.block_factor
        )));
    }
    let ell = floor_pow(k, cfg.beta);
    if ell == 0 {
        return Err(Error::Config("ell = floor(k^beta) is zero".into()));
    }
    let big_n = cfg.m / cfg.block_factor;
    let n = big_n / ell;
    if n == 0 {
        return Err(Error::Config(format!("n = floor(N / ell) = floor({big_n} / {ell}) is zero")));
    }
    let p = match cfg.p_rule {
        PRule::EqualN => n,
        PRule::Explicit(p) if p >= n => p,
        PRule::Explicit(p) => return Err(Error::Config(format!("explicit p = {p} is below n = {n}"))),
    };
    Ok(DerivedDims { big_n, ell, n, k, p })
}

/// `floor(k^beta)` robust to `k^beta` landing a hair below an integer.
fn floor_pow(k: usize, beta: f64) -> usize {
    let v = (k as f64).powf(beta);
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        v.floor() as usize
    }
}

/// Full intermediate state of one reduction run.
#[derive(Debug, Clone)]
pub struct ReductionTrace {
    pub m: usize,
    pub dims: DerivedDims,
    pub u: Vec<usize>,
    pub w: Vec<usize>,
    /// `N x N` signs, row-major: `+1` iff `u_i ~ w_j`.
    pub a: Vec<i8>,
    /// `N x N` half draws, row-major.
    pub z: Vec<f64>,
    pub xtilde: DesignMatrix,
    pub x: DesignMatrix,
}

impl ReductionTrace {
    #[inline]
    pub fn sign(&self, i: usize, j: usize) -> i8 {
        self.a[i * self.dims.big_n + j]
    }

    #[inline]
    pub fn z_at(&self, i: usize, j: usize) -> f64 {
        self.z[i * self.dims.big_n + j]
    }

    /// Position in `Z` of entry `(i, j)` of block `(a, b)`.
    #[inline]
    pub fn block_source(&self, a: usize, b: usize, i: usize, j: usize) -> (usize, usize) {
        (a * self.dims.n + i, b * self.dims.n + j)
    }

    /// `A` as a design matrix of `+-1` values.
    pub fn a_matrix(&self) -> Result<DesignMatrix> {
        let nn = self.dims.big_n;
        DesignMatrix::new(nn, nn, self.a.iter().map(|&s| f64::from(s)).collect())
    }

    pub fn z_matrix(&self) -> Result<DesignMatrix> {
        let nn = self.dims.big_n;
        DesignMatrix::new(nn, nn, self.z.clone())
    }

    /// Recomputes the block average from `Z`.
    pub fn rebuild_xtilde(&self) -> Result<DesignMatrix> {
        block_average(&self.z, self.dims)
    }
}

fn block_average(z: &[f64], dims: DerivedDims) -> Result<DesignMatrix> {
    let DerivedDims { big_n, ell, n, .. } = dims;
    let scale = 1.0 / ell as f64;
    DesignMatrix::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for a in 0..ell {
            for b in 0..ell {
                s += z[(a * n + i) * big_n + b * n + j];
            }
        }
        s * scale
    })
}

/// Runs the reduction on `g`.
pub fn reduce<R: Rng + ?Sized>(g: &Graph, cfg: &ReductionConfig, rng: &mut R) -> Result<(DesignMatrix, ReductionTrace)> {
    let dims = derive_dims(cfg)?;
    if g.m() != cfg.m {
        return Err(Error::Config(format!("graph has {} vertices, config says m = {}", g.m(), cfg.m)));
    }
    let DerivedDims { big_n, n, p, .. } = dims;
    if 2 * big_n > g.m() {
        return Err(Error::Config(format!("cannot draw 2N = {} distinct vertices from {}", 2 * big_n, g.m())));
    }

    let mut perm: Vec<usize> = (0..g.m()).collect();
    perm.shuffle(rng);
    let u = perm[..big_n].to_vec();
    let w = perm[big_n..2 * big_n].to_vec();

    let q = cfg.dist();
    let upper = q.half(Side::Upper, n);
    let lower = q.half(Side::Lower, n);
    let mut a = Vec::with_capacity(big_n * big_n);
    let mut z = Vec::with_capacity(big_n * big_n);
    for &ui in &u {
        for &wj in &w {
            if g.has_edge(ui, wj) {
                a.push(1i8);
                z.push(upper.sample(rng));
            } else {
                a.push(-1i8);
                z.push(lower.sample(rng));
            }
        }
    }

    let xtilde = block_average(&z, dims)?;
    let x = if p == n {
        xtilde.clone()
    } else {
        let extra = q.matrix_sample(n, p - n, rng)?;
        DesignMatrix::from_fn(n, p, |i, j| if j < n { xtilde.get(i, j) } else { extra.get(i, j - n) })?
    };
    let trace = ReductionTrace { m: g.m(), dims, u, w, a, z, xtilde, x: x.clone() };
    Ok((x, trace))
}

/// `1 - psi(X)`: 1 flags the input as planted.
pub fn run_distinguisher<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &ReductionConfig,
    certifier: &dyn Certifier,
    theta: f64,
    rng: &mut R,
) -> Result<u8> {
    let (x, trace) = reduce(g, cfg, rng)?;
    let params = RipParams::new(trace.dims.k, theta)?;
    let outcome = certifier.certify(&x, params)?;
    Ok(u8::from(!outcome.certified))
}

/// Witness vector and the quadratic form it exposes.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    /// Folded unit vector in `R^n`.
    pub v: Vec<f64>,
    /// `||Xtilde v||^2`.
    pub value: f64,
    pub k1: usize,
    /// Rows `i` with `u_i` planted.
    pub rows: Vec<usize>,
    /// Selected columns, best score first.
    pub columns: Vec<usize>,
    /// `s_j` for every column of `A`.
    pub scores: Vec<i64>,
    pub warning: Option<String>,
}

/// `ceil((1 - epsilon/8) k)`.
pub fn witness_support_size(k: usize, epsilon: f64) -> usize {
    let raw = (1.0 - epsilon / 8.0) * k as f64;
    ((raw - 1e-9).ceil().max(1.0)) as usize
}

fn membership(m: usize, planted: &[usize]) -> Result<Vec<bool>> {
    let mut inside = vec![false; m];
    for &v in planted {
        if v >= m {
            return Err(Error::InvalidParameter(format!("planted vertex {v} out of range for m = {m}")));
        }
        inside[v] = true;
    }
    Ok(inside)
}

/// Builds the witness vector from a completed trace and the planted set.
///
/// Rows `S` are the positions of planted vertices in `U`; column scores are
/// `s_j = sum_{i in S} A_ij`; the `k1` best-scoring columns among the first
/// `ell * n` (ties to the lowest index) carry weight `1/sqrt(k1)`; the
/// resulting vector is folded over the `ell` column blocks and normalized.
pub fn witness_quadratic_form(trace: &ReductionTrace, planted: &[usize], epsilon: f64) -> Result<Witness> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/2], got {epsilon}")));
    }
    let DerivedDims { big_n, ell, n, k, .. } = trace.dims;
    let inside = membership(trace.m, planted)?;
    let rows: Vec<usize> = (0..big_n).filter(|&i| inside[trace.u[i]]).collect();
    let warning = rows
        .is_empty()
        .then(|| "no planted vertex among the sampled rows; witness carries no signal".to_string());

    let mut scores = vec![0i64; big_n];
    for &i in &rows {
        for (j, s) in scores.iter_mut().enumerate() {
            *s += i64::from(trace.sign(i, j));
        }
    }

    let width = ell * n;
    let k1 = witness_support_size(k, epsilon).min(width);
    let mut order: Vec<usize> = (0..width).collect();
    order.sort_by(|&x, &y| scores[y].cmp(&scores[x]).then(x.cmp(&y)));
    let columns = order[..k1].to_vec();

    let weight = 1.0 / (k1 as f64).sqrt();
    let v = if ell == 1 {
        let mut v = vec![0.0; n];
        for &j in &columns {
            v[j] = weight;
        }
        v
    } else {
        let mut folded = vec![0.0; n];
        for &j in &columns {
            folded[j % n] += weight;
        }
        let norm = folded.iter().map(|x| x * x).sum::<f64>().sqrt();
        folded.iter().map(|x| x / norm).collect()
    };
    let xv = trace.xtilde.mul_vec(&v);
    let value = xv.iter().map(|x| x * x).sum();
    Ok(Witness { v, value, k1, rows, columns, scores, warning })
}

/// Both sides of `sum_{j: w_j in K} s_j = 2 N_{U,W;K} - #(U cap K) #(W cap K)`,
/// the right side counted directly from the graph.
pub fn score_identity(trace: &ReductionTrace, g: &Graph, planted: &[usize]) -> Result<(i64, i64)> {
    let inside = membership(trace.m, planted)?;
    let rows: Vec<usize> = (0..trace.dims.big_n).filter(|&i| inside[trace.u[i]]).collect();
    let cols: Vec<usize> = (0..trace.dims.big_n).filter(|&j| inside[trace.w[j]]).collect();
    let mut lhs = 0i64;
    for &j in &cols {
        for &i in &rows {
            lhs += i64::from(trace.sign(i, j));
        }
    }
    let mut edges = 0i64;
    for &i in &rows {
        for &j in &cols {
            edges += i64::from(g.has_edge(trace.u[i], trace.w[j]));
        }
    }
    let rhs = 2 * edges - (rows.len() * cols.len()) as i64;
    Ok((lhs, rhs))
}

/// CDF of one block-averaged entry under an Erdős–Rényi input: the law of
/// `ell^{-1} * sum of ell^2` independent `Q/sqrt(n)` draws.
///
/// For `ell = 1` this is `Q/sqrt(n)` itself. Gaussian entries stay
/// Gaussian for any `ell`; uniform entries follow a scaled Irwin–Hall law.
/// Rademacher entries are discrete, see [`null_entry_pmf`].
pub fn null_entry_cdf(kind: DistKind, n: usize, ell: usize, x: f64) -> f64 {
    let q = SubGaussianDist::new(kind);
    let root_n = (n as f64).sqrt();
    match kind {
        DistKind::Gaussian => q.cdf(x * root_n),
        DistKind::UniformSym if ell == 1 => q.cdf(x * root_n),
        DistKind::UniformSym => {
            // ell * sqrt(n) * x = sqrt(3) (2 S - M) with S ~ IrwinHall(M)
            let terms = ell * ell;
            let s = 0.5 * (x * ell as f64 * root_n / 3f64.sqrt() + terms as f64);
            irwin_hall_cdf(terms, s)
        }
        DistKind::Rademacher => {
            let pmf = null_entry_pmf(ell);
            let terms = ell * ell;
            // value of category b is (2b - M) / (ell sqrt(n))
            pmf.iter()
                .enumerate()
                .filter(|(b, _)| (2.0 * *b as f64 - terms as f64) / (ell as f64 * root_n) <= x)
                .map(|(_, p)| p)
                .sum()
        }
    }
}

/// For Rademacher entries: probabilities of `b = 0..=ell^2` positive signs
/// among the `ell^2` averaged draws.
pub fn null_entry_pmf(ell: usize) -> Vec<f64> {
    let terms = ell * ell;
    let mut pmf = vec![0.0; terms + 1];
    // binomial(terms, b) / 2^terms via log-space for large terms
    for (b, slot) in pmf.iter_mut().enumerate() {
        let log_c = ln_factorial(terms) - ln_factorial(b) - ln_factorial(terms - b);
        *slot = (log_c - terms as f64 * std::f64::consts::LN_2).exp();
    }
    pmf
}

/// Category `b` of a Rademacher block-averaged entry `x`.
pub fn rademacher_category(x: f64, n: usize, ell: usize) -> usize {
    let terms = (ell * ell) as f64;
    let b = 0.5 * (x * ell as f64 * (n as f64).sqrt() + terms);
    b.round().clamp(0.0, terms) as usize
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

fn irwin_hall_cdf(terms: usize, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= terms as f64 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    for i in 1..=terms {
        fact *= i as f64;
    }
    let top = s.floor() as usize;
    for j in 0..=top.min(terms) {
        if j > 0 {
            binom *= (terms - j + 1) as f64 / j as f64;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * (s - j as f64).powi(terms as i32);
    }
    (total / fact).clamp(0.0, 1.0)
}

/// Parameters of a hard sequence at a given `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardSequence {
    pub p: usize,
    pub k: usize,
    pub theta: f64,
    pub ell: usize,
    /// Open window `(k_lower, k_upper)` for `k`.
    pub k_lower: f64,
    pub k_upper: f64,
    /// `sqrt(k^{1+alpha} ln p / n)`.
    pub theta_floor: f64,
    /// `k^2 / (n ell^2)`.
    pub theta_ceiling: f64,
}

fn sequence_at(n: usize, alpha: f64, beta: f64, delta: f64) -> Option<HardSequence> {
    let nf = n as f64;
    let lo_exp = 1.0 / (3.0 - alpha - 4.0 * beta);
    let hi_exp = 1.0 / (2.0 - beta) - delta;
    let (k_lower, k_upper) = (nf.powf(lo_exp), nf.powf(hi_exp));
    let first = k_lower.floor() as usize + 1;
    if (first as f64) >= k_upper {
        return None;
    }
    let mut k = nf.powf(0.5 * (lo_exp + hi_exp)).round() as usize;
    if (k as f64) <= k_lower || (k as f64) >= k_upper {
        k = first;
    }
    let ell = floor_pow(k, beta).max(1);
    let kf = k as f64;
    let theta_floor = (kf.powf(1.0 + alpha) * nf.ln() / nf).sqrt();
    let theta_ceiling = kf * kf / (nf * (ell * ell) as f64);
    let theta = (theta_floor * theta_ceiling).sqrt();
    Some(HardSequence { p: n, k, theta, ell, k_lower, k_upper, theta_floor, theta_ceiling })
}

/// Picks `(p, k, theta)` inside the hard window at sample size `n`.
pub fn hard_sequence(n: usize, alpha: f64, beta: f64, delta: f64) -> Result<HardSequence> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if !(beta >= 0.0 && beta < (1.0 - alpha) / 3.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in [0, (1 - alpha)/3) = [0, {}), got {beta}",
            (1.0 - alpha) / 3.0
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("n must be at least 2".into()));
    }
    if let Some(seq) = sequence_at(n, alpha, beta, delta) {
        return Ok(seq);
    }
    let lo_exp = 1.0 / (3.0 - alpha - 4.0 * beta);
    let hi_exp = 1.0 / (2.0 - beta) - delta;
    if lo_exp >= hi_exp {
        return Err(Error::EmptyWindow(format!(
            "exponent window ({lo_exp:.4}, {hi_exp:.4}) is empty for every n"
        )));
    }
    const SEARCH_LIMIT: usize = 100_000_000;
    let minimal = (n + 1..=SEARCH_LIMIT).find(|&c| sequence_at(c, alpha, beta, delta).is_some());
    Err(Error::EmptyWindow(match minimal {
        Some(c) => format!("no integer k in (n^{lo_exp:.4}, n^{hi_exp:.4}) at n = {n}; minimal feasible n is {c}"),
        None => format!("no integer k in the window for any n up to {SEARCH_LIMIT}"),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{er_generate, plant, DenseSeed};
    use crate::rng;

    fn cfg(beta: f64, dist: DistKind) -> ReductionConfig {
        ReductionConfig::new(4000, 200, beta, dist)
    }

    #[test]
    fn derive_dims_examples() {
        let d = derive_dims(&cfg(0.0, DistKind::Gaussian)).unwrap();
        assert_eq!(d, DerivedDims { big_n: 400, ell: 1, n: 400, k: 20, p: 400 });
        let d = derive_dims(&cfg(0.5, DistKind::Gaussian)).unwrap();
        assert_eq!((d.k, d.ell, d.big_n, d.n), (20, 4, 400, 100));
        let mut small = cfg(0.0, DistKind::Gaussian);
        small.kappa = 5;
        assert!(matches!(derive_dims(&small), Err(Error::Config(_))));
    }

    #[test]
    fn derive_dims_rejects_bad_configs() {
        let mut c = cfg(0.0, DistKind::Gaussian);
        c.block_factor = 1;
        assert!(derive_dims(&c).is_err());
        let mut c = cfg(0.0, DistKind::Gaussian);
        c.p_rule = PRule::Explicit(10);
        assert!(derive_dims(&c).is_err());
        c.p_rule = PRule::Explicit(500);
        assert_eq!(derive_dims(&c).unwrap().p, 500);
        let mut c = cfg(0.0, DistKind::Gaussian);
        c.m = 5;
        c.kappa = 5;
        c.block_factor = 2;
        assert!(derive_dims(&c).is_ok());
        c.kappa = 6;
        assert!(derive_dims(&c).is_err());
    }

    #[test]
    fn config_json_shape() {
        let mut c = cfg(0.5, DistKind::Rademacher);
        c.p_rule = PRule::Explicit(512);
        c.epsilon = Some(0.5);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(
            text,
            r#"{"m":4000,"kappa":200,"L":10,"beta":0.5,"p_rule":{"explicit":512},"distribution":"rademacher","epsilon":0.5}"#
        );
        let back: ReductionConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let minimal: ReductionConfig =
            serde_json::from_str(r#"{"m":40,"kappa":20,"p_rule":"equal-n","distribution":"gaussian"}"#).unwrap();
        assert_eq!(minimal.block_factor, 10);
        assert!(serde_json::from_str::<ReductionConfig>(r#"{"m":40,"kappa":20,"distribution":"gaussian","x":1}"#).is_err());
    }

    #[test]
    fn rademacher_null_entries() {
        let mut r = rng::from_seed(1);
        let g = er_generate(4000, &mut r).unwrap().graph;
        let (x, trace) = reduce(&g, &cfg(0.0, DistKind::Rademacher), &mut r).unwrap();
        assert_eq!((x.n(), x.p()), (400, 400));
        assert!(x.as_slice().iter().all(|v| (v.abs() - 0.05).abs() < 1e-15));
        // ell = 1: Xtilde is Z itself
        assert_eq!(trace.xtilde.as_slice(), &trace.z[..]);
    }

    #[test]
    fn trace_is_consistent() {
        let mut r = rng::from_seed(2);
        let g = er_generate(800, &mut r).unwrap().graph;
        let mut c = ReductionConfig::new(800, 160, 0.5, DistKind::Gaussian);
        c.p_rule = PRule::Explicit(30);
        let (x, trace) = reduce(&g, &c, &mut r).unwrap();
        let d = trace.dims;
        assert_eq!((d.big_n, d.k, d.ell, d.n, d.p), (80, 16, 4, 20, 30));
        let mut seen = trace.u.clone();
        seen.extend(&trace.w);
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 160);
        for i in 0..d.big_n {
            for j in 0..d.big_n {
                let s = trace.sign(i, j);
                assert_eq!(s == 1, g.has_edge(trace.u[i], trace.w[j]));
                assert_eq!(s == 1, trace.z_at(i, j) >= 0.0);
            }
        }
        assert_eq!(trace.rebuild_xtilde().unwrap(), trace.xtilde);
        for i in 0..d.n {
            for j in 0..d.n {
                assert_eq!(x.get(i, j), trace.xtilde.get(i, j));
            }
        }
        assert_eq!(trace.block_source(1, 2, 3, 4), (23, 44));
    }

    #[test]
    fn reduce_is_deterministic() {
        let g = er_generate(300, &mut rng::from_seed(3)).unwrap().graph;
        let c = ReductionConfig::new(300, 40, 0.0, DistKind::UniformSym);
        let (a, _) = reduce(&g, &c, &mut rng::from_seed(4)).unwrap();
        let (b, _) = reduce(&g, &c, &mut rng::from_seed(4)).unwrap();
        assert_eq!(a, b);
        let wrong = Graph::empty(299);
        assert!(reduce(&wrong, &c, &mut rng::from_seed(4)).is_err());
    }

    #[test]
    fn witness_single_block_uses_v_directly() {
        let mut r = rng::from_seed(5);
        let inst = plant(4000, &DenseSeed::clique(200), &mut r).unwrap();
        let (_, trace) = reduce(&inst.graph, &cfg(0.0, DistKind::Rademacher), &mut r).unwrap();
        let k = inst.planted_set.unwrap();
        let w = witness_quadratic_form(&trace, &k, 0.5).unwrap();
        assert_eq!(w.k1, 19);
        let weight = 1.0 / 19f64.sqrt();
        for (j, v) in w.v.iter().enumerate() {
            assert_eq!(*v, if w.columns.contains(&j) { weight } else { 0.0 });
        }
        let (lhs, rhs) = score_identity(&trace, &inst.graph, &k).unwrap();
        assert_eq!(lhs, rhs);
        assert!(w.value > 1.3);
    }

    #[test]
    fn witness_folding_is_unit() {
        let mut r = rng::from_seed(6);
        let inst = plant(4000, &DenseSeed::clique(200), &mut r).unwrap();
        let (_, trace) = reduce(&inst.graph, &cfg(0.5, DistKind::Gaussian), &mut r).unwrap();
        let w = witness_quadratic_form(&trace, &inst.planted_set.unwrap(), 0.5).unwrap();
        assert_eq!(w.v.len(), 100);
        let norm: f64 = w.v.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn witness_without_planted_rows_warns() {
        let mut r = rng::from_seed(7);
        let g = er_generate(100, &mut r).unwrap().graph;
        let (_, trace) = reduce(&g, &ReductionConfig::new(100, 20, 0.0, DistKind::Gaussian), &mut r).unwrap();
        let outside: Vec<usize> = (0..100).filter(|v| !trace.u.contains(v)).take(5).collect();
        let w = witness_quadratic_form(&trace, &outside, 0.5).unwrap();
        assert!(w.warning.is_some());
        assert!(w.value.is_finite());
        assert!(witness_quadratic_form(&trace, &[100], 0.5).is_err());
    }

    #[test]
    fn witness_support_rounding() {
        assert_eq!(witness_support_size(20, 0.5), 19);
        assert_eq!(witness_support_size(16, 0.5), 15);
        assert_eq!(witness_support_size(1, 0.5), 1);
        assert_eq!(witness_support_size(8, 0.25), 8);
    }

    #[test]
    fn hard_sequence_reference_point() {
        let h = hard_sequence(400, 0.0, 0.0, 0.05).unwrap();
        assert_eq!((h.p, h.k, h.ell), (400, 10, 1));
        assert!((h.k_lower - 7.368_062_997_280_773).abs() < 1e-9);
        assert!((h.k_upper - 14.822_688_982_138_954).abs() < 1e-9);
        assert!((h.theta_floor - 0.387_022_756_020_494_96).abs() < 1e-12);
        assert!((h.theta_ceiling - 0.25).abs() < 1e-15);
        assert!((h.theta - 0.311_055_765_105_107_4).abs() < 1e-12);
    }

    #[test]
    fn hard_sequence_errors() {
        assert!(matches!(hard_sequence(400, 0.99, 0.0, 0.05), Err(Error::EmptyWindow(_))));
        assert!(hard_sequence(400, 0.5, 0.2, 0.05).is_err());
        assert!(hard_sequence(400, 1.0, 0.0, 0.05).is_err());
        assert!(hard_sequence(400, 0.0, 0.0, 0.0).is_err());
        match hard_sequence(4, 0.0, 0.0, 0.05) {
            Err(Error::EmptyWindow(msg)) => assert!(msg.contains("minimal feasible n"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distinguisher_with_constant_decline() {
        use crate::certifiers::ConstantDecline;
        let mut r = rng::from_seed(8);
        let g = er_generate(200, &mut r).unwrap().graph;
        let c = ReductionConfig::new(200, 20, 0.0, DistKind::Gaussian);
        for _ in 0..3 {
            assert_eq!(run_distinguisher(&g, &c, &ConstantDecline, 0.5, &mut r).unwrap(), 1);
        }
    }

    #[test]
    fn irwin_hall_small_cases() {
        assert!((irwin_hall_cdf(1, 0.3) - 0.3).abs() < 1e-15);
        assert!((irwin_hall_cdf(2, 1.0) - 0.5).abs() < 1e-15);
        assert!((irwin_hall_cdf(2, 0.5) - 0.125).abs() < 1e-15);
        assert!((irwin_hall_cdf(16, 8.0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn null_law_helpers() {
        let pmf = null_entry_pmf(2);
        let expected = [1.0, 4.0, 6.0, 4.0, 1.0].map(|c| c / 16.0);
        for (a, b) in pmf.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(null_entry_pmf(1).len(), 2);
        assert_eq!(rademacher_category(0.1, 100, 1), 1);
        assert_eq!(rademacher_category(-0.1, 100, 1), 0);
        // ell = 2, n = 100: values (2b - 4) / 20
        assert_eq!(rademacher_category(0.0, 100, 2), 2);
        assert_eq!(rademacher_category(0.2, 100, 2), 4);
        assert!((null_entry_cdf(DistKind::Rademacher, 100, 2, 0.0) - 11.0 / 16.0).abs() < 1e-12);
        assert!((null_entry_cdf(DistKind::UniformSym, 100, 4, 0.0) - 0.5).abs() < 1e-9);
        assert!((null_entry_cdf(DistKind::Gaussian, 100, 4, 0.1) - 0.841_344_746_068_542_9).abs() < 1e-10);
    }
}
