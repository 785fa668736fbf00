//! Simple undirected graphs, Erdős–Rényi and planted dense subgraph
//! generation, edge density and the spectral detection statistic.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::lanczos_largest;
use crate::error::{Error, Result};
use crate::matrix::dot;

/// Absolute tolerance on the spectral statistic.
pub const SPECTRAL_TOLERANCE: f64 = 1e-8;

/// A simple undirected graph on `m` vertices stored as a dense bit matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    m: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Graph {
    pub fn empty(m: usize) -> Self {
        let words = m.div_ceil(64);
        Self { m, words, bits: vec![0; m * words] }
    }

    pub fn complete(m: usize) -> Self {
        let mut g = Self::empty(m);
        for u in 0..m {
            for v in u + 1..m {
                g.add_edge(u, v);
            }
        }
        g
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    #[inline]
    fn set_bit(&mut self, u: usize, v: usize, on: bool) {
        let w = &mut self.bits[u * self.words + v / 64];
        if on {
            *w |= 1 << (v % 64);
        } else {
            *w &= !(1 << (v % 64));
        }
    }

    /// Sets the pair `{u, v}`; self-loops are ignored.
    pub fn set_edge(&mut self, u: usize, v: usize, on: bool) {
        if u == v {
            return;
        }
        self.set_bit(u, v, on);
        self.set_bit(v, u, on);
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        self.set_edge(u, v, true);
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum::<usize>() / 2
    }

    /// All edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.m {
            for v in u + 1..self.m {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn degree(&self, u: usize) -> usize {
        self.bits[u * self.words..(u + 1) * self.words]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// Number of edges with both endpoints in `vertices` (assumed distinct).
    pub fn edges_within(&self, vertices: &[usize]) -> usize {
        let mut count = 0;
        for (a, &u) in vertices.iter().enumerate() {
            for &v in &vertices[a + 1..] {
                count += usize::from(self.has_edge(u, v));
            }
        }
        count
    }

    /// Number of pairs `(u, w)` in `left x right` that are edges; the two
    /// sets are assumed disjoint.
    pub fn edges_between(&self, left: &[usize], right: &[usize]) -> usize {
        let mut mask = vec![0u64; self.words];
        for &w in right {
            mask[w / 64] |= 1 << (w % 64);
        }
        left.iter()
            .map(|&u| {
                self.bits[u * self.words..(u + 1) * self.words]
                    .iter()
                    .zip(&mask)
                    .map(|(r, m)| (r & m).count_ones() as usize)
                    .sum::<usize>()
            })
            .sum()
    }

    /// Induced subgraph on `vertices`, relabelled `0..len` in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut h = Graph::empty(vertices.len());
        for (a, &u) in vertices.iter().enumerate() {
            for (b, &v) in vertices.iter().enumerate().skip(a + 1) {
                if self.has_edge(u, v) {
                    h.add_edge(a, b);
                }
            }
        }
        h
    }
}

/// Draws every pair of `0..m` as an independent fair coin.
fn fair_coin_graph<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Graph {
    let mut g = Graph::empty(m);
    let mut buffer = 0u64;
    let mut left = 0;
    for u in 0..m {
        for v in u + 1..m {
            if left == 0 {
                buffer = rng.random();
                left = 64;
            }
            if buffer & 1 == 1 {
                g.add_edge(u, v);
            }
            buffer >>= 1;
            left -= 1;
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedKind {
    Clique,
    RandomDense,
    Explicit,
}

/// A graph `H` on `kappa` vertices with at least
/// `(1/2 + epsilon) kappa (kappa - 1) / 2` edges.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSeed {
    pub kind: SeedKind,
    pub kappa: usize,
    pub epsilon: f64,
    graph: Graph,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::InvalidSeedGraph(format!("epsilon must lie in (0, 1/2], got {epsilon}")));
    }
    Ok(())
}

fn required_edges(kappa: usize, epsilon: f64) -> f64 {
    (0.5 + epsilon) * (kappa * kappa.saturating_sub(1)) as f64 / 2.0
}

impl DenseSeed {
    /// The complete graph on `kappa` vertices (`epsilon = 1/2`).
    pub fn clique(kappa: usize) -> Self {
        Self { kind: SeedKind::Clique, kappa, epsilon: 0.5, graph: Graph::complete(kappa) }
    }

    /// Edges drawn with probability `min(1, 1/2 + 2 epsilon)`, redrawn until
    /// the edge-count requirement holds.
    pub fn random_dense<R: Rng + ?Sized>(kappa: usize, epsilon: f64, rng: &mut R) -> Result<Self> {
        check_epsilon(epsilon)?;
        let prob = (0.5 + 2.0 * epsilon).min(1.0);
        let need = required_edges(kappa, epsilon);
        loop {
            let mut g = Graph::empty(kappa);
            for u in 0..kappa {
                for v in u + 1..kappa {
                    if rng.random::<f64>() < prob {
                        g.add_edge(u, v);
                    }
                }
            }
            if g.edge_count() as f64 >= need {
                return Ok(Self { kind: SeedKind::RandomDense, kappa, epsilon, graph: g });
            }
        }
    }

    pub fn explicit(kappa: usize, epsilon: f64, edges: &[(usize, usize)]) -> Result<Self> {
        check_epsilon(epsilon)?;
        let mut g = Graph::empty(kappa);
        for &(u, v) in edges {
            if u == v || u >= kappa || v >= kappa {
                return Err(Error::InvalidSeedGraph(format!("bad edge ({u}, {v}) for kappa = {kappa}")));
            }
            g.add_edge(u, v);
        }
        Self::from_graph(SeedKind::Explicit, epsilon, g)
    }

    fn from_graph(kind: SeedKind, epsilon: f64, graph: Graph) -> Result<Self> {
        let kappa = graph.m();
        let need = required_edges(kappa, epsilon);
        let have = graph.edge_count();
        if (have as f64) < need {
            return Err(Error::InvalidSeedGraph(format!(
                "{have} edges on {kappa} vertices, need at least {need} for epsilon = {epsilon}"
            )));
        }
        Ok(Self { kind, kappa, epsilon, graph })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }
}

/// A graph together with the hidden planted set, if any.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub graph: Graph,
    /// Vertex `planted_set[a]` carries seed vertex `a`.
    pub planted_set: Option<Vec<usize>>,
    pub seed_graph: Option<DenseSeed>,
}

impl PlantedInstance {
    /// Planted vertices in increasing order.
    pub fn sorted_planted_set(&self) -> Option<Vec<usize>> {
        self.planted_set.as_ref().map(|k| {
            let mut k = k.clone();
            k.sort_unstable();
            k
        })
    }

    pub fn metadata(&self) -> Option<PlantedMeta> {
        let seed = self.seed_graph.as_ref()?;
        Some(PlantedMeta {
            m: self.graph.m(),
            kappa: seed.kappa,
            epsilon: seed.epsilon,
            kind: seed.kind,
            planted_set: self.sorted_planted_set()?,
        })
    }
}

/// JSON sidecar describing a planted instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedMeta {
    pub m: usize,
    pub kappa: usize,
    pub epsilon: f64,
    pub kind: SeedKind,
    pub planted_set: Vec<usize>,
}

/// Erdős–Rényi graph with edge probability 1/2.
pub fn er_generate<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<PlantedInstance> {
    if m == 0 {
        return Err(Error::InvalidGraph("m must be at least 1".into()));
    }
    Ok(PlantedInstance { graph: fair_coin_graph(m, rng), planted_set: None, seed_graph: None })
}

/// Plants `seed` on a uniformly random vertex set under a uniformly random
/// labelling; every other pair is an independent fair coin.
pub fn plant<R: Rng + ?Sized>(m: usize, seed: &DenseSeed, rng: &mut R) -> Result<PlantedInstance> {
    if seed.kappa > m {
        return Err(Error::InvalidGraph(format!("kappa = {} exceeds m = {m}", seed.kappa)));
    }
    if m == 0 {
        return Err(Error::InvalidGraph("m must be at least 1".into()));
    }
    let mut k = index::sample(rng, m, seed.kappa).into_vec();
    k.shuffle(rng);
    let mut g = fair_coin_graph(m, rng);
    for a in 0..seed.kappa {
        for b in a + 1..seed.kappa {
            g.set_edge(k[a], k[b], seed.graph.has_edge(a, b));
        }
    }
    Ok(PlantedInstance { graph: g, planted_set: Some(k), seed_graph: Some(seed.clone()) })
}

/// Fraction of pairs inside `k` that are edges.
pub fn edge_density(g: &Graph, k: &[usize]) -> Result<f64> {
    if k.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 vertices, got {}", k.len())));
    }
    let pairs = k.len() * (k.len() - 1) / 2;
    Ok(g.edges_within(k) as f64 / pairs as f64)
}

/// Largest eigenvalue of `A_G - 11^T/2`.
pub fn spectral_statistic(g: &Graph) -> Result<f64> {
    let m = g.m();
    if m == 0 {
        return Err(Error::InvalidGraph("empty vertex set".into()));
    }
    // dense +-1/2 form: off-diagonal entries are 1/2 for edges, -1/2 otherwise
    let mut dense = vec![0.0f64; m * m];
    for u in 0..m {
        for v in 0..m {
            dense[u * m + v] = if g.has_edge(u, v) { 0.5 } else { -0.5 };
        }
    }
    let res = lanczos_largest(
        m,
        |x, y| {
            for (yi, row) in y.iter_mut().zip(dense.chunks_exact(m)) {
                *yi = dot(row, x);
            }
        },
        SPECTRAL_TOLERANCE,
        m,
    )?;
    Ok(res.value)
}

/// 1 when the spectral statistic exceeds `tau`.
pub fn spectral_detect(g: &Graph, tau: f64) -> Result<u8> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be positive, got {tau}")));
    }
    Ok(u8::from(spectral_statistic(g)? > tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::jacobi;
    use crate::matrix::SymmetricMatrix;
    use crate::rng;

    #[test]
    fn er_small_cases() {
        let g = er_generate(1, &mut rng::from_seed(1)).unwrap();
        assert_eq!(g.graph.edge_count(), 0);
        assert!(g.planted_set.is_none());
        assert!(er_generate(0, &mut rng::from_seed(1)).is_err());
        let a = er_generate(50, &mut rng::from_seed(2)).unwrap();
        let b = er_generate(50, &mut rng::from_seed(2)).unwrap();
        assert_eq!(a.graph, b.graph);
    }

    #[test]
    fn graph_is_simple_and_symmetric() {
        let g = er_generate(70, &mut rng::from_seed(3)).unwrap().graph;
        for u in 0..70 {
            assert!(!g.has_edge(u, u));
            for v in 0..70 {
                assert_eq!(g.has_edge(u, v), g.has_edge(v, u));
            }
        }
        assert_eq!(g.edges().len(), g.edge_count());
    }

    #[test]
    fn full_clique_gives_complete_graph() {
        let inst = plant(30, &DenseSeed::clique(30), &mut rng::from_seed(4)).unwrap();
        assert_eq!(inst.graph, Graph::complete(30));
    }

    #[test]
    fn planted_restriction_matches_seed() {
        let mut r = rng::from_seed(5);
        let seed = DenseSeed::random_dense(12, 0.1, &mut r).unwrap();
        let inst = plant(60, &seed, &mut r).unwrap();
        let k = inst.planted_set.clone().unwrap();
        assert_eq!(inst.graph.induced(&k), *seed.graph());
        let d = edge_density(&inst.graph, &k).unwrap();
        assert!(d >= 0.5 + seed.epsilon);
    }

    #[test]
    fn seed_validation() {
        assert!(DenseSeed::explicit(4, 0.5, &[(0, 1), (2, 3)]).is_err());
        let full: Vec<_> = (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v))).collect();
        assert!(DenseSeed::explicit(4, 0.5, &full).is_ok());
        assert!(DenseSeed::explicit(4, 0.6, &full).is_err());
        assert!(DenseSeed::explicit(4, 0.0, &full).is_err());
        assert!(DenseSeed::explicit(4, 0.25, &[(0, 4)]).is_err());
        assert!(plant(10, &DenseSeed::clique(11), &mut rng::from_seed(1)).is_err());
    }

    #[test]
    fn edge_density_examples() {
        assert_eq!(edge_density(&Graph::complete(6), &[0, 2, 5]).unwrap(), 1.0);
        assert_eq!(edge_density(&Graph::empty(6), &[0, 2, 5]).unwrap(), 0.0);
        assert!(edge_density(&Graph::empty(6), &[1]).is_err());
    }

    #[test]
    fn spectral_closed_forms() {
        let s = spectral_statistic(&Graph::complete(40)).unwrap();
        assert!((s - 19.0).abs() < 1e-8, "{s}");
        let e = spectral_statistic(&Graph::empty(40)).unwrap();
        assert!(e.abs() < 1e-8, "{e}");
        assert_eq!(spectral_detect(&Graph::complete(100), 10.0).unwrap(), 1);
        assert_eq!(spectral_detect(&Graph::empty(100), 0.5).unwrap(), 0);
        assert!(spectral_detect(&Graph::empty(3), 0.0).is_err());
    }

    #[test]
    fn spectral_matches_dense_jacobi() {
        for seed in 0..4 {
            let g = er_generate(45, &mut rng::from_seed(seed)).unwrap().graph;
            let m = SymmetricMatrix::from_upper(45, |u, v| if g.has_edge(u, v) { 0.5 } else { -0.5 });
            let top = *jacobi(&m, false).unwrap().values.last().unwrap();
            assert!((spectral_statistic(&g).unwrap() - top).abs() < 1e-8);
        }
    }

    #[test]
    fn rayleigh_bound_on_planted_set() {
        let mut r = rng::from_seed(8);
        let inst = plant(300, &DenseSeed::clique(60), &mut r).unwrap();
        let k = inst.planted_set.unwrap();
        let kappa = k.len() as f64;
        let rq = (2.0 * inst.graph.edges_within(&k) as f64 - kappa * kappa / 2.0) / kappa;
        let stat = spectral_statistic(&inst.graph).unwrap();
        assert!(stat >= rq - 1e-8);
        assert!(rq >= 0.5 * (kappa - 1.0) - 1.5);
    }
}
