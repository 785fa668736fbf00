use proptest::prelude::*;
use ripforge::distributions::DistKind;
use ripforge::graphs::{edge_density, er_generate, plant, spectral_statistic, DenseSeed};
use ripforge::harness::{run, ReductionNull, RunOptions};
use ripforge::reduction::{derive_dims, hard_sequence, reduce, score_identity, PRule, ReductionConfig};
use ripforge::rng;

#[test]
fn er_statistic_is_of_order_sqrt_m() {
    let m = 2000;
    let tau = 2.0 * (m as f64).sqrt();
    let mut in_band = 0;
    for t in 0..100 {
        let mut r = rng::stream(7, "er-calibration", t);
        let g = er_generate(m, &mut r).unwrap().graph;
        let s = spectral_statistic(&g).unwrap();
        assert!(s <= tau, "trial {t}: statistic {s} above 2 sqrt(m)");
        let scaled = s / (m as f64).sqrt();
        in_band += usize::from((0.7..=1.3).contains(&scaled));
    }
    assert!(in_band >= 95, "{in_band}/100 inside [0.7, 1.3]");
}

#[test]
fn random_dense_plants_respect_density_and_rayleigh_bound() {
    for (t, eps) in [0.1, 0.25, 0.4].into_iter().enumerate() {
        let mut r = rng::stream(8, "dense", t as u64);
        let seed = DenseSeed::random_dense(60, eps, &mut r).unwrap();
        let inst = plant(300, &seed, &mut r).unwrap();
        let k = inst.sorted_planted_set().unwrap();
        assert!(edge_density(&inst.graph, &k).unwrap() >= 0.5 + eps);
        let kf = k.len() as f64;
        let rayleigh = (2.0 * inst.graph.edges_within(&k) as f64 - kf * kf / 2.0) / kf;
        let s = spectral_statistic(&inst.graph).unwrap();
        assert!(s >= rayleigh - 1e-6);
        assert!(rayleigh >= eps * (kf - 1.0) - 1.5);
    }
}

#[test]
fn folding_preserves_variance() {
    // ell = floor(k^beta) with k = 20: beta 0 -> 1, log 2 / log 20 -> 2, log 4 / log 20 -> 4
    let k: f64 = 20.0;
    for (beta, ell) in [(0.0, 1usize), (2f64.ln() / k.ln(), 2), (4f64.ln() / k.ln(), 4)] {
        for kind in DistKind::ALL {
            let cfg = ReductionConfig::new(4000, 200, beta, kind);
            assert_eq!(derive_dims(&cfg).unwrap().ell, ell);
            let exp = ReductionNull { reduction: cfg, trials: 30, ks_samples_per_trial: 1000 };
            let s = run(&exp, 99, RunOptions::default()).unwrap().summary;
            let v = s.test("variance").unwrap();
            assert!(v.pass, "ell = {ell}, {kind}: {v:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trace_rebuild_and_score_identity(seed in any::<u64>(), kappa in 20usize..60, beta in 0.0f64..0.7, kind in 0usize..3) {
        let mut r = rng::from_seed(seed);
        let m = 400;
        let inst = plant(m, &DenseSeed::clique(kappa), &mut r).unwrap();
        let mut cfg = ReductionConfig::new(m, kappa, beta, DistKind::ALL[kind]);
        cfg.block_factor = 4;
        let dims = derive_dims(&cfg).unwrap();
        cfg.p_rule = PRule::Explicit(dims.n + 3);
        let (x, trace) = reduce(&inst.graph, &cfg, &mut r).unwrap();
        prop_assert_eq!(x.p(), dims.n + 3);
        let rebuilt = trace.rebuild_xtilde().unwrap();
        prop_assert_eq!(rebuilt.as_slice(), trace.xtilde.as_slice());
        for i in 0..dims.n {
            for j in 0..dims.n {
                prop_assert_eq!(x.get(i, j).to_bits(), trace.xtilde.get(i, j).to_bits());
            }
        }
        let planted = inst.planted_set.unwrap();
        let (lhs, rhs) = score_identity(&trace, &inst.graph, &planted).unwrap();
        prop_assert_eq!(lhs, rhs);
        // sign and half agree entry by entry
        for (a, z) in trace.a.iter().zip(&trace.z) {
            prop_assert!(f64::from(*a) * z >= 0.0);
        }
    }

    #[test]
    fn hard_sequence_theta_lies_between_floor_and_ceiling(n in 50usize..200_000, alpha in 0.0f64..0.5, delta in 0.01f64..0.1) {
        if let Ok(h) = hard_sequence(n, alpha, 0.0, delta) {
            let (lo, hi) = (h.theta_floor.min(h.theta_ceiling), h.theta_floor.max(h.theta_ceiling));
            prop_assert!(h.theta >= lo * (1.0 - 1e-12) && h.theta <= hi * (1.0 + 1e-12));
            prop_assert!((h.k as f64) > h.k_lower && (h.k as f64) < h.k_upper);
        }
    }
}
