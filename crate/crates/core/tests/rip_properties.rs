mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use ripforge::certifiers::CertifierKind;
use ripforge::distributions::{DistKind, SubGaussianDist};
use ripforge::rip::{is_rip, max_incoherence, rip_margin_exact, rip_margin_sampled, RipParams};
use ripforge::{rng, DesignMatrix};

fn design(seed: u64, n: usize, p: usize, kind: usize) -> DesignMatrix {
    let mut r = rng::from_seed(seed);
    SubGaussianDist::new(DistKind::ALL[kind % 3]).matrix_sample(n, p, &mut r).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn margin_matches_oracle_6x8(seed in any::<u64>(), kind in 0usize..3, k in 1usize..=3) {
        let x = design(seed, 6, 8, kind);
        let exact = rip_margin_exact(&x, k).unwrap();
        prop_assert!((exact - common::brute_margin(&x, k)).abs() <= 1e-8);
    }

    #[test]
    fn margin_matches_oracle_8x12(seed in any::<u64>(), kind in 0usize..3, k in 1usize..=3) {
        let x = design(seed, 8, 12, kind);
        let exact = rip_margin_exact(&x, k).unwrap();
        prop_assert!((exact - common::brute_margin(&x, k)).abs() <= 1e-8);
    }

    #[test]
    fn margin_is_monotone_in_k(seed in any::<u64>(), n in 2usize..20, p in 2usize..9, kind in 0usize..3) {
        let x = design(seed, n, p, kind);
        let mut prev = 0.0;
        for k in 1..=p.min(5) {
            let m = rip_margin_exact(&x, k).unwrap();
            prop_assert!(m >= prev - 1e-12, "k = {k}: {m} < {prev}");
            prev = m;
        }
    }

    #[test]
    fn margin_sandwiched_by_incoherence(seed in any::<u64>(), n in 2usize..30, p in 2usize..9, kind in 0usize..3, k in 2usize..5) {
        let x = design(seed, n, p, kind);
        let k = k.min(p);
        let mu = max_incoherence(&x);
        let m = rip_margin_exact(&x, k).unwrap();
        prop_assert!(mu <= m + 1e-12);
        prop_assert!(m <= k as f64 * mu + 1e-12);
        let diag = (0..p)
            .map(|j| (x.column(j).iter().map(|v| v * v).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        prop_assert!((rip_margin_exact(&x, 1).unwrap() - diag).abs() < 1e-12);
    }

    #[test]
    fn margin_invariant_under_column_permutation_and_sign_flips(seed in any::<u64>(), n in 2usize..20, p in 2usize..9, k in 1usize..4) {
        let x = design(seed, n, p, 0);
        let k = k.min(p);
        let mut r = rng::from_seed(seed ^ 1);
        let mut perm: Vec<usize> = (0..p).collect();
        perm.shuffle(&mut r);
        let mut y = x.permute_columns(&perm).unwrap();
        y.scale_column(perm[0] % p, -1.0);
        let a = rip_margin_exact(&x, k).unwrap();
        let b = rip_margin_exact(&y, k).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn margin_of_scaled_orthonormal_columns(c in 0.1f64..3.0, n in 3usize..10, k in 1usize..4) {
        // c * I has Gram c^2 I, so every margin is |c^2 - 1|
        let mut x = DesignMatrix::identity(n, n).unwrap();
        for j in 0..n {
            x.scale_column(j, c);
        }
        let m = rip_margin_exact(&x, k.min(n)).unwrap();
        prop_assert!((m - (c * c - 1.0).abs()).abs() < 1e-12);
    }

    #[test]
    fn sampled_never_exceeds_exact(seed in any::<u64>(), n in 2usize..20, p in 2usize..9, k in 1usize..4) {
        let x = design(seed, n, p, 1);
        let k = k.min(p);
        let mut r = rng::from_seed(seed);
        let s = rip_margin_sampled(&x, k, 2000, &mut r).unwrap();
        prop_assert!(s <= rip_margin_exact(&x, k).unwrap() + 1e-12);
    }

    #[test]
    fn certifiers_are_sound(seed in any::<u64>(), n in 1usize..40, p in 2usize..10, k in 1usize..4, theta in 0.05f64..0.95, kind in 0usize..3) {
        let x = design(seed, n, p, kind);
        let params = RipParams::new(k.min(p), theta).unwrap();
        let truth = is_rip(&x, params).unwrap();
        for c in CertifierKind::ALL {
            if let Ok(out) = c.build(1.0).certify(&x, params) {
                prop_assert_eq!(out.certified, out.statistic <= out.threshold);
                prop_assert!(!out.certified || truth, "{c} certified a non-RIP matrix");
            }
        }
    }
}
