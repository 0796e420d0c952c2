mod common;

use std::collections::BTreeSet;

use common::{random_resampled, rng};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use swmparc::metrics::{bundle_adjacency, confusion_scores, coverage, overlap};
use swmparc::streamline::ResampledStreamline;

/// Direct/flipped mean distance written out independently.
fn brute_mdf(a: &ResampledStreamline, b: &ResampledStreamline) -> f64 {
    let (pa, pb) = (a.points(), b.points());
    let k = pa.len();
    let mut direct = 0.0;
    let mut flipped = 0.0;
    for i in 0..k {
        direct += ((pa[i].x - pb[i].x).powi(2)
            + (pa[i].y - pb[i].y).powi(2)
            + (pa[i].z - pb[i].z).powi(2))
        .sqrt();
        let j = k - 1 - i;
        flipped += ((pa[i].x - pb[j].x).powi(2)
            + (pa[i].y - pb[j].y).powi(2)
            + (pa[i].z - pb[j].z).powi(2))
        .sqrt();
    }
    direct.min(flipped) / k as f64
}

fn brute_neighbors(s: &ResampledStreamline, set: &[ResampledStreamline], t: f64) -> usize {
    set.iter().filter(|o| brute_mdf(s, o) < t).count()
}

/// Clustered random set so that neighbor relations are not all empty.
fn bundle(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<ResampledStreamline> {
    let base = random_resampled(r);
    (0..n)
        .map(|_| {
            let off = common::unit(r) * r.random_range(0.0..8.0);
            base.translated(&off)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn neighbor_metrics_match_brute_force(seed in any::<u64>(), na in 1usize..=20, nb in 1usize..=20) {
        let mut r = rng(seed);
        let a = bundle(&mut r, na);
        let mut b = bundle(&mut r, nb);
        if r.random_bool(0.5) {
            let shift = b[0].midpoint() - a[0].midpoint();
            b = b.iter().map(|s| s.translated(&-shift)).collect();
        }
        let t = 5.0;
        let frac = |x: &[ResampledStreamline], y: &[ResampledStreamline]| {
            x.iter().filter(|s| brute_neighbors(s, y, t) > 0).count() as f64 / x.len() as f64
        };
        let ba = 0.5 * (frac(&a, &b) + frac(&b, &a));
        let cov = frac(&a, &b);
        let ov = a.iter().map(|s| brute_neighbors(s, &b, t)).sum::<usize>() as f64 / a.len() as f64;
        prop_assert!((bundle_adjacency(&a, &b, t).unwrap() - ba).abs() <= 1e-12);
        prop_assert!((coverage(&a, &b, t).unwrap() - cov).abs() <= 1e-12);
        prop_assert!((overlap(&a, &b, t).unwrap() - ov).abs() <= 1e-12);

        let v = bundle_adjacency(&a, &b, t).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, bundle_adjacency(&b, &a, t).unwrap());
        prop_assert_eq!(coverage(&a, &a, t), Some(1.0));
        prop_assert!(overlap(&a, &a, t).unwrap() >= 1.0);
    }

    #[test]
    fn confusion_is_permutation_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = 200;
        let labeled: BTreeSet<usize> = (0..n).filter(|_| r.random_bool(0.2)).collect();
        let mut truth: BTreeSet<usize> = (0..n).filter(|_| r.random_bool(0.2)).collect();
        truth.insert(0);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let map = |s: &BTreeSet<usize>| s.iter().map(|&i| perm[i]).collect::<BTreeSet<_>>();
        let before = confusion_scores(&labeled, &truth, Some(n)).unwrap();
        let after = confusion_scores(&map(&labeled), &map(&truth), Some(n)).unwrap();
        prop_assert_eq!(before, after);
        for v in [before.sensitivity, before.jaccard, before.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
