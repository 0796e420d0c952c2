mod common;

use common::{random_rigid, rng};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Beta, Distribution as _, Gamma, LogNormal, Normal};
use swmparc::atlas::{build_bundle_model, compute_feature_samples, AtlasOptions};
use swmparc::features::Feature;
use swmparc::stats::{fit_family, select_best, Distribution, Family};
use swmparc::streamline::{resample, Bundle};
use swmparc::synth::{generate_bundle, ArcSpec};

fn family_strategy() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (-50.0..50.0f64, 0.01..20.0f64).prop_map(|(mu, sigma)| Distribution::Normal { mu, sigma }),
        (-3.0..5.0f64, 0.05..2.0f64).prop_map(|(mu, sigma)| Distribution::LogNormal { mu, sigma }),
        (0.2..50.0f64, 0.01..20.0f64)
            .prop_map(|(shape, scale)| Distribution::Gamma { shape, scale }),
        (0.3..30.0f64, 0.3..30.0f64, -10.0..10.0f64, 0.5..50.0f64).prop_map(
            |(alpha, beta, lo, w)| Distribution::Beta {
                alpha,
                beta,
                lo,
                hi: lo + w
            }
        ),
        (0.5..20.0f64, 0.2..10.0f64, 0.1..50.0f64).prop_map(|(c, k, lambda)| Distribution::Burr {
            c,
            k,
            lambda
        }),
    ]
}

fn arc_bundle(seed: u64) -> Bundle {
    let spec = ArcSpec {
        id: "arc".into(),
        center: [5.0, 6.0, 7.0],
        radius_mm: 18.0,
        span_deg: 170.0,
        orientation_deg: [20.0, 75.0],
        jitter_mm: 0.5,
        radius_sd_mm: 2.0,
        span_sd_deg: 20.0,
        tilt_sd_deg: 20.0,
        count: 40,
        points: 40,
        seed: None,
    };
    let raw = generate_bundle(&spec, seed).unwrap();
    Bundle::from_raw("arc", &raw, 21).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quantile_is_monotone_on_percentile_grid(d in family_strategy()) {
        let qs: Vec<f64> = (1..100).map(|i| d.quantile(i as f64 / 100.0)).collect();
        for w in qs.windows(2) {
            prop_assert!(w[0] <= w[1], "{:?}: {} > {}", d, w[0], w[1]);
        }
        prop_assert!(d.quantile(0.1) < d.quantile(0.9));
    }

    #[test]
    fn burr_closed_form_matches_bisection(c in 0.5..20.0f64, k in 0.2..10.0f64, lambda in 0.1..50.0f64, p in 0.01..0.99f64) {
        let d = Distribution::Burr { c, k, lambda };
        let closed = d.quantile(p);
        let bisect = d.quantile_by_bisection(p);
        prop_assert!((closed - bisect).abs() <= 1e-6 * closed.abs().max(1.0), "{} vs {}", closed, bisect);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fits_have_ordered_deciles_and_selection_is_minimal(seed in any::<u64>(), which in 0usize..4) {
        let mut r = rng(seed);
        let n = r.random_range(30..400);
        let xs: Vec<f64> = (0..n)
            .map(|_| match which {
                0 => Normal::new(10.0, 3.0).unwrap().sample(&mut r),
                1 => Gamma::new(2.0, 3.0).unwrap().sample(&mut r),
                2 => LogNormal::new(1.0, 0.4).unwrap().sample(&mut r),
                _ => 40.0 * Beta::new(2.0, 5.0).unwrap().sample(&mut r),
            })
            .collect();
        for family in Family::ALL {
            if let Ok(fit) = fit_family(&xs, family) {
                prop_assert!(fit.quantile(0.1) < fit.quantile(0.9), "{:?}", fit);
            }
        }
        let sel = select_best(&xs).unwrap();
        let best = sel.best.as_ref().expect("a family fits");
        let best_sse = best.sse.unwrap();
        for c in sel.candidates.iter().filter_map(|(_, r)| r.as_ref().ok()) {
            if let Some(sse) = c.sse {
                prop_assert!(best_sse <= sse);
            }
        }
    }
}

fn max_relative_change(bundle: &Bundle, t: &swmparc::registration::RigidTransform) -> f64 {
    let base = compute_feature_samples(bundle).unwrap();
    let moved = Bundle::new("arc", t.apply_all(bundle.streamlines())).unwrap();
    let samples = compute_feature_samples(&moved).unwrap();
    let mut worst = 0.0f64;
    for f in Feature::ALL {
        assert_eq!(base[f].len(), samples[f].len());
        for (a, b) in base[f].iter().zip(&samples[f]) {
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    worst
}

#[test]
fn feature_samples_are_invariant_under_exact_rigid_maps() {
    // Quarter turns about the origin permute coordinates and flip signs, so
    // the f32 rounding of bundle coordinates is unaffected.
    let bundle = arc_bundle(11);
    for angles in [[90.0, 0.0, 0.0], [0.0, 0.0, 180.0], [90.0, 0.0, -90.0]] {
        let t = swmparc::registration::RigidTransform::new(
            angles,
            [0.0; 3],
            swmparc::streamline::Point3::origin(),
        );
        let worst = max_relative_change(&bundle, &t);
        assert!(worst <= 1e-6, "{angles:?}: {worst}");
    }
}

#[test]
fn feature_samples_are_rigid_invariant_up_to_f32_rounding() {
    // Arbitrary transforms move coordinates off the f32 grid. Rounding them
    // back moves points by half an f32 ulp (~2e-6 mm at these magnitudes),
    // which shows up as relative feature changes of a few 1e-6.
    let bundle = arc_bundle(11);
    let mut r = rng(12);
    for _ in 0..10 {
        let worst = max_relative_change(&bundle, &random_rigid(&mut r));
        assert!(worst <= 5e-5, "{worst}");
    }
}

#[test]
fn model_building_is_deterministic() {
    let a = build_bundle_model(arc_bundle(3), &AtlasOptions::default()).unwrap();
    let b = build_bundle_model(arc_bundle(3), &AtlasOptions::default()).unwrap();
    assert_eq!(
        serde_json::to_vec(&a.stats).unwrap(),
        serde_json::to_vec(&b.stats).unwrap()
    );
}

#[test]
fn resampled_reference_has_k_points() {
    let m = build_bundle_model(arc_bundle(5), &AtlasOptions::default()).unwrap();
    assert_eq!(m.stats.reference.k(), 21);
    let _ = resample(&m.stats.reference.to_streamline(), 21).unwrap();
}
