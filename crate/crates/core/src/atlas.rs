//! Per-bundle feature statistics and threshold intervals.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::cluster::quickbundles;
use crate::distance::mmea_unchecked;
use crate::error::{Error, Result};
use crate::exec;
use crate::features::{Feature, FeatureVector, PerFeature};
use crate::stats::{
    empirical_quantile_sorted, select_best, Family, FittedDistribution, MIN_FIT_SAMPLES,
};
use crate::streamline::{
    angle_between_directions, angle_between_planes, direction_vector, fit_plane_normal,
    shape_angle, Bundle, PlaneFit, Point3, ResampledStreamline, Vector3,
};

pub const ATLAS_FORMAT_VERSION: &str = "1";
/// Half-width added around a zero-width interval.
pub const DEGENERATE_WIDENING: f64 = 1e-3;
/// Replaces an infinite upper domain bound so intervals stay finite in JSON.
const UNBOUNDED: f64 = f64::MAX;

/// Where a feature's threshold interval comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    /// Quantiles of the best-fitting distribution.
    #[default]
    Fitted,
    /// Quantiles of the raw samples.
    Empirical,
}

/// Closed acceptance interval of one feature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    pub source: ThresholdSource,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }
}

pub type FeatureThresholds = PerFeature<Interval>;

/// One candidate family's outcome for the fit report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateFit {
    pub family: Family,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fit: Option<FittedDistribution>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureFit {
    pub sample_count: usize,
    pub selected: Option<FittedDistribution>,
    pub candidates: Vec<CandidateFit>,
}

/// Everything about a bundle that is stored besides its streamlines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleStats {
    pub id: String,
    pub streamline_count: usize,
    pub barycenter: Point3,
    pub radius_mm: f64,
    /// Single cluster centroid of the whole bundle.
    pub reference: ResampledStreamline,
    pub reference_plane: PlaneFit,
    pub reference_direction: Vector3,
    pub thresholds: FeatureThresholds,
    pub fits: PerFeature<FeatureFit>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BundleModel {
    pub bundle: Bundle,
    pub stats: BundleStats,
}

impl BundleModel {
    pub fn id(&self) -> &str {
        self.bundle.id()
    }

    pub fn barycenter(&self) -> Point3 {
        self.stats.barycenter
    }

    pub fn radius_mm(&self) -> f64 {
        self.stats.radius_mm
    }

    pub fn thresholds(&self) -> &FeatureThresholds {
        &self.stats.thresholds
    }

    /// Features of `candidate` relative to this bundle.
    pub fn features(&self, candidate: &ResampledStreamline) -> FeatureVector {
        let mmea = self
            .bundle
            .streamlines()
            .iter()
            .map(|s| mmea_unchecked(candidate, s))
            .fold(f64::INFINITY, f64::min);
        feature_vector(candidate, &self.stats, mmea)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtlasModel {
    pub format_version: String,
    pub resample_k: usize,
    pub bundles: Vec<BundleModel>,
}

impl AtlasModel {
    pub fn bundle(&self, id: &str) -> Option<&BundleModel> {
        self.bundles.iter().find(|b| b.id() == id)
    }

    /// All atlas streamlines, bundle after bundle.
    pub fn streamlines(&self) -> Vec<ResampledStreamline> {
        self.bundles
            .iter()
            .flat_map(|b| b.bundle.streamlines().iter().cloned())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasOptions {
    pub decile_low: f64,
    pub decile_high: f64,
    pub threshold_source: ThresholdSource,
}

impl Default for AtlasOptions {
    fn default() -> Self {
        Self {
            decile_low: 0.1,
            decile_high: 0.9,
            threshold_source: ThresholdSource::Fitted,
        }
    }
}

/// Feature vector of `s` given the bundle reference quantities and an
/// already computed dissimilarity.
fn feature_vector(s: &ResampledStreamline, stats: &BundleStats, mmea: f64) -> FeatureVector {
    let plane = fit_plane_normal(s);
    let plane_angle = (!plane.degenerate && !stats.reference_plane.degenerate)
        .then(|| angle_between_planes(&plane.normal, &stats.reference_plane.normal));
    PerFeature {
        length: Some(s.arc_length()),
        dist_to_barycenter: Some((s.midpoint() - stats.barycenter).norm()),
        mmea: Some(mmea),
        plane_angle,
        direction_angle: angle_between_directions(&direction_vector(s), &stats.reference_direction)
            .ok(),
        shape_angle: shape_angle(s).ok(),
    }
}

/// Reference quantities of a bundle with empty thresholds and fits.
fn reference_stats(bundle: &Bundle) -> Result<BundleStats> {
    let barycenter = bundle.barycenter();
    let clusters = quickbundles(bundle.streamlines(), f64::INFINITY)?;
    let reference = clusters[0].centroid().clone();
    let unbounded = Interval {
        low: 0.0,
        high: UNBOUNDED,
        source: ThresholdSource::Empirical,
    };
    Ok(BundleStats {
        id: bundle.id().to_string(),
        streamline_count: bundle.len(),
        barycenter,
        radius_mm: bundle.radius(),
        reference_plane: fit_plane_normal(&reference),
        reference_direction: direction_vector(&reference),
        reference,
        thresholds: PerFeature::from_fn(|_| unbounded),
        fits: PerFeature::default(),
    })
}

/// Per-streamline feature vectors of a bundle's own streamlines. The
/// dissimilarity of each streamline is to its nearest other member.
fn bundle_feature_vectors(bundle: &Bundle, stats: &BundleStats) -> Vec<FeatureVector> {
    let set = bundle.streamlines();
    exec::map_range(set.len(), |i| {
        let mmea = set
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, s)| mmea_unchecked(&set[i], s))
            .fold(f64::INFINITY, f64::min);
        feature_vector(&set[i], stats, mmea)
    })
}

/// Feature samples of a bundle, dropping degenerate values.
pub fn compute_feature_samples(bundle: &Bundle) -> Result<PerFeature<Vec<f64>>> {
    if bundle.len() < 2 {
        return Err(Error::BundleTooSmall {
            id: bundle.id().to_string(),
            count: bundle.len(),
        });
    }
    let stats = reference_stats(bundle)?;
    Ok(collect_samples(&bundle_feature_vectors(bundle, &stats)))
}

fn collect_samples(vectors: &[FeatureVector]) -> PerFeature<Vec<f64>> {
    PerFeature::from_fn(|f| vectors.iter().filter_map(|v| v[f]).collect())
}

fn clamp_interval(f: Feature, low: f64, high: f64, source: ThresholdSource) -> Interval {
    let (dlo, dhi) = f.domain();
    let dhi = dhi.min(UNBOUNDED);
    let (mut low, mut high) = (low.clamp(dlo, dhi), high.clamp(dlo, dhi));
    if !(high > low) {
        let mid = 0.5 * (low + high);
        low = (mid - DEGENERATE_WIDENING).max(dlo);
        high = (mid + DEGENERATE_WIDENING).min(dhi);
    }
    Interval { low, high, source }
}

/// Fits the samples of one feature and derives its interval.
fn feature_threshold(f: Feature, samples: &[f64], opts: &AtlasOptions) -> (Interval, FeatureFit) {
    let mut report = FeatureFit {
        sample_count: samples.len(),
        ..Default::default()
    };
    if samples.is_empty() {
        let (lo, hi) = f.domain();
        let interval = Interval {
            low: lo,
            high: hi.min(UNBOUNDED),
            source: ThresholdSource::Empirical,
        };
        return (interval, report);
    }
    if samples.len() >= MIN_FIT_SAMPLES {
        if let Ok(sel) = select_best(samples) {
            report.selected = sel.best;
            report.candidates = sel
                .candidates
                .into_iter()
                .map(|(family, r)| match r {
                    Ok(fit) => CandidateFit {
                        family,
                        fit: Some(fit),
                        error: None,
                    },
                    Err(e) => CandidateFit {
                        family,
                        fit: None,
                        error: Some(e.to_string()),
                    },
                })
                .collect();
        }
    }
    let interval = match (opts.threshold_source, &report.selected) {
        (ThresholdSource::Fitted, Some(fit)) => clamp_interval(
            f,
            fit.quantile(opts.decile_low),
            fit.quantile(opts.decile_high),
            ThresholdSource::Fitted,
        ),
        _ => {
            let mut sorted = samples.to_vec();
            sorted.sort_by(f64::total_cmp);
            clamp_interval(
                f,
                empirical_quantile_sorted(&sorted, opts.decile_low),
                empirical_quantile_sorted(&sorted, opts.decile_high),
                ThresholdSource::Empirical,
            )
        }
    };
    (interval, report)
}

pub fn build_bundle_model(bundle: Bundle, opts: &AtlasOptions) -> Result<BundleModel> {
    if bundle.len() < 2 {
        return Err(Error::BundleTooSmall {
            id: bundle.id().to_string(),
            count: bundle.len(),
        });
    }
    if !(0.0 < opts.decile_low && opts.decile_low < opts.decile_high && opts.decile_high < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "deciles must satisfy 0 < low < high < 1, got {} and {}",
            opts.decile_low, opts.decile_high
        )));
    }
    let mut stats = reference_stats(&bundle)?;
    let samples = collect_samples(&bundle_feature_vectors(&bundle, &stats));
    for f in Feature::ALL {
        let (interval, fit) = feature_threshold(f, &samples[f], opts);
        stats.thresholds[f] = interval;
        stats.fits[f] = fit;
    }
    Ok(BundleModel { bundle, stats })
}

/// Builds every bundle model, in input order.
pub fn build_atlas(bundles: Vec<Bundle>, opts: &AtlasOptions) -> Result<AtlasModel> {
    if bundles.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut seen = HashSet::new();
    for b in &bundles {
        if !seen.insert(b.id()) {
            return Err(Error::DuplicateBundle(b.id().to_string()));
        }
    }
    let k = bundles[0].k();
    if let Some(b) = bundles.iter().find(|b| b.k() != k) {
        return Err(Error::PointCountMismatch(k, b.k()));
    }
    let models = exec::map(&bundles, |b| build_bundle_model(b.clone(), opts));
    Ok(AtlasModel {
        format_version: ATLAS_FORMAT_VERSION.to_string(),
        resample_k: k,
        bundles: models.into_iter().collect::<Result<_>>()?,
    })
}

/// Per-feature fraction of the bundle's own streamlines whose value lies in
/// the interval. Degenerate values are left out of both counts.
pub fn self_retention(model: &BundleModel) -> PerFeature<f64> {
    let vectors = bundle_feature_vectors(&model.bundle, &model.stats);
    PerFeature::from_fn(|f| {
        let values: Vec<f64> = vectors.iter().filter_map(|v| v[f]).collect();
        if values.is_empty() {
            return 1.0;
        }
        let inside = values
            .iter()
            .filter(|&&v| model.stats.thresholds[f].contains(v))
            .count();
        inside as f64 / values.len() as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streamline::{resample, Streamline};
    use approx::assert_abs_diff_eq;

    fn arc(r: f64, span_deg: f64, offset: [f64; 3]) -> ResampledStreamline {
        let n = 60;
        let pts = (0..n)
            .map(|i| {
                let t = (i as f64 / (n - 1) as f64) * span_deg.to_radians();
                Point3::new(r * t.cos() + offset[0], r * t.sin() + offset[1], offset[2])
            })
            .collect();
        resample(&Streamline::new(pts).unwrap(), 21).unwrap()
    }

    #[test]
    fn identical_streamlines() {
        let s = arc(10.0, 180.0, [0.0; 3]);
        let b = Bundle::new("b", vec![s.clone(), s]).unwrap();
        let samples = compute_feature_samples(&b).unwrap();
        assert_eq!(samples.mmea, vec![0.0, 0.0]);
        assert_eq!(samples.plane_angle, vec![0.0, 0.0]);
        assert_eq!(samples.direction_angle, vec![0.0, 0.0]);

        let m = build_bundle_model(b, &AtlasOptions::default()).unwrap();
        for (_, iv) in m.stats.thresholds.iter() {
            assert!(iv.low < iv.high);
            assert_eq!(iv.source, ThresholdSource::Empirical);
        }
        assert_eq!(m.stats.thresholds.mmea.low, 0.0);
        assert_eq!(m.stats.thresholds.mmea.high, DEGENERATE_WIDENING);
    }

    #[test]
    fn translated_copies_have_zero_dissimilarity() {
        let set: Vec<_> = (0..5)
            .map(|i| arc(10.0, 150.0, [i as f64 * 3.0, 0.0, 1.0]))
            .collect();
        let b = Bundle::new("b", set).unwrap();
        let samples = compute_feature_samples(&b).unwrap();
        assert!(samples.mmea.iter().all(|&v| v < 1e-5), "{:?}", samples.mmea);
    }

    #[test]
    fn small_bundles_rejected() {
        let b = Bundle::new("b", vec![arc(10.0, 180.0, [0.0; 3])]).unwrap();
        assert!(matches!(
            build_bundle_model(b, &AtlasOptions::default()),
            Err(Error::BundleTooSmall { count: 1, .. })
        ));
    }

    #[test]
    fn duplicate_and_empty_atlas() {
        let s = arc(10.0, 180.0, [0.0; 3]);
        let b = Bundle::new("x", vec![s.clone(), s]).unwrap();
        assert!(matches!(
            build_atlas(vec![b.clone(), b], &AtlasOptions::default()),
            Err(Error::DuplicateBundle(_))
        ));
        assert!(matches!(
            build_atlas(vec![], &AtlasOptions::default()),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn reference_of_a_bundle_is_its_mean() {
        let set: Vec<_> = (0..4)
            .map(|i| arc(10.0, 180.0, [0.0, 0.0, i as f64]))
            .collect();
        let b = Bundle::new("b", set).unwrap();
        let m = build_bundle_model(b, &AtlasOptions::default()).unwrap();
        assert_abs_diff_eq!(m.stats.reference.midpoint().z, 1.5, epsilon = 1e-9);
        let fv = m.features(&m.stats.reference);
        assert_abs_diff_eq!(fv.plane_angle.unwrap(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fv.direction_angle.unwrap(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn clamping_keeps_intervals_in_domain() {
        let iv = clamp_interval(Feature::PlaneAngle, -3.0, 95.0, ThresholdSource::Fitted);
        assert_eq!((iv.low, iv.high), (0.0, 90.0));
        let iv = clamp_interval(
            Feature::ShapeAngle,
            180.0,
            180.0,
            ThresholdSource::Empirical,
        );
        assert_eq!((iv.low, iv.high), (180.0 - DEGENERATE_WIDENING, 180.0));
    }
}
