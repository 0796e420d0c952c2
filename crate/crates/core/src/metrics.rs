//! Evaluation metrics: confusion scores, bundle adjacency, coverage,
//! overlap, streamlines per bundle and percentage of bundles extracted.
//!
//! Metrics with an empty denominator are `None` and are left out of means.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::distance::mdf_unchecked;
use crate::streamline::ResampledStreamline;

/// Default neighbor threshold on MDF (mm); neighbors satisfy `mdf < 5`.
pub const DEFAULT_NEIGHBOR_MM: f64 = 5.0;
/// Standard bundle-count cutoffs for extraction rates.
pub const DEFAULT_PBE_CUTOFFS: [usize; 2] = [1, 10];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub sensitivity: f64,
    /// `None` when nothing was labeled.
    pub precision: Option<f64>,
    pub jaccard: f64,
    pub f1: f64,
    /// Over the whole tractogram; `None` without a tractogram size.
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Scores of `labeled` against `truth`. `None` when `truth` is empty.
/// Specificity and accuracy need the tractogram size.
pub fn confusion_scores(
    labeled: &BTreeSet<usize>,
    truth: &BTreeSet<usize>,
    tractogram_size: Option<usize>,
) -> Option<BundleScore> {
    if truth.is_empty() {
        return None;
    }
    let tp = labeled.intersection(truth).count();
    let fp = labeled.len() - tp;
    let fn_ = truth.len() - tp;
    let sensitivity = tp as f64 / truth.len() as f64;
    let precision = (!labeled.is_empty()).then(|| tp as f64 / labeled.len() as f64);
    let jaccard = tp as f64 / (tp + fp + fn_) as f64;
    let p = precision.unwrap_or(0.0);
    let f1 = if p + sensitivity > 0.0 {
        2.0 * p * sensitivity / (p + sensitivity)
    } else {
        0.0
    };
    let (specificity, accuracy) = match tractogram_size {
        Some(n) => {
            let tn = n.saturating_sub(tp + fp + fn_);
            let spec = if tn + fp > 0 {
                tn as f64 / (tn + fp) as f64
            } else {
                1.0
            };
            (Some(spec), Some((tp + tn) as f64 / n.max(1) as f64))
        }
        None => (None, None),
    };
    Some(BundleScore {
        tp,
        fp,
        fn_,
        sensitivity,
        precision,
        jaccard,
        f1,
        specificity,
        accuracy,
    })
}

fn has_neighbor(s: &ResampledStreamline, set: &[ResampledStreamline], threshold: f64) -> bool {
    set.iter().any(|t| mdf_unchecked(s, t) < threshold)
}

fn fraction_with_neighbor(
    from: &[ResampledStreamline],
    to: &[ResampledStreamline],
    threshold: f64,
) -> f64 {
    from.iter()
        .filter(|s| has_neighbor(s, to, threshold))
        .count() as f64
        / from.len() as f64
}

/// Mean of the two directed fractions of streamlines with a neighbor in the
/// other bundle. `None` if either bundle is empty.
pub fn bundle_adjacency(
    a: &[ResampledStreamline],
    b: &[ResampledStreamline],
    threshold_mm: f64,
) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    Some(
        0.5 * (fraction_with_neighbor(a, b, threshold_mm)
            + fraction_with_neighbor(b, a, threshold_mm)),
    )
}

/// Fraction of extracted streamlines with a model neighbor.
pub fn coverage(
    extracted: &[ResampledStreamline],
    model: &[ResampledStreamline],
    threshold_mm: f64,
) -> Option<f64> {
    if extracted.is_empty() {
        return None;
    }
    Some(fraction_with_neighbor(extracted, model, threshold_mm))
}

/// Mean number of model neighbors per extracted streamline.
pub fn overlap(
    extracted: &[ResampledStreamline],
    model: &[ResampledStreamline],
    threshold_mm: f64,
) -> Option<f64> {
    if extracted.is_empty() {
        return None;
    }
    let total: usize = extracted
        .iter()
        .map(|s| {
            model
                .iter()
                .filter(|t| mdf_unchecked(s, t) < threshold_mm)
                .count()
        })
        .sum();
    Some(total as f64 / extracted.len() as f64)
}

/// Percentage of bundles with at least `min_streamlines` accepted.
pub fn pbe(counts: &[usize], min_streamlines: usize) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    100.0 * counts.iter().filter(|&&c| c >= min_streamlines).count() as f64 / counts.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpbSummary {
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub sd: f64,
    pub recognized: usize,
}

/// Streamlines per recognized bundle; bundles with zero streamlines are
/// excluded. `None` when no bundle is recognized.
pub fn spb(counts: &[usize]) -> Option<SpbSummary> {
    let mut v: Vec<f64> = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64)
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let median = if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    Some(SpbSummary {
        mean,
        median,
        sd,
        recognized: v.len(),
    })
}

/// Mean of each score over the bundles where it is defined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanScores {
    pub sensitivity: Option<f64>,
    pub precision: Option<f64>,
    pub jaccard: Option<f64>,
    pub f1: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn mean_scores(scores: &[Option<BundleScore>]) -> MeanScores {
    let defined: Vec<&BundleScore> = scores.iter().flatten().collect();
    MeanScores {
        sensitivity: mean_of(defined.iter().map(|s| Some(s.sensitivity))),
        precision: mean_of(defined.iter().map(|s| s.precision)),
        jaccard: mean_of(defined.iter().map(|s| Some(s.jaccard))),
        f1: mean_of(defined.iter().map(|s| Some(s.f1))),
        specificity: mean_of(defined.iter().map(|s| s.specificity)),
        accuracy: mean_of(defined.iter().map(|s| s.accuracy)),
    }
}
