//! Scores a parcellation against ground-truth labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::io::GroundTruth;
use crate::metrics::{
    bundle_adjacency, confusion_scores, coverage, mean_scores, overlap, pbe, spb, BundleScore,
    MeanScores, SpbSummary,
};
use crate::streamline::ResampledStreamline;

/// One bundle's output as seen by the evaluator.
#[derive(Clone, Copy, Debug)]
pub struct EvaluationBundle<'a> {
    pub bundle_id: &'a str,
    /// Accepted subject indices.
    pub accepted: &'a [usize],
    /// Accepted streamlines in atlas space.
    pub extracted: &'a [ResampledStreamline],
    /// Atlas model streamlines; neighbor metrics are skipped without them.
    pub model: Option<&'a [ResampledStreamline]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleEvaluation {
    pub bundle_id: String,
    pub accepted_count: usize,
    pub truth_count: usize,
    /// `None` when the bundle has no ground-truth members.
    pub score: Option<BundleScore>,
    pub bundle_adjacency: Option<f64>,
    pub coverage: Option<f64>,
    pub overlap: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PbeEntry {
    pub min_streamlines: usize,
    pub percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub tractogram_size: usize,
    pub neighbor_threshold_mm: f64,
    pub bundles: Vec<BundleEvaluation>,
    pub mean: MeanScores,
    pub mean_bundle_adjacency: Option<f64>,
    pub mean_coverage: Option<f64>,
    pub mean_overlap: Option<f64>,
    pub spb: Option<SpbSummary>,
    pub pbe: Vec<PbeEntry>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Evaluates `bundles` against `truth`. `subject_count` is the size of the
/// parcellated tractogram and must match the label count.
pub fn evaluate(
    bundles: &[EvaluationBundle],
    truth: &GroundTruth,
    subject_count: usize,
    neighbor_threshold_mm: f64,
    pbe_cutoffs: &[usize],
) -> Result<EvaluationReport> {
    if subject_count != truth.count {
        return Err(Error::InvalidParameter(format!(
            "tractogram has {subject_count} streamlines but ground truth labels {}",
            truth.count
        )));
    }
    for b in bundles {
        if let Some(&i) = b.accepted.iter().find(|&&i| i >= subject_count) {
            return Err(Error::InvalidParameter(format!(
                "bundle '{}' accepts index {i} outside a tractogram of {subject_count}",
                b.bundle_id
            )));
        }
    }
    let rows = exec::map(bundles, |b| {
        let members = truth.members(b.bundle_id);
        let labeled = b.accepted.iter().copied().collect();
        let neighbor =
            |f: fn(&[ResampledStreamline], &[ResampledStreamline], f64) -> Option<f64>| {
                b.model
                    .and_then(|m| f(b.extracted, m, neighbor_threshold_mm))
            };
        BundleEvaluation {
            bundle_id: b.bundle_id.to_string(),
            accepted_count: b.accepted.len(),
            truth_count: members.len(),
            score: confusion_scores(&labeled, &members, Some(subject_count)),
            bundle_adjacency: neighbor(bundle_adjacency),
            coverage: neighbor(coverage),
            overlap: neighbor(overlap),
        }
    });
    let counts: Vec<usize> = rows.iter().map(|r| r.accepted_count).collect();
    let scores: Vec<Option<BundleScore>> = rows.iter().map(|r| r.score).collect();
    Ok(EvaluationReport {
        tractogram_size: subject_count,
        neighbor_threshold_mm,
        mean: mean_scores(&scores),
        mean_bundle_adjacency: mean(rows.iter().map(|r| r.bundle_adjacency)),
        mean_coverage: mean(rows.iter().map(|r| r.coverage)),
        mean_overlap: mean(rows.iter().map(|r| r.overlap)),
        spb: spb(&counts),
        pbe: pbe_cutoffs
            .iter()
            .map(|&c| PbeEntry {
                min_streamlines: c,
                percent: pbe(&counts, c),
            })
            .collect(),
        bundles: rows,
    })
}
