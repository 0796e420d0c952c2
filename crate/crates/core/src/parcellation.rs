//! Per-bundle labeling of subject streamlines against an atlas.

use serde::{Deserialize, Serialize};

use crate::atlas::{AtlasModel, BundleModel};
use crate::cluster::{centroids, quickbundles};
use crate::error::{Error, Result};
use crate::exec;
use crate::features::{Feature, FeatureVector, PerFeature};
use crate::registration::{
    lsnr, sbr_rigid, LsnrOptions, RegistrationResult, RigidTransform, Tractogram,
};
use crate::streamline::ResampledStreamline;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelOptions {
    /// Features taking part in the decision; disabled ones always pass.
    pub features: PerFeature<bool>,
    /// Also reject candidates whose dissimilarity falls below the lower
    /// decile. Off by default: a candidate that coincides with an atlas
    /// streamline has dissimilarity 0, below any leave-one-out decile.
    pub dissimilarity_lower_bound: bool,
}

impl Default for LabelOptions {
    fn default() -> Self {
        Self {
            features: PerFeature::from_fn(|_| true),
            dissimilarity_lower_bound: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelDecision {
    pub streamline_index: usize,
    pub bundle_id: String,
    pub features: FeatureVector,
    pub passed: PerFeature<bool>,
    pub accepted: bool,
}

/// Features of `candidate` against `model`; the candidate must already be in
/// the bundle's locally registered frame.
pub fn compute_features(candidate: &ResampledStreamline, model: &BundleModel) -> FeatureVector {
    model.features(candidate)
}

/// Applies the closed threshold intervals of `model` to a feature vector.
///
/// A degenerate plane or direction passes (the angle is undefined, not
/// out of range); any other degenerate feature fails.
pub fn label_streamline(
    streamline_index: usize,
    features: &FeatureVector,
    model: &BundleModel,
    opts: &LabelOptions,
) -> LabelDecision {
    let thresholds = model.thresholds();
    let passed = PerFeature::from_fn(|f| {
        if !opts.features[f] {
            return true;
        }
        match features[f] {
            None => matches!(f, Feature::PlaneAngle | Feature::DirectionAngle),
            Some(v) if f == Feature::Mmea && !opts.dissimilarity_lower_bound => {
                v <= thresholds[f].high
            }
            Some(v) => thresholds[f].contains(v),
        }
    });
    let accepted = passed.iter().all(|(_, &p)| p);
    LabelDecision {
        streamline_index,
        bundle_id: model.id().to_string(),
        features: features.clone(),
        passed,
        accepted,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParcellationOptions {
    /// Align the subject to the atlas as a whole before per-bundle work.
    pub global_registration: bool,
    /// Clustering threshold for the whole-tractogram centroids.
    pub global_qb_threshold_mm: f64,
    pub lsnr: LsnrOptions,
    pub label: LabelOptions,
    /// Keep each streamline only in the bundle where its dissimilarity is
    /// smallest.
    pub winner_take_all: bool,
    pub grid_cell_mm: f64,
}

impl Default for ParcellationOptions {
    fn default() -> Self {
        Self {
            global_registration: true,
            global_qb_threshold_mm: 10.0,
            lsnr: LsnrOptions::default(),
            label: LabelOptions::default(),
            winner_take_all: false,
            grid_cell_mm: 20.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleStatus {
    Recognized,
    Absent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BundleResult {
    pub bundle_id: String,
    pub status: BundleStatus,
    pub neighborhood_size: usize,
    pub atlas_neighborhood_size: usize,
    /// Subject indices, ascending.
    pub accepted: Vec<usize>,
    /// Dissimilarity of each accepted streamline, aligned with `accepted`.
    pub accepted_mmea: Vec<f64>,
    /// Accepted streamlines in atlas space, aligned with `accepted`.
    pub accepted_streamlines: Vec<ResampledStreamline>,
    /// Number of neighborhood streamlines failing each feature.
    pub rejections: PerFeature<usize>,
    pub registration: Option<RegistrationResult>,
}

impl BundleResult {
    fn finish_status(&mut self) {
        self.status = if self.accepted.is_empty() {
            BundleStatus::Absent
        } else {
            BundleStatus::Recognized
        };
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParcellationResult {
    pub subject_count: usize,
    pub global_registration: Option<RegistrationResult>,
    pub bundles: Vec<BundleResult>,
}

impl ParcellationResult {
    pub fn global_transform(&self) -> RigidTransform {
        self.global_registration
            .as_ref()
            .map(|r| r.transform)
            .unwrap_or_default()
    }

    pub fn accepted_counts(&self) -> Vec<usize> {
        self.bundles.iter().map(|b| b.accepted.len()).collect()
    }
}

/// Registers the bundle neighborhood locally and labels every streamline in
/// it. `subject` must already be globally aligned.
pub fn parcellate_bundle(
    model: &BundleModel,
    subject: &Tractogram,
    atlas: &Tractogram,
    opts: &ParcellationOptions,
) -> Result<BundleResult> {
    let outcome = lsnr(&model.bundle, atlas, subject, &opts.lsnr)?;
    let mut result = BundleResult {
        bundle_id: model.id().to_string(),
        status: BundleStatus::Absent,
        neighborhood_size: outcome.neighborhood.streamline_indices.len(),
        atlas_neighborhood_size: outcome.atlas_neighborhood_size,
        accepted: Vec::new(),
        accepted_mmea: Vec::new(),
        accepted_streamlines: Vec::new(),
        rejections: PerFeature::default(),
        registration: outcome.registration.clone(),
    };
    let Some(reg) = outcome.registration else {
        return Ok(result);
    };
    for &i in &outcome.neighborhood.streamline_indices {
        let moved = reg.transform.apply(&subject.streamlines()[i]);
        let fv = compute_features(&moved, model);
        let decision = label_streamline(i, &fv, model, &opts.label);
        for (f, &p) in decision.passed.iter() {
            if !p {
                result.rejections[f] += 1;
            }
        }
        if decision.accepted {
            result.accepted.push(i);
            result.accepted_mmea.push(fv.mmea.unwrap_or(f64::INFINITY));
            result.accepted_streamlines.push(moved);
        }
    }
    result.finish_status();
    Ok(result)
}

/// Rigid alignment of the whole subject onto the whole atlas, on cluster
/// centroids of both.
pub fn global_alignment(
    atlas: &[ResampledStreamline],
    subject: &[ResampledStreamline],
    opts: &ParcellationOptions,
) -> Result<RegistrationResult> {
    let fixed = centroids(&quickbundles(atlas, opts.global_qb_threshold_mm)?);
    let moving = centroids(&quickbundles(subject, opts.global_qb_threshold_mm)?);
    sbr_rigid(&moving, &fixed, &opts.lsnr.sbr)
}

/// Full pipeline: global alignment, then every bundle independently.
/// Bundle results are in atlas order regardless of scheduling.
pub fn parcellate(
    atlas: &AtlasModel,
    subject: &[ResampledStreamline],
    opts: &ParcellationOptions,
) -> Result<ParcellationResult> {
    if subject.is_empty() {
        return Err(Error::EmptySubject);
    }
    if let Some(s) = subject.iter().find(|s| s.k() != atlas.resample_k) {
        return Err(Error::PointCountMismatch(atlas.resample_k, s.k()));
    }
    if !(opts.grid_cell_mm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid cell size must be positive, got {}",
            opts.grid_cell_mm
        )));
    }
    let atlas_streamlines = atlas.streamlines();
    let global = if opts.global_registration {
        Some(global_alignment(&atlas_streamlines, subject, opts)?)
    } else {
        None
    };
    let aligned = match &global {
        Some(g) => g.transform.apply_all(subject),
        None => subject.to_vec(),
    };
    let subject_t = Tractogram::new(aligned, opts.grid_cell_mm);
    let atlas_t = Tractogram::new(atlas_streamlines, opts.grid_cell_mm);

    let mut bundles = exec::map(&atlas.bundles, |m| {
        parcellate_bundle(m, &subject_t, &atlas_t, opts)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    if opts.winner_take_all {
        winner_take_all(&mut bundles, subject.len());
    }
    Ok(ParcellationResult {
        subject_count: subject.len(),
        global_registration: global,
        bundles,
    })
}

/// Keeps each streamline only under the bundle where its dissimilarity is
/// smallest; ties go to the earlier bundle.
pub fn winner_take_all(bundles: &mut [BundleResult], subject_count: usize) {
    let mut owner: Vec<Option<(usize, f64)>> = vec![None; subject_count];
    for (b, r) in bundles.iter().enumerate() {
        for (&i, &d) in r.accepted.iter().zip(&r.accepted_mmea) {
            if owner[i].is_none_or(|(_, best)| d < best) {
                owner[i] = Some((b, d));
            }
        }
    }
    for (b, r) in bundles.iter_mut().enumerate() {
        let keep: Vec<bool> = r
            .accepted
            .iter()
            .map(|&i| owner[i].map(|o| o.0) == Some(b))
            .collect();
        let mut k = keep.iter();
        r.accepted.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        r.accepted_mmea.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        r.accepted_streamlines.retain(|_| *k.next().unwrap());
        r.finish_status();
    }
}
