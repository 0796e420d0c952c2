//! Rigid streamline-based registration (SBR) and local streamline
//! neighborhood registration (LSNR).

mod grid;
mod rigid;

pub use grid::{Containment, StreamlineGrid, Tractogram};
pub use rigid::{euler_from_matrix, RigidTransform};

use serde::{Deserialize, Serialize};

use crate::cluster::{centroids, quickbundles};
use crate::distance::bundle_min_distance_unchecked;
use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::streamline::{bundle_barycenter, Bundle, Point3, ResampledStreamline};

/// One pass of simplex descent with a given initial simplex scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbrStage {
    pub rotation_step_deg: f64,
    pub translation_step_mm: f64,
    pub max_evals: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbrOptions {
    pub stages: Vec<SbrStage>,
    /// Convergence once the simplex cost spread falls below this (mm).
    pub tolerance_mm: f64,
}

impl Default for SbrOptions {
    fn default() -> Self {
        Self {
            stages: vec![
                SbrStage {
                    rotation_step_deg: 10.0,
                    translation_step_mm: 10.0,
                    max_evals: 500,
                },
                SbrStage {
                    rotation_step_deg: 1.0,
                    translation_step_mm: 1.0,
                    max_evals: 500,
                },
            ],
            tolerance_mm: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    pub transform: RigidTransform,
    pub initial_cost_mm: f64,
    pub final_cost_mm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Rigidly aligns `moving` onto `fixed` by minimising the symmetric
/// mean-of-minimum MDF. Rotation pivots about the barycenter of `moving`.
///
/// Never fails on non-empty input: if no candidate beats the starting cost
/// the identity is returned with `converged = false`.
pub fn sbr_rigid(
    moving: &[ResampledStreamline],
    fixed: &[ResampledStreamline],
    opts: &SbrOptions,
) -> Result<RegistrationResult> {
    if moving.is_empty() || fixed.is_empty() {
        return Err(Error::EmptySet);
    }
    let k = moving[0].k();
    if let Some(s) = moving.iter().chain(fixed).find(|s| s.k() != k) {
        return Err(Error::PointCountMismatch(k, s.k()));
    }
    let pivot = bundle_barycenter(moving);
    let cost = |x: &[f64]| {
        let t = RigidTransform::from_params(x, pivot);
        bundle_min_distance_unchecked(&t.apply_all(moving), fixed)
    };

    let initial = bundle_min_distance_unchecked(moving, fixed);
    let identity = RigidTransform::new([0.0; 3], [0.0; 3], pivot);
    if initial <= 1e-12 {
        return Ok(RegistrationResult {
            transform: identity,
            initial_cost_mm: initial,
            final_cost_mm: initial,
            iterations: 0,
            evaluations: 1,
            converged: true,
        });
    }

    let mut x = vec![0.0; 6];
    let mut best = initial;
    let mut iterations = 0;
    let mut evaluations = 1;
    let mut converged = false;
    for stage in &opts.stages {
        let t = stage.translation_step_mm;
        let r = stage.rotation_step_deg;
        let m = nelder_mead(
            cost,
            &x,
            &[t, t, t, r, r, r],
            &NelderMeadOptions {
                max_evals: stage.max_evals,
                ftol_abs: opts.tolerance_mm,
                ftol_rel: 0.0,
            },
        );
        iterations += m.iterations;
        evaluations += m.evals;
        converged = m.converged;
        if m.f < best {
            best = m.f;
            x = m.x;
        }
    }

    if best < initial {
        Ok(RegistrationResult {
            transform: RigidTransform::from_params(&x, pivot),
            initial_cost_mm: initial,
            final_cost_mm: best,
            iterations,
            evaluations,
            converged,
        })
    } else {
        Ok(RegistrationResult {
            transform: identity,
            initial_cost_mm: initial,
            final_cost_mm: initial,
            iterations,
            evaluations,
            converged: false,
        })
    }
}

/// Streamlines of a tractogram that fall inside a bundle-centred sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighborhood {
    pub bundle_id: String,
    pub streamline_indices: Vec<usize>,
    pub center: Point3,
    pub radius_mm: f64,
}

pub fn extract_neighborhood(
    tractogram: &Tractogram,
    bundle_id: &str,
    center: Point3,
    radius_mm: f64,
    rule: Containment,
) -> Neighborhood {
    Neighborhood {
        bundle_id: bundle_id.to_string(),
        streamline_indices: tractogram.query_sphere(&center, radius_mm, rule),
        center,
        radius_mm,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsnrOptions {
    /// Neighborhood radius as a multiple of the bundle radius.
    pub neighborhood_factor: f64,
    pub containment: Containment,
    /// QuickBundles threshold used to reduce both neighborhoods.
    pub qb_threshold_mm: f64,
    pub sbr: SbrOptions,
}

impl Default for LsnrOptions {
    fn default() -> Self {
        Self {
            neighborhood_factor: 6.0,
            containment: Containment::All,
            qb_threshold_mm: 6.0,
            sbr: SbrOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsnrOutcome {
    /// Subject neighborhood, in the globally aligned subject space.
    pub neighborhood: Neighborhood,
    pub atlas_neighborhood_size: usize,
    /// `None` when the subject neighborhood is empty (bundle absent).
    pub registration: Option<RegistrationResult>,
}

impl LsnrOutcome {
    pub fn is_absent(&self) -> bool {
        self.registration.is_none()
    }
}

/// Registers the centroids of the subject neighborhood of `bundle` onto the
/// centroids of the matching atlas neighborhood.
pub fn lsnr(
    bundle: &Bundle,
    atlas: &Tractogram,
    subject: &Tractogram,
    opts: &LsnrOptions,
) -> Result<LsnrOutcome> {
    let center = bundle.barycenter();
    let radius = opts.neighborhood_factor * bundle.radius();
    let atlas_hood = atlas.query_sphere(&center, radius, opts.containment);
    let neighborhood = extract_neighborhood(subject, bundle.id(), center, radius, opts.containment);
    if neighborhood.streamline_indices.is_empty() {
        return Ok(LsnrOutcome {
            neighborhood,
            atlas_neighborhood_size: atlas_hood.len(),
            registration: None,
        });
    }

    // The bundle itself always lies within its own sphere, but an atlas
    // tractogram that does not contain it would leave nothing to align to.
    let atlas_set: Vec<&ResampledStreamline> = if atlas_hood.is_empty() {
        bundle.streamlines().iter().collect()
    } else {
        atlas_hood
            .iter()
            .map(|&i| &atlas.streamlines()[i])
            .collect()
    };
    let static_centroids = centroids(&quickbundles(atlas_set, opts.qb_threshold_mm)?);
    let moving = neighborhood
        .streamline_indices
        .iter()
        .map(|&i| &subject.streamlines()[i]);
    let moving_centroids = centroids(&quickbundles(moving, opts.qb_threshold_mm)?);
    let registration = sbr_rigid(&moving_centroids, &static_centroids, &opts.sbr)?;
    Ok(LsnrOutcome {
        neighborhood,
        atlas_neighborhood_size: atlas_hood.len(),
        registration: Some(registration),
    })
}
