//! Synthetic U-fiber scenes: arc bundles, distractors and rigid
//! perturbations with known ground truth.
//!
//! Every streamline of a bundle draws one latent value `u ~ N(0, 1)` that
//! moves its radius, angular span and tilt about the chord together, then
//! receives independent per-point noise. Coordinates are rounded to single
//! precision so scenes survive a trip through track files unchanged.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registration::RigidTransform;
use crate::streamline::{bundle_barycenter, resample, Point3, Streamline, Vector3, DEFAULT_K};

/// Truth label of subject streamlines that belong to no bundle.
pub const OUTLIER_LABEL: &str = "outlier";

fn default_points() -> usize {
    40
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub id: String,
    /// Center of the circle the arc lies on.
    pub center: [f64; 3],
    pub radius_mm: f64,
    pub span_deg: f64,
    /// Plane orientation: elevation about x, then azimuth about z.
    pub orientation_deg: [f64; 2],
    /// Independent per-point noise.
    pub jitter_mm: f64,
    /// Standard deviations of the latent shape mode.
    #[serde(default)]
    pub radius_sd_mm: f64,
    #[serde(default)]
    pub span_sd_deg: f64,
    #[serde(default)]
    pub tilt_sd_deg: f64,
    pub count: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Derived from the scene seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ArcSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(format!("arc '{}': {m}", self.id)));
        if !(self.radius_mm > 0.0) || !self.radius_mm.is_finite() {
            return bad(format!("radius must be positive, got {}", self.radius_mm));
        }
        if !(self.span_deg > 10.0 && self.span_deg < 350.0) {
            return bad(format!(
                "span must lie in (10, 350) degrees, got {}",
                self.span_deg
            ));
        }
        if self.count == 0 {
            return bad("count must be at least 1".into());
        }
        if self.points < 2 {
            return bad(format!(
                "need at least 2 points per streamline, got {}",
                self.points
            ));
        }
        let sds = [
            self.jitter_mm,
            self.radius_sd_mm,
            self.span_sd_deg,
            self.tilt_sd_deg,
        ];
        if sds.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("noise parameters must be finite and non-negative".into());
        }
        if self
            .center
            .iter()
            .chain(&self.orientation_deg)
            .any(|v| !v.is_finite())
        {
            return bad("center and orientation must be finite".into());
        }
        Ok(())
    }
}

fn snap(p: Point3) -> Point3 {
    p.map(|c| c as f32 as f64)
}

/// Rotation taking the arc's local xy plane to its orientation.
fn plane_rotation(orientation_deg: [f64; 2]) -> nalgebra::Rotation3<f64> {
    let [elev, azim] = orientation_deg.map(f64::to_radians);
    nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), azim)
        * nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), elev)
}

/// Streamlines of one arc bundle, deterministic under `seed`.
pub fn generate_bundle(spec: &ArcSpec, seed: u64) -> Result<Vec<Streamline>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or(seed));
    let rot = plane_rotation(spec.orientation_deg);
    let center = Point3::from(spec.center);
    (0..spec.count)
        .map(|_| {
            let u: f64 = rng.sample(StandardNormal);
            let r = (spec.radius_mm + spec.radius_sd_mm * u).max(0.1 * spec.radius_mm);
            let half = 0.5
                * (spec.span_deg + spec.span_sd_deg * u)
                    .clamp(5.0, 355.0)
                    .to_radians();
            // Tilt about the chord, which runs along local x at height r cos(half).
            let tilt = nalgebra::Rotation3::from_axis_angle(
                &Vector3::x_axis(),
                (spec.tilt_sd_deg * u).to_radians(),
            );
            let chord = Vector3::new(0.0, r * half.cos(), 0.0);
            let n = spec.points;
            let mut pts: Vec<Point3> = (0..n)
                .map(|i| {
                    let t = -half + 2.0 * half * i as f64 / (n - 1) as f64;
                    let local = Vector3::new(r * t.sin(), r * t.cos(), 0.0);
                    let tilted = tilt * (local - chord) + chord;
                    let noise = Vector3::from_fn(|_, _| {
                        spec.jitter_mm * rng.sample::<f64, _>(StandardNormal)
                    });
                    snap(center + rot * tilted + noise)
                })
                .collect();
            if rng.random_bool(0.5) {
                pts.reverse();
            }
            Streamline::new(pts)
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistractorSpec {
    pub count: usize,
    pub extent_min: [f64; 3],
    pub extent_max: [f64; 3],
    /// Step between consecutive points (mm).
    pub step_mm: f64,
    pub points: usize,
    /// Largest direction change per step.
    pub max_turn_deg: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RigidPerturbation {
    pub rotation_deg: [f64; 3],
    pub translation_mm: [f64; 3],
}

/// Bounds of random per-bundle rigid perturbations about each bundle's
/// barycenter: a random axis with angle up to `max_rotation_deg`, and a
/// random direction with length up to `max_translation_mm`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LocalPerturbationSpec {
    pub max_rotation_deg: f64,
    pub max_translation_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub bundles: Vec<ArcSpec>,
    #[serde(default)]
    pub distractors: DistractorSpec,
    /// Applied to the whole subject, pivoting about the atlas barycenter.
    #[serde(default)]
    pub global_perturbation: RigidPerturbation,
    #[serde(default)]
    pub local_perturbation: LocalPerturbationSpec,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    /// Atlas bundles as (id, raw streamlines).
    pub atlas_bundles: Vec<(String, Vec<Streamline>)>,
    pub subject: Vec<Streamline>,
    /// Source bundle of each subject streamline; `None` for distractors.
    pub truth: Vec<Option<String>>,
    /// Local perturbation applied to each bundle's subject copies.
    pub local_transforms: Vec<RigidTransform>,
    pub global_transform: RigidTransform,
}

fn derived_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = master ^ (index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3 {
    let v: [f64; 3] = UnitSphere.sample(rng);
    Vector3::from(v)
}

fn random_rigid(
    rng: &mut ChaCha8Rng,
    bounds: &LocalPerturbationSpec,
    pivot: Point3,
) -> RigidTransform {
    let axis = nalgebra::Unit::new_normalize(random_unit(rng));
    let angle = rng.random_range(0.0..=1.0) * bounds.max_rotation_deg;
    let r = nalgebra::Rotation3::from_axis_angle(&axis, angle.to_radians());
    let t = random_unit(rng) * (rng.random_range(0.0..=1.0) * bounds.max_translation_mm);
    RigidTransform::new(
        crate::registration::euler_from_matrix(r.matrix()),
        t.into(),
        pivot,
    )
}

fn distractor(rng: &mut ChaCha8Rng, spec: &DistractorSpec) -> Result<Streamline> {
    let lo = Vector3::from(spec.extent_min);
    let hi = Vector3::from(spec.extent_max);
    let mut p = Point3::from(lo + (hi - lo).map(|w| w * rng.random_range(0.0..=1.0)));
    let mut dir = random_unit(rng);
    let mut pts = vec![snap(p)];
    for _ in 1..spec.points.max(2) {
        let axis = nalgebra::Unit::new_normalize(dir.cross(&random_unit(rng)));
        let turn = rng.random_range(0.0..=1.0) * spec.max_turn_deg;
        dir = nalgebra::Rotation3::from_axis_angle(&axis, turn.to_radians()) * dir;
        p += dir * spec.step_mm;
        pts.push(snap(p));
    }
    Streamline::new(pts)
}

fn apply_raw(t: &RigidTransform, s: &Streamline) -> Result<Streamline> {
    Streamline::new(s.points().iter().map(|p| snap(t.apply_point(p))).collect())
}

/// Expands a scene spec. A pure function of `spec`.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    let mut ids = HashSet::new();
    for b in &spec.bundles {
        if b.id == OUTLIER_LABEL || !ids.insert(b.id.as_str()) {
            return Err(Error::DuplicateBundle(b.id.clone()));
        }
    }
    let d = &spec.distractors;
    if d.count > 0 && !(d.step_mm > 0.0 && d.max_turn_deg >= 0.0) {
        return Err(Error::InvalidParameter(
            "distractors need a positive step and a non-negative turn".into(),
        ));
    }

    let atlas_bundles = spec
        .bundles
        .iter()
        .enumerate()
        .map(|(i, b)| {
            Ok((
                b.id.clone(),
                generate_bundle(b, derived_seed(spec.seed, i as u64))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(spec.seed, u64::MAX));
    let resampled: Vec<Vec<_>> = atlas_bundles
        .iter()
        .map(|(_, set)| {
            set.iter()
                .map(|s| resample(s, DEFAULT_K))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let local_transforms: Vec<RigidTransform> = resampled
        .iter()
        .map(|set| random_rigid(&mut rng, &spec.local_perturbation, bundle_barycenter(set)))
        .collect();
    let all: Vec<_> = resampled.into_iter().flatten().collect();
    let pivot = if all.is_empty() {
        Point3::origin()
    } else {
        bundle_barycenter(&all)
    };
    let g = &spec.global_perturbation;
    let global_transform = RigidTransform::new(g.rotation_deg, g.translation_mm, pivot);

    let mut subject = Vec::new();
    let mut truth = Vec::new();
    for ((id, set), local) in atlas_bundles.iter().zip(&local_transforms) {
        let t = global_transform.compose(local);
        for s in set {
            subject.push(apply_raw(&t, s)?);
            truth.push(Some(id.clone()));
        }
    }
    for _ in 0..d.count {
        subject.push(apply_raw(&global_transform, &distractor(&mut rng, d)?)?);
        truth.push(None);
    }
    Ok(Scene {
        atlas_bundles,
        subject,
        truth,
        local_transforms,
        global_transform,
    })
}

/// Layout of a benchmark scene: arc bundles on a cubic grid, each with a
/// random radius, span and plane orientation, plus random distractors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArcGrid {
    pub bundles: usize,
    pub spacing_mm: f64,
    pub radius_range_mm: [f64; 2],
    pub span_range_deg: [f64; 2],
    pub streamlines_per_bundle: usize,
    pub points: usize,
    pub jitter_mm: f64,
    pub radius_sd_mm: f64,
    pub span_sd_deg: f64,
    pub tilt_sd_deg: f64,
    pub distractors: usize,
    pub seed: u64,
}

impl Default for ArcGrid {
    fn default() -> Self {
        Self {
            bundles: 20,
            spacing_mm: 200.0,
            radius_range_mm: [15.0, 25.0],
            span_range_deg: [140.0, 220.0],
            streamlines_per_bundle: 50,
            points: 40,
            jitter_mm: 0.5,
            radius_sd_mm: 2.0,
            span_sd_deg: 20.0,
            tilt_sd_deg: 20.0,
            distractors: 300,
            seed: 0,
        }
    }
}

impl ArcGrid {
    /// Unperturbed scene spec; bundle ids are `b00`, `b01`, ...
    pub fn scene_spec(&self) -> SceneSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let side = (1..).find(|s| s * s * s >= self.bundles).unwrap_or(1);
        let [r0, r1] = self.radius_range_mm;
        let [s0, s1] = self.span_range_deg;
        let bundles = (0..self.bundles)
            .map(|i| {
                let cell = [i % side, (i / side) % side, i / (side * side)];
                ArcSpec {
                    id: format!("b{i:02}"),
                    center: cell.map(|c| c as f64 * self.spacing_mm),
                    radius_mm: rng.random_range(r0..=r1),
                    span_deg: rng.random_range(s0..=s1),
                    orientation_deg: [rng.random_range(0.0..180.0), rng.random_range(0.0..360.0)],
                    jitter_mm: self.jitter_mm,
                    radius_sd_mm: self.radius_sd_mm,
                    span_sd_deg: self.span_sd_deg,
                    tilt_sd_deg: self.tilt_sd_deg,
                    count: self.streamlines_per_bundle,
                    points: self.points,
                    seed: None,
                }
            })
            .collect();
        let lo = -0.25 * self.spacing_mm;
        let hi = (side as f64 - 0.5) * self.spacing_mm;
        SceneSpec {
            bundles,
            distractors: DistractorSpec {
                count: self.distractors,
                extent_min: [lo; 3],
                extent_max: [hi; 3],
                step_mm: 2.0,
                points: 30,
                max_turn_deg: 8.0,
            },
            global_perturbation: RigidPerturbation::default(),
            local_perturbation: LocalPerturbationSpec::default(),
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streamline::shape_angle;

    fn arc_spec() -> ArcSpec {
        ArcSpec {
            id: "a".into(),
            center: [10.0, -5.0, 3.0],
            radius_mm: 10.0,
            span_deg: 180.0,
            orientation_deg: [30.0, 45.0],
            jitter_mm: 0.0,
            radius_sd_mm: 0.0,
            span_sd_deg: 0.0,
            tilt_sd_deg: 0.0,
            count: 5,
            points: 40,
            seed: Some(1),
        }
    }

    #[test]
    fn noiseless_bundle_is_the_analytic_arc() {
        let set = generate_bundle(&arc_spec(), 0).unwrap();
        let c = Point3::from(arc_spec().center);
        for s in &set {
            for p in s.points() {
                assert!(((p - c).norm() - 10.0).abs() < 1e-5);
            }
            let rs = resample(s, 21).unwrap();
            assert!((shape_angle(&rs).unwrap() - 90.0).abs() < 0.5);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let mut spec = arc_spec();
        spec.jitter_mm = 0.5;
        spec.radius_sd_mm = 1.0;
        assert_eq!(
            generate_bundle(&spec, 0).unwrap(),
            generate_bundle(&spec, 0).unwrap()
        );
        spec.seed = None;
        assert_ne!(
            generate_bundle(&spec, 1).unwrap(),
            generate_bundle(&spec, 2).unwrap()
        );
    }

    #[test]
    fn invalid_specs() {
        let mut s = arc_spec();
        s.span_deg = 5.0;
        assert!(generate_bundle(&s, 0).is_err());
        let mut s = arc_spec();
        s.count = 0;
        assert!(generate_bundle(&s, 0).is_err());
    }

    #[test]
    fn unperturbed_scene_copies_the_atlas() {
        let scene = generate_scene(&SceneSpec {
            bundles: vec![
                arc_spec(),
                ArcSpec {
                    id: "b".into(),
                    ..arc_spec()
                },
            ],
            distractors: DistractorSpec::default(),
            global_perturbation: RigidPerturbation::default(),
            local_perturbation: LocalPerturbationSpec::default(),
            seed: 4,
        })
        .unwrap();
        let atlas: Vec<_> = scene
            .atlas_bundles
            .iter()
            .flat_map(|(_, s)| s.clone())
            .collect();
        assert_eq!(scene.subject, atlas);
        assert_eq!(scene.truth[0].as_deref(), Some("a"));
        assert_eq!(scene.truth[9].as_deref(), Some("b"));
    }

    #[test]
    fn distractor_only_scene() {
        let scene = generate_scene(&SceneSpec {
            bundles: vec![],
            distractors: DistractorSpec {
                count: 30,
                extent_min: [-50.0; 3],
                extent_max: [50.0; 3],
                step_mm: 2.0,
                points: 20,
                max_turn_deg: 10.0,
            },
            global_perturbation: RigidPerturbation::default(),
            local_perturbation: LocalPerturbationSpec::default(),
            seed: 9,
        })
        .unwrap();
        assert_eq!(scene.subject.len(), 30);
        assert!(scene.truth.iter().all(Option::is_none));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let spec = SceneSpec {
            bundles: vec![arc_spec(), arc_spec()],
            distractors: DistractorSpec::default(),
            global_perturbation: RigidPerturbation::default(),
            local_perturbation: LocalPerturbationSpec::default(),
            seed: 0,
        };
        assert!(matches!(
            generate_scene(&spec),
            Err(Error::DuplicateBundle(_))
        ));
    }
}
