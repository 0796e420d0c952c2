//! The six per-streamline geometric descriptors and a per-feature container.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// One of the six geometric descriptors used for labeling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Length,
    DistToBarycenter,
    Mmea,
    PlaneAngle,
    DirectionAngle,
    ShapeAngle,
}

impl Feature {
    pub const ALL: [Feature; 6] = [
        Feature::Length,
        Feature::DistToBarycenter,
        Feature::Mmea,
        Feature::PlaneAngle,
        Feature::DirectionAngle,
        Feature::ShapeAngle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Length => "length",
            Feature::DistToBarycenter => "dist_to_barycenter",
            Feature::Mmea => "mmea",
            Feature::PlaneAngle => "plane_angle",
            Feature::DirectionAngle => "direction_angle",
            Feature::ShapeAngle => "shape_angle",
        }
    }

    /// Physically valid value range.
    pub fn domain(self) -> (f64, f64) {
        match self {
            Feature::PlaneAngle => (0.0, 90.0),
            Feature::DirectionAngle | Feature::ShapeAngle => (0.0, 180.0),
            _ => (0.0, f64::INFINITY),
        }
    }
}

/// A value for each of the six features.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerFeature<T> {
    pub length: T,
    pub dist_to_barycenter: T,
    pub mmea: T,
    pub plane_angle: T,
    pub direction_angle: T,
    pub shape_angle: T,
}

impl<T> PerFeature<T> {
    pub fn from_fn(mut f: impl FnMut(Feature) -> T) -> Self {
        Self {
            length: f(Feature::Length),
            dist_to_barycenter: f(Feature::DistToBarycenter),
            mmea: f(Feature::Mmea),
            plane_angle: f(Feature::PlaneAngle),
            direction_angle: f(Feature::DirectionAngle),
            shape_angle: f(Feature::ShapeAngle),
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Feature, &T) -> U) -> PerFeature<U> {
        PerFeature::from_fn(|ft| f(ft, &self[ft]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Feature, &T)> {
        Feature::ALL.into_iter().map(move |f| (f, &self[f]))
    }
}

impl<T> Index<Feature> for PerFeature<T> {
    type Output = T;

    fn index(&self, f: Feature) -> &T {
        match f {
            Feature::Length => &self.length,
            Feature::DistToBarycenter => &self.dist_to_barycenter,
            Feature::Mmea => &self.mmea,
            Feature::PlaneAngle => &self.plane_angle,
            Feature::DirectionAngle => &self.direction_angle,
            Feature::ShapeAngle => &self.shape_angle,
        }
    }
}

impl<T> IndexMut<Feature> for PerFeature<T> {
    fn index_mut(&mut self, f: Feature) -> &mut T {
        match f {
            Feature::Length => &mut self.length,
            Feature::DistToBarycenter => &mut self.dist_to_barycenter,
            Feature::Mmea => &mut self.mmea,
            Feature::PlaneAngle => &mut self.plane_angle,
            Feature::DirectionAngle => &mut self.direction_angle,
            Feature::ShapeAngle => &mut self.shape_angle,
        }
    }
}

/// Feature values of one streamline; `None` marks a degenerate feature
/// (collinear plane, zero direction vector, pinched shape angle).
pub type FeatureVector = PerFeature<Option<f64>>;
