use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::streamline::{Point3, ResampledStreamline, Vector3};

/// Six-parameter rigid transform: rotation about a pivot followed by a
/// translation, `p -> R (p - pivot) + pivot + translation`.
///
/// The rotation is given as intrinsic x-y-z Euler angles in degrees,
/// i.e. `R = Rx(a) * Ry(b) * Rz(c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation_deg: [f64; 3],
    pub translation_mm: [f64; 3],
    pub pivot: [f64; 3],
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

fn rx(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn ry(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rz(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Euler angles (degrees) of `R = Rx(a) Ry(b) Rz(c)`.
pub fn euler_from_matrix(r: &Matrix3<f64>) -> [f64; 3] {
    let sb = r[(0, 2)].clamp(-1.0, 1.0);
    let b = sb.asin();
    let (a, c) = if b.cos() > 1e-12 {
        ((-r[(1, 2)]).atan2(r[(2, 2)]), (-r[(0, 1)]).atan2(r[(0, 0)]))
    } else {
        (r[(2, 1)].atan2(r[(1, 1)]), 0.0)
    };
    [a.to_degrees(), b.to_degrees(), c.to_degrees()]
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation_deg: [0.0; 3],
            translation_mm: [0.0; 3],
            pivot: [0.0; 3],
        }
    }

    pub fn new(rotation_deg: [f64; 3], translation_mm: [f64; 3], pivot: Point3) -> Self {
        Self {
            rotation_deg,
            translation_mm,
            pivot: [pivot.x, pivot.y, pivot.z],
        }
    }

    /// Builds the transform from the six optimisation parameters
    /// `[tx, ty, tz, ax, ay, az]`.
    pub fn from_params(params: &[f64], pivot: Point3) -> Self {
        Self::new(
            [params[3], params[4], params[5]],
            [params[0], params[1], params[2]],
            pivot,
        )
    }

    pub fn params(&self) -> [f64; 6] {
        let t = self.translation_mm;
        let r = self.rotation_deg;
        [t[0], t[1], t[2], r[0], r[1], r[2]]
    }

    pub fn pivot(&self) -> Point3 {
        Point3::from(self.pivot)
    }

    pub fn translation(&self) -> Vector3 {
        Vector3::from(self.translation_mm)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let [a, b, c] = self.rotation_deg.map(f64::to_radians);
        rx(a) * ry(b) * rz(c)
    }

    pub fn apply_point(&self, p: &Point3) -> Point3 {
        let pivot = self.pivot();
        pivot + self.rotation_matrix() * (p - pivot) + self.translation()
    }

    pub fn apply(&self, rs: &ResampledStreamline) -> ResampledStreamline {
        let r = self.rotation_matrix();
        let pivot = self.pivot();
        let t = self.translation();
        rs.map_points(|p| pivot + r * (p - pivot) + t)
    }

    pub fn apply_all(&self, set: &[ResampledStreamline]) -> Vec<ResampledStreamline> {
        set.iter().map(|s| self.apply(s)).collect()
    }

    pub fn inverse(&self) -> Self {
        let r = self.rotation_matrix().transpose();
        let t = self.translation();
        Self::new(euler_from_matrix(&r), (-t).into(), self.pivot() + t)
    }

    /// `self ∘ first`: applies `first`, then `self`. Keeps `first`'s pivot.
    pub fn compose(&self, first: &RigidTransform) -> Self {
        let ra = first.rotation_matrix();
        let rb = self.rotation_matrix();
        let ca = first.pivot();
        let cb = self.pivot();
        let r = rb * ra;
        let t = rb * (ca + first.translation() - cb) + cb.coords + self.translation() - ca.coords;
        Self::new(euler_from_matrix(&r), t.into(), ca)
    }

    /// Total rotation angle of the transform, in degrees.
    pub fn rotation_angle_deg(&self) -> f64 {
        let r = self.rotation_matrix();
        ((r.trace() - 1.0) / 2.0)
            .clamp(-1.0, 1.0)
            .acos()
            .to_degrees()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streamline::{resample, Streamline};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sample() -> ResampledStreamline {
        let pts = (0..30)
            .map(|i| {
                let t = i as f64 * 0.1;
                Point3::new(10.0 * t.cos(), 8.0 * t.sin(), t * t)
            })
            .collect();
        resample(&Streamline::new(pts).unwrap(), 21).unwrap()
    }

    #[test]
    fn examples() {
        let s = sample();
        assert_eq!(RigidTransform::identity().apply(&s), s);

        let t = RigidTransform::new([0.0; 3], [1.0, 2.0, 3.0], Point3::origin());
        let moved = t.apply(&s);
        for (a, b) in s.points().iter().zip(moved.points()) {
            assert_abs_diff_eq!((b - a).norm(), 14f64.sqrt(), epsilon = 1e-12);
        }

        let rot = RigidTransform::new([0.0, 0.0, 90.0], [0.0; 3], Point3::origin());
        let q = rot.apply_point(&Point3::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(q.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn euler_round_trip_near_gimbal() {
        let t = RigidTransform::new([20.0, 90.0, 0.0], [0.0; 3], Point3::origin());
        let back = euler_from_matrix(&t.rotation_matrix());
        let u = RigidTransform::new(back, [0.0; 3], Point3::origin());
        assert!((t.rotation_matrix() - u.rotation_matrix()).norm() < 1e-9);
    }

    proptest! {
        #[test]
        fn inverse_and_compose(
            a in -180.0..180.0f64, b in -89.0..89.0f64, c in -180.0..180.0f64,
            tx in -50.0..50.0f64, ty in -50.0..50.0f64, tz in -50.0..50.0f64,
            px in -20.0..20.0f64, py in -20.0..20.0f64, pz in -20.0..20.0f64,
        ) {
            let t = RigidTransform::new([a, b, c], [tx, ty, tz], Point3::new(px, py, pz));
            let s = sample();
            let back = t.inverse().apply(&t.apply(&s));
            for (p, q) in s.points().iter().zip(back.points()) {
                prop_assert!((p - q).norm() < 1e-6);
            }
            let id = t.inverse().compose(&t);
            for (p, q) in s.points().iter().zip(id.apply(&s).points()) {
                prop_assert!((p - q).norm() < 1e-6);
            }
            // Distances are preserved.
            let moved = t.apply(&s);
            for i in 0..s.k() {
                for j in (i + 1)..s.k() {
                    let d0 = (s.points()[i] - s.points()[j]).norm();
                    let d1 = (moved.points()[i] - moved.points()[j]).norm();
                    prop_assert!((d0 - d1).abs() <= 1e-9 * d0.max(1.0));
                }
            }
        }
    }
}
