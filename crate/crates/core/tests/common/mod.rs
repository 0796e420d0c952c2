#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use swmparc::registration::RigidTransform;
use swmparc::streamline::{resample, Point3, ResampledStreamline, Streamline, Vector3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut ChaCha8Rng) -> Vector3 {
    let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
    Vector3::new(x, y, z)
}

/// Smooth random polyline: 5 to 40 steps of 1 to 3 mm turning at most 25°.
pub fn random_polyline(rng: &mut ChaCha8Rng) -> Streamline {
    let n = rng.random_range(5..=40);
    let mut p = Point3::new(
        rng.random_range(-50.0..50.0),
        rng.random_range(-50.0..50.0),
        rng.random_range(-50.0..50.0),
    );
    let mut d = unit(rng);
    let mut pts = vec![p];
    for _ in 1..n {
        d = (d + 0.4 * unit(rng)).normalize();
        p += d * rng.random_range(1.0..3.0);
        pts.push(p);
    }
    Streamline::new(pts).unwrap()
}

pub fn random_resampled(rng: &mut ChaCha8Rng) -> ResampledStreamline {
    resample(&random_polyline(rng), 21).unwrap()
}

/// Arbitrary rigid transform: any rotation, translation up to 50 mm.
pub fn random_rigid(rng: &mut ChaCha8Rng) -> RigidTransform {
    let angles = [
        rng.random_range(-180.0..180.0),
        rng.random_range(-89.0..89.0),
        rng.random_range(-180.0..180.0),
    ];
    let t = [
        rng.random_range(-50.0..50.0),
        rng.random_range(-50.0..50.0),
        rng.random_range(-50.0..50.0),
    ];
    let pivot = Point3::new(
        rng.random_range(-20.0..20.0),
        rng.random_range(-20.0..20.0),
        0.0,
    );
    RigidTransform::new(angles, t, pivot)
}

/// Semicircle of radius `r` in the plane with normal `normal`, `n` points.
pub fn planar_arc(r: f64, span_deg: f64, n: usize, center: Point3, normal: Vector3) -> Streamline {
    let normal = normal.normalize();
    let helper = if normal.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = normal.cross(&helper).normalize();
    let v = normal.cross(&u);
    let half = 0.5 * span_deg.to_radians();
    let pts = (0..n)
        .map(|i| {
            let t = -half + 2.0 * half * i as f64 / (n - 1) as f64;
            center + r * (t.sin() * u + t.cos() * v)
        })
        .collect();
    Streamline::new(pts).unwrap()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
