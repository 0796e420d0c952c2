//! Streamline value types, arc-length resampling and per-streamline geometry.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
pub type Matrix3 = nalgebra::Matrix3<f64>;

/// Number of points every streamline is resampled to. Odd, so index 10 is an
/// exact medial sample.
pub const DEFAULT_K: usize = 21;

/// Norm below which a chord or direction vector is treated as zero.
pub const DEGENERATE_NORM: f64 = 1e-9;

/// Relative eigenvalue ratio below which a point cloud counts as collinear.
const COLLINEAR_RATIO: f64 = 1e-10;

fn check_points(points: &[Point3]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    if let Some(i) = points
        .iter()
        .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
    {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

/// A raw tractography streamline: an ordered polyline in millimetres.
#[derive(Clone, Debug, PartialEq)]
pub struct Streamline {
    points: Vec<Point3>,
}

impl Streamline {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        check_points(&points)?;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn arc_length(&self) -> f64 {
        arc_length(&self.points)
    }

    pub fn resample(&self, k: usize) -> Result<ResampledStreamline> {
        resample(self, k)
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }
}

/// A streamline resampled to a fixed number of arc-length-equidistant points.
#[derive(Clone, Debug, PartialEq)]
pub struct ResampledStreamline {
    points: Vec<Point3>,
}

impl ResampledStreamline {
    /// Wraps points that are already resampled (e.g. read back from disk).
    pub fn from_points(points: Vec<Point3>) -> Result<Self> {
        check_points(&points)?;
        Ok(Self { points })
    }

    pub(crate) fn from_points_unchecked(points: Vec<Point3>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    pub fn first(&self) -> Point3 {
        self.points[0]
    }

    pub fn last(&self) -> Point3 {
        self.points[self.points.len() - 1]
    }

    /// The medial sample at index `(k - 1) / 2`.
    pub fn midpoint(&self) -> Point3 {
        self.points[(self.points.len() - 1) / 2]
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }

    pub fn translated(&self, offset: &Vector3) -> Self {
        self.map_points(|p| p + offset)
    }

    pub fn map_points(&self, f: impl FnMut(&Point3) -> Point3) -> Self {
        Self {
            points: self.points.iter().map(f).collect(),
        }
    }

    /// Rounds every coordinate to single precision, the precision of track
    /// files, so that a streamline survives a write/read cycle unchanged.
    pub fn snapped_f32(&self) -> Self {
        self.map_points(|p| Point3::new(p.x as f32 as f64, p.y as f32 as f64, p.z as f32 as f64))
    }

    pub fn arc_length(&self) -> f64 {
        arc_length(&self.points)
    }

    pub fn to_streamline(&self) -> Streamline {
        Streamline {
            points: self.points.clone(),
        }
    }
}

impl Serialize for ResampledStreamline {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: Vec<[f64; 3]> = self.points.iter().map(|p| [p.x, p.y, p.z]).collect();
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ResampledStreamline {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<[f64; 3]>::deserialize(deserializer)?;
        let points = raw
            .into_iter()
            .map(|[x, y, z]| Point3::new(x, y, z))
            .collect();
        ResampledStreamline::from_points(points).map_err(serde::de::Error::custom)
    }
}

/// Sum of consecutive point distances.
pub fn arc_length(points: &[Point3]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Resamples `s` to `k` points at equal arc-length spacing along the
/// piecewise-linear input. Consecutive duplicate points are dropped first.
pub fn resample(s: &Streamline, k: usize) -> Result<ResampledStreamline> {
    if k < 2 {
        return Err(Error::BadResampleCount(k));
    }
    let mut pts: Vec<Point3> = Vec::with_capacity(s.points.len());
    for p in &s.points {
        if pts.last() != Some(p) {
            pts.push(*p);
        }
    }
    if pts.len() < 2 {
        return Err(Error::ZeroLength);
    }
    let mut cum = Vec::with_capacity(pts.len());
    cum.push(0.0);
    for w in pts.windows(2) {
        let last = *cum.last().unwrap();
        cum.push(last + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::ZeroLength);
    }

    let mut out = Vec::with_capacity(k);
    let mut seg = 0;
    for i in 0..k {
        let t = total * i as f64 / (k - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < t {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let frac = ((t - cum[seg]) / len).clamp(0.0, 1.0);
        out.push(pts[seg] + (pts[seg + 1] - pts[seg]) * frac);
    }
    out[0] = pts[0];
    out[k - 1] = pts[pts.len() - 1];
    Ok(ResampledStreamline { points: out })
}

pub fn midpoint(rs: &ResampledStreamline) -> Point3 {
    rs.midpoint()
}

/// Arithmetic mean of every point of every streamline.
pub fn bundle_barycenter(streamlines: &[ResampledStreamline]) -> Point3 {
    let mut sum = Vector3::zeros();
    let mut n = 0usize;
    for s in streamlines {
        for p in s.points() {
            sum += p.coords;
            n += 1;
        }
    }
    if n == 0 {
        return Point3::origin();
    }
    Point3::from(sum / n as f64)
}

/// Largest distance from `center` to any point of the set.
pub fn bundle_radius(streamlines: &[ResampledStreamline], center: &Point3) -> f64 {
    streamlines
        .iter()
        .flat_map(|s| s.points().iter())
        .map(|p| (p - center).norm())
        .fold(0.0, f64::max)
}

/// Least-squares plane normal of a streamline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub normal: Vector3,
    /// Set when the points are collinear and the plane is not determined.
    pub degenerate: bool,
}

/// Makes the first component with magnitude above 1e-9 positive.
pub fn sign_normalized(v: Vector3) -> Vector3 {
    for c in v.iter() {
        if c.abs() > 1e-9 {
            return if *c < 0.0 { -v } else { v };
        }
    }
    v
}

pub fn fit_plane_normal(rs: &ResampledStreamline) -> PlaneFit {
    fit_plane(rs.points())
}

pub fn fit_plane(points: &[Point3]) -> PlaneFit {
    let n = points.len() as f64;
    let mean = points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.coords)
        / n;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p.coords - mean;
        scatter += d * d.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let smallest = order[0];
    let middle = eig.eigenvalues[order[1]];
    let largest = eig.eigenvalues[order[2]];
    let normal = sign_normalized(eig.eigenvectors.column(smallest).normalize());
    let degenerate = !(largest > 0.0) || middle <= COLLINEAR_RATIO * largest;
    PlaneFit { normal, degenerate }
}

/// Mean of (first − midpoint) and (last − midpoint).
pub fn direction_vector(rs: &ResampledStreamline) -> Vector3 {
    let m = rs.midpoint();
    ((rs.first() - m) + (rs.last() - m)) * 0.5
}

/// Multiple of machine epsilon below which a cross product counts as zero.
const COLLINEAR_EPS: f64 = 16.0 * f64::EPSILON;

/// Angle in degrees from atan2, which stays accurate near 0° and 180° where
/// acos is ill-conditioned. A cross product no larger than `sin_noise` is
/// rounding, giving exactly 0° or 180°.
fn atan2_angle_deg(a: &Vector3, b: &Vector3, cos: f64, sin_noise: f64) -> f64 {
    let mut sin = a.cross(b).norm();
    if sin <= sin_noise.max(COLLINEAR_EPS * a.norm() * b.norm()) {
        sin = 0.0;
    }
    sin.atan2(cos).to_degrees()
}

fn angle_deg(a: &Vector3, b: &Vector3) -> f64 {
    atan2_angle_deg(a, b, a.dot(b), 0.0)
}

/// Angle in degrees between the two midpoint-to-endpoint chords.
pub fn shape_angle(rs: &ResampledStreamline) -> Result<f64> {
    let m = rs.midpoint();
    let v1 = rs.first() - m;
    let v2 = rs.last() - m;
    if v1.norm() <= DEGENERATE_NORM || v2.norm() <= DEGENERATE_NORM {
        return Err(Error::DegenerateShapeAngle);
    }
    // Coordinates carry rounding proportional to their magnitude, which
    // bounds the spurious cross product of collinear chords.
    let scale = [rs.first(), m, rs.last()]
        .iter()
        .map(|p| p.coords.amax())
        .fold(0.0, f64::max);
    let noise = COLLINEAR_EPS * scale * (v1.norm() + v2.norm());
    Ok(atan2_angle_deg(&v1, &v2, v1.dot(&v2), noise))
}

/// Unsigned angle between two planes given by unit normals, in [0, 90].
pub fn angle_between_planes(n1: &Vector3, n2: &Vector3) -> f64 {
    atan2_angle_deg(n1, n2, n1.dot(n2).abs(), 0.0)
}

/// Oriented angle between two direction vectors, in [0, 180].
pub fn angle_between_directions(d1: &Vector3, d2: &Vector3) -> Result<f64> {
    if d1.norm() <= DEGENERATE_NORM || d2.norm() <= DEGENERATE_NORM {
        return Err(Error::DegenerateDirection);
    }
    Ok(angle_deg(d1, d2))
}

fn valid_bundle_id(id: &str) -> bool {
    !id.is_empty()
        && id != "."
        && id != ".."
        && !id.contains(['/', '\\', '\0'])
        && !id.starts_with('.')
}

/// A named group of resampled streamlines.
///
/// Coordinates are held at single precision so that bundles round-trip
/// exactly through track files.
#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    id: String,
    streamlines: Vec<ResampledStreamline>,
}

impl Bundle {
    pub fn new(id: impl Into<String>, streamlines: Vec<ResampledStreamline>) -> Result<Self> {
        let id = id.into();
        if !valid_bundle_id(&id) {
            return Err(Error::InvalidBundleId(id));
        }
        if streamlines.is_empty() {
            return Err(Error::EmptySet);
        }
        let k = streamlines[0].k();
        if let Some(s) = streamlines.iter().find(|s| s.k() != k) {
            return Err(Error::PointCountMismatch(k, s.k()));
        }
        let streamlines = streamlines.iter().map(|s| s.snapped_f32()).collect();
        Ok(Self { id, streamlines })
    }

    /// Resamples raw streamlines and builds a bundle.
    pub fn from_raw(id: impl Into<String>, raw: &[Streamline], k: usize) -> Result<Self> {
        let rs = raw
            .iter()
            .map(|s| resample(s, k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(id, rs)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn streamlines(&self) -> &[ResampledStreamline] {
        &self.streamlines
    }

    pub fn len(&self) -> usize {
        self.streamlines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streamlines.is_empty()
    }

    pub fn k(&self) -> usize {
        self.streamlines[0].k()
    }

    pub fn barycenter(&self) -> Point3 {
        bundle_barycenter(&self.streamlines)
    }

    pub fn radius(&self) -> f64 {
        bundle_radius(&self.streamlines, &self.barycenter())
    }
}
