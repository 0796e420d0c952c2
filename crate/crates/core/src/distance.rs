//! Streamline distance kernels: MDF, MMEA and the symmetric bundle cost.

use crate::error::{Error, Result};
use crate::exec;
use crate::streamline::ResampledStreamline;

fn check_k(a: &ResampledStreamline, b: &ResampledStreamline) -> Result<()> {
    if a.k() != b.k() {
        return Err(Error::PointCountMismatch(a.k(), b.k()));
    }
    Ok(())
}

/// Mean pointwise distance with `b` in its given orientation.
pub fn direct_distance(a: &ResampledStreamline, b: &ResampledStreamline) -> f64 {
    let k = a.k();
    a.points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| (p - q).norm())
        .sum::<f64>()
        / k as f64
}

/// Sum of `term(i)` where `term(i)` and `term(k - 1 - i)` are added as a
/// pair first. Swapping the arguments of a flipped comparison maps term `i`
/// to term `k - 1 - i`, so this ordering makes flipped sums exactly symmetric.
fn paired_sum(k: usize, term: impl Fn(usize) -> f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..k / 2 {
        sum += term(i) + term(k - 1 - i);
    }
    if k % 2 == 1 {
        sum += term(k / 2);
    }
    sum
}

/// Mean pointwise distance with `b` reversed.
pub fn flipped_distance(a: &ResampledStreamline, b: &ResampledStreamline) -> f64 {
    let k = a.k();
    let (pa, pb) = (a.points(), b.points());
    paired_sum(k, |i| (pa[i] - pb[k - 1 - i]).norm()) / k as f64
}

/// MDF and whether the flipped orientation achieved it. Assumes equal `k`.
pub(crate) fn mdf_flip(a: &ResampledStreamline, b: &ResampledStreamline) -> (f64, bool) {
    let d = direct_distance(a, b);
    let f = flipped_distance(a, b);
    if f < d {
        (f, true)
    } else {
        (d, false)
    }
}

#[inline]
pub(crate) fn mdf_unchecked(a: &ResampledStreamline, b: &ResampledStreamline) -> f64 {
    mdf_flip(a, b).0
}

/// Minimum average direct-flip distance.
pub fn mdf(a: &ResampledStreamline, b: &ResampledStreamline) -> Result<f64> {
    check_k(a, b)?;
    Ok(mdf_unchecked(a, b))
}

pub(crate) fn mmea_unchecked(a: &ResampledStreamline, b: &ResampledStreamline) -> f64 {
    let ma = a.midpoint();
    let mb = b.midpoint();
    let k = a.k();
    let (pa, pb) = (a.points(), b.points());
    let mut direct = 0.0;
    for i in 0..k {
        direct += ((pa[i] - ma) - (pb[i] - mb)).norm();
    }
    let flipped = paired_sum(k, |i| ((pa[i] - ma) - (pb[k - 1 - i] - mb)).norm());
    direct.min(flipped) / k as f64
}

/// MDF after translating each streamline so its medial point sits at the
/// origin.
pub fn mmea(a: &ResampledStreamline, b: &ResampledStreamline) -> Result<f64> {
    check_k(a, b)?;
    if a.k().is_multiple_of(2) {
        return Err(Error::EvenPointCount(a.k()));
    }
    Ok(mmea_unchecked(a, b))
}

/// Below this many pairs the scan stays on the calling thread.
const PARALLEL_PAIRS: usize = 4096;

fn mean_nearest(from: &[ResampledStreamline], to: &[ResampledStreamline]) -> f64 {
    let nearest = |a: &ResampledStreamline| {
        to.iter()
            .map(|b| mdf_unchecked(a, b))
            .fold(f64::INFINITY, f64::min)
    };
    let mins: Vec<f64> = if from.len() * to.len() < PARALLEL_PAIRS {
        from.iter().map(nearest).collect()
    } else {
        exec::map(from, nearest)
    };
    mins.iter().sum::<f64>() / from.len() as f64
}

/// Symmetric mean-of-minimum MDF between two streamline sets; the cost
/// minimised by streamline-based registration.
pub fn bundle_min_distance(a: &[ResampledStreamline], b: &[ResampledStreamline]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let k = a[0].k();
    if let Some(s) = a.iter().chain(b).find(|s| s.k() != k) {
        return Err(Error::PointCountMismatch(k, s.k()));
    }
    Ok(bundle_min_distance_unchecked(a, b))
}

pub(crate) fn bundle_min_distance_unchecked(
    a: &[ResampledStreamline],
    b: &[ResampledStreamline],
) -> f64 {
    0.5 * (mean_nearest(a, b) + mean_nearest(b, a))
}
