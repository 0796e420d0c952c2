//! One-pass QuickBundles clustering with flip-aligned running centroids.

use crate::distance::mdf_flip;
use crate::error::{Error, Result};
use crate::streamline::{Point3, ResampledStreamline};

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    centroid: ResampledStreamline,
    members: Vec<usize>,
    flipped: Vec<bool>,
}

impl Cluster {
    pub fn centroid(&self) -> &ResampledStreamline {
        &self.centroid
    }

    /// Input positions of the members, in assignment order.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Whether each member was reversed before being averaged in.
    pub fn flipped(&self) -> &[bool] {
        &self.flipped
    }

    pub fn count(&self) -> usize {
        self.members.len()
    }

    fn absorb(&mut self, s: &ResampledStreamline, index: usize, flip: bool) {
        let n = (self.members.len() + 1) as f64;
        let k = s.k();
        let pts: Vec<Point3> = self
            .centroid
            .points()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let q = if flip {
                    s.points()[k - 1 - i]
                } else {
                    s.points()[i]
                };
                c + (q - c) / n
            })
            .collect();
        self.centroid = ResampledStreamline::from_points_unchecked(pts);
        self.members.push(index);
        self.flipped.push(flip);
    }
}

/// Clusters streamlines in input order. Each streamline joins the nearest
/// centroid (by MDF) if that distance is below `threshold_mm`, otherwise it
/// seeds a new cluster.
pub fn quickbundles<'a, I>(streamlines: I, threshold_mm: f64) -> Result<Vec<Cluster>>
where
    I: IntoIterator<Item = &'a ResampledStreamline>,
{
    if !(threshold_mm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "clustering threshold must be positive, got {threshold_mm}"
        )));
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut k = None;
    for (index, s) in streamlines.into_iter().enumerate() {
        let expected = *k.get_or_insert(s.k());
        if s.k() != expected {
            return Err(Error::PointCountMismatch(expected, s.k()));
        }
        let mut best: Option<(usize, f64, bool)> = None;
        for (ci, c) in clusters.iter().enumerate() {
            let (d, flip) = mdf_flip(s, &c.centroid);
            if best.is_none_or(|(_, bd, _)| d < bd) {
                best = Some((ci, d, flip));
            }
        }
        match best {
            Some((ci, d, flip)) if d < threshold_mm => clusters[ci].absorb(s, index, flip),
            _ => clusters.push(Cluster {
                centroid: s.clone(),
                members: vec![index],
                flipped: vec![false],
            }),
        }
    }
    Ok(clusters)
}

/// Centroids of the clusters, in cluster order.
pub fn centroids(clusters: &[Cluster]) -> Vec<ResampledStreamline> {
    clusters.iter().map(|c| c.centroid.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::mdf;
    use crate::streamline::{resample, Streamline, Vector3};
    use approx::assert_abs_diff_eq;

    fn line(a: [f64; 3], b: [f64; 3]) -> ResampledStreamline {
        resample(
            &Streamline::new(vec![Point3::from(a), Point3::from(b)]).unwrap(),
            21,
        )
        .unwrap()
    }

    #[test]
    fn basic_cases() {
        let a = line([0., 0., 0.], [10., 0., 0.]);
        let one = quickbundles([&a], 5.0).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].centroid(), &a);

        let two = quickbundles([&a, &a], 1.0).unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].count(), 2);
        assert_eq!(two[0].centroid(), &a);

        let b = a.translated(&Vector3::new(0.0, 10.0, 0.0));
        assert_eq!(quickbundles([&a, &b], 5.0).unwrap().len(), 2);

        assert!(quickbundles(std::iter::empty(), 5.0).unwrap().is_empty());
        assert!(quickbundles([&a], 0.0).is_err());
    }

    #[test]
    fn flipped_members_average_aligned() {
        let a = line([0., 0., 0.], [10., 0., 0.]);
        let b = line([10., 2., 0.], [0., 2., 0.]);
        let c = quickbundles([&a, &b], 5.0).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].flipped(), &[false, true]);
        assert_abs_diff_eq!(c[0].centroid().first().y, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[0].centroid().first().x, 0.0, epsilon = 1e-12);
        assert!(mdf(c[0].centroid(), &a).unwrap() < 1.0 + 1e-12);
    }
}
