//! Uniform grid over streamline bounding boxes for sphere queries.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::streamline::{Point3, ResampledStreamline};

/// When a streamline counts as being inside a query sphere.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Containment {
    /// Every resampled point lies inside.
    #[default]
    All,
    /// At least one resampled point lies inside.
    Any,
}

impl Containment {
    pub fn test(self, s: &ResampledStreamline, center: &Point3, radius: f64) -> bool {
        let r2 = radius * radius;
        let inside = |p: &Point3| (p - center).norm_squared() <= r2;
        match self {
            Containment::All => s.points().iter().all(inside),
            Containment::Any => s.points().iter().any(inside),
        }
    }
}

type CellKey = [i64; 3];

#[derive(Clone, Debug)]
pub struct StreamlineGrid {
    cell_mm: f64,
    cells: HashMap<CellKey, Vec<u32>>,
    bounds: Vec<(Point3, Point3)>,
}

fn bbox(s: &ResampledStreamline) -> (Point3, Point3) {
    let mut lo = s.first();
    let mut hi = s.first();
    for p in s.points() {
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (lo, hi)
}

impl StreamlineGrid {
    pub fn build(streamlines: &[ResampledStreamline], cell_mm: f64) -> Self {
        assert!(cell_mm > 0.0, "grid cell size must be positive");
        let mut grid = Self {
            cell_mm,
            cells: HashMap::new(),
            bounds: Vec::with_capacity(streamlines.len()),
        };
        for (i, s) in streamlines.iter().enumerate() {
            let (lo, hi) = bbox(s);
            let a = grid.key(&lo);
            let b = grid.key(&hi);
            for x in a[0]..=b[0] {
                for y in a[1]..=b[1] {
                    for z in a[2]..=b[2] {
                        grid.cells.entry([x, y, z]).or_default().push(i as u32);
                    }
                }
            }
            grid.bounds.push((lo, hi));
        }
        grid
    }

    fn key(&self, p: &Point3) -> CellKey {
        [
            (p.x / self.cell_mm).floor() as i64,
            (p.y / self.cell_mm).floor() as i64,
            (p.z / self.cell_mm).floor() as i64,
        ]
    }

    pub fn cell_mm(&self) -> f64 {
        self.cell_mm
    }

    /// Indices (ascending) of the streamlines inside the sphere under `rule`.
    /// `streamlines` must be the set the grid was built from.
    pub fn query_sphere(
        &self,
        streamlines: &[ResampledStreamline],
        center: &Point3,
        radius: f64,
        rule: Containment,
    ) -> Vec<usize> {
        debug_assert_eq!(streamlines.len(), self.bounds.len());
        if !(radius >= 0.0) || streamlines.is_empty() {
            return Vec::new();
        }
        let lo = self.key(&Point3::new(
            center.x - radius,
            center.y - radius,
            center.z - radius,
        ));
        let hi = self.key(&Point3::new(
            center.x + radius,
            center.y + radius,
            center.z + radius,
        ));
        let span: i128 = (0..3).map(|d| (hi[d] - lo[d] + 1) as i128).product();
        let in_range = |k: &CellKey| (0..3).all(|d| k[d] >= lo[d] && k[d] <= hi[d]);

        let mut candidates: Vec<u32> = Vec::new();
        if span > self.cells.len() as i128 {
            for (k, ids) in &self.cells {
                if in_range(k) {
                    candidates.extend_from_slice(ids);
                }
            }
        } else {
            for x in lo[0]..=hi[0] {
                for y in lo[1]..=hi[1] {
                    for z in lo[2]..=hi[2] {
                        if let Some(ids) = self.cells.get(&[x, y, z]) {
                            candidates.extend_from_slice(ids);
                        }
                    }
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();

        candidates
            .into_iter()
            .map(|i| i as usize)
            .filter(|&i| {
                if rule == Containment::All {
                    let (blo, bhi) = &self.bounds[i];
                    let outside_box =
                        (0..3).any(|d| blo[d] < center[d] - radius || bhi[d] > center[d] + radius);
                    if outside_box {
                        return false;
                    }
                }
                rule.test(&streamlines[i], center, radius)
            })
            .collect()
    }
}

/// Streamlines plus their spatial index. Neighborhoods are queried on demand
/// rather than precomputed.
#[derive(Clone, Debug)]
pub struct Tractogram {
    streamlines: Vec<ResampledStreamline>,
    grid: StreamlineGrid,
}

impl Tractogram {
    pub fn new(streamlines: Vec<ResampledStreamline>, cell_mm: f64) -> Self {
        let grid = StreamlineGrid::build(&streamlines, cell_mm);
        Self { streamlines, grid }
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

    pub fn query_sphere(&self, center: &Point3, radius: f64, rule: Containment) -> Vec<usize> {
        self.grid
            .query_sphere(&self.streamlines, center, radius, rule)
    }
}
