//! 4×4 affine prealignment matrices stored as whitespace-separated text.

use std::path::Path;

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::streamline::{Point3, Streamline};

/// Allowed deviation of the last row from (0, 0, 0, 1).
pub const AFFINE_ROW_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    matrix: Matrix4<f64>,
}

impl Affine {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix4::identity(),
        }
    }

    pub fn new(matrix: Matrix4<f64>) -> Result<Self> {
        let last = matrix.row(3);
        let expected = [0.0, 0.0, 0.0, 1.0];
        let ok = (0..4).all(|j| (last[j] - expected[j]).abs() <= AFFINE_ROW_TOL);
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "affine last row must be 0 0 0 1, found {} {} {} {}",
                last[0], last[1], last[2], last[3]
            )));
        }
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(
                "affine has non-finite entries".into(),
            ));
        }
        Ok(Self { matrix })
    }

    /// Builds from 16 row-major values.
    pub fn from_row_major(values: &[f64; 16]) -> Result<Self> {
        Self::new(Matrix4::from_row_slice(values))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn apply_point(&self, p: &Point3) -> Point3 {
        self.matrix.transform_point(p)
    }

    pub fn apply(&self, s: &Streamline) -> Result<Streamline> {
        Streamline::new(s.points().iter().map(|p| self.apply_point(p)).collect())
    }
}

/// Parses 16 row-major numbers; `#` starts a comment.
pub fn parse_affine(text: &str, path: impl AsRef<Path>) -> Result<Affine> {
    let path = path.as_ref();
    let mut values = Vec::with_capacity(16);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| {
                Error::parse(
                    path,
                    format!("invalid number {tok:?} on line {}", lineno + 1),
                )
            })?;
            values.push(v);
        }
    }
    let values: [f64; 16] = values
        .as_slice()
        .try_into()
        .map_err(|_| Error::parse(path, format!("expected 16 numbers, found {}", values.len())))?;
    Affine::from_row_major(&values).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_affine(path: impl AsRef<Path>) -> Result<Affine> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_affine(&text, path)
}

/// Applies `m` to every point of every streamline.
pub fn apply_affine(m: &Affine, streamlines: &[Streamline]) -> Result<Vec<Streamline>> {
    streamlines.iter().map(|s| m.apply(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc() -> Streamline {
        Streamline::new(
            (0..10)
                .map(|i| {
                    let t = i as f64 * 0.3;
                    Point3::new(t.cos() * 5.0, t.sin() * 5.0, 1.0)
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_translation_and_scale() {
        let s = arc();
        let id = parse_affine("1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n", "id.txt").unwrap();
        assert_eq!(id.apply(&s).unwrap(), s);
        let tr = parse_affine("# shift\n1 0 0 2\n0 1 0 -3\n0 0 1 4\n0 0 0 1", "t.txt").unwrap();
        let moved = tr.apply(&s).unwrap();
        for (a, b) in s.points().iter().zip(moved.points()) {
            assert_eq!(*b, a + nalgebra::Vector3::new(2.0, -3.0, 4.0));
        }
        let sc = parse_affine("2 0 0 0 0 2 0 0 0 0 2 0 0 0 0 1", "s.txt").unwrap();
        let doubled = sc.apply(&s).unwrap();
        assert!((doubled.arc_length() - 2.0 * s.arc_length()).abs() < 1e-12);
    }

    #[test]
    fn rejects_projective_and_malformed() {
        let e = parse_affine("1 0 0 0 0 1 0 0 0 0 1 0 0 0.1 0 1", "p.txt").unwrap_err();
        assert!(e.to_string().contains("last row"), "{e}");
        assert!(parse_affine("1 0 0", "short.txt").is_err());
        assert!(parse_affine("1 0 0 x 0 1 0 0 0 0 1 0 0 0 0 1", "bad.txt").is_err());
        // Tolerance on the last row.
        assert!(parse_affine("1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 1.0000000001", "ok.txt").is_ok());
    }
}
