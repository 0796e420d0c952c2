//! MRtrix track files: a text header followed by little-endian f32 point
//! triplets, a NaN triplet after each streamline and an Inf triplet at the end.

use std::path::Path;

use crate::error::{Error, Result};
use crate::streamline::{Point3, ResampledStreamline, Streamline};

const MAGIC: &str = "mrtrix tracks";
const DATATYPE: &str = "Float32LE";
const TRIPLET_BYTES: usize = 12;

fn header(count: usize, offset: usize) -> String {
    format!("{MAGIC}\ncount: {count}\ndatatype: {DATATYPE}\nfile: . {offset}\nEND\n")
}

/// Header text whose `file:` entry points just past the header itself.
fn header_with_offset(count: usize) -> String {
    let mut offset = 0;
    loop {
        let h = header(count, offset);
        if h.len() == offset {
            return h;
        }
        offset = h.len();
    }
}

/// Encodes polylines into track-file bytes. Coordinates are rounded to f32;
/// values outside the f32 range are rejected.
pub fn encode_points<'a>(
    streamlines: impl ExactSizeIterator<Item = &'a [Point3]>,
) -> Result<Vec<u8>> {
    let count = streamlines.len();
    let mut out = header_with_offset(count).into_bytes();
    let push = |v: [f32; 3], out: &mut Vec<u8>| {
        for c in v {
            out.extend_from_slice(&c.to_le_bytes());
        }
    };
    for (i, points) in streamlines.enumerate() {
        for p in points {
            let v = [p.x as f32, p.y as f32, p.z as f32];
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "streamline {i} has a coordinate outside the f32 range"
                )));
            }
            push(v, &mut out);
        }
        push([f32::NAN; 3], &mut out);
    }
    push([f32::INFINITY; 3], &mut out);
    Ok(out)
}

pub fn encode_tck(streamlines: &[Streamline]) -> Result<Vec<u8>> {
    encode_points(streamlines.iter().map(|s| s.points()))
}

pub fn write_tck(path: impl AsRef<Path>, streamlines: &[Streamline]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_tck(streamlines)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_resampled_tck(
    path: impl AsRef<Path>,
    streamlines: &[ResampledStreamline],
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_points(streamlines.iter().map(|s| s.points()))?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Header {
    count: Option<usize>,
    offset: usize,
    end: usize,
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    let err = |msg: String| Error::parse(path, msg);
    let mut pos = 0;
    let mut count = None;
    let mut offset = None;
    let mut datatype = None;
    let mut first = true;
    loop {
        let Some(len) = bytes[pos..].iter().position(|&b| b == b'\n') else {
            return Err(err(format!(
                "header not terminated by END (scanned to byte {})",
                bytes.len()
            )));
        };
        let raw = &bytes[pos..pos + len];
        let line = std::str::from_utf8(raw)
            .map_err(|_| err(format!("non-text header line at byte {pos}")))?
            .trim_end_matches('\r');
        let line_start = pos;
        pos += len + 1;
        if first {
            if line != MAGIC {
                return Err(err(format!("bad magic line {line:?}, expected {MAGIC:?}")));
            }
            first = false;
            continue;
        }
        if line == "END" {
            break;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(err(format!(
                "malformed header line {line:?} at byte {line_start}"
            )));
        };
        let value = value.trim();
        match key.trim() {
            "count" => {
                count =
                    Some(value.parse::<usize>().map_err(|_| {
                        err(format!("invalid count {value:?} at byte {line_start}"))
                    })?)
            }
            "datatype" => datatype = Some(value.to_string()),
            "file" => {
                let off = value
                    .strip_prefix('.')
                    .map(str::trim)
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| {
                        err(format!("invalid file entry {value:?} at byte {line_start}"))
                    })?;
                offset = Some(off);
            }
            _ => {}
        }
    }
    match datatype.as_deref() {
        Some(DATATYPE) => {}
        Some(other) => {
            return Err(err(format!(
                "unsupported datatype {other:?}, expected {DATATYPE}"
            )))
        }
        None => return Err(err("missing datatype entry".into())),
    }
    let offset = offset.ok_or_else(|| err("missing file entry".into()))?;
    if offset < pos {
        return Err(err(format!(
            "data offset {offset} lies inside the header, which ends at byte {pos}"
        )));
    }
    if offset > bytes.len() {
        return Err(err(format!(
            "data offset {offset} is past the end of the file ({} bytes)",
            bytes.len()
        )));
    }
    Ok(Header {
        count,
        offset,
        end: pos,
    })
}

/// Decodes track-file bytes. `path` only labels error messages.
pub fn decode_tck(bytes: &[u8], path: impl AsRef<Path>) -> Result<Vec<Streamline>> {
    let path = path.as_ref();
    let err = |msg: String| Error::parse(path, msg);
    let header = parse_header(bytes, path)?;
    debug_assert!(header.offset >= header.end);

    let mut streamlines = Vec::new();
    let mut current: Vec<Point3> = Vec::new();
    let mut start = header.offset;
    let mut pos = header.offset;
    let finish = |points: Vec<Point3>, start: usize, index: usize| {
        let n = points.len();
        Streamline::new(points).map_err(|_| {
            err(format!(
                "streamline {index} starting at byte {start} has {n} point(s), at least 2 required"
            ))
        })
    };
    loop {
        if pos == bytes.len() {
            return Err(err(format!(
                "missing Inf terminator, data ends at byte {pos}"
            )));
        }
        if pos + TRIPLET_BYTES > bytes.len() {
            return Err(err(format!(
                "truncated data at byte {pos}: {} byte(s) left, a point needs {TRIPLET_BYTES}",
                bytes.len() - pos
            )));
        }
        let mut v = [0f32; 3];
        for (c, chunk) in v
            .iter_mut()
            .zip(bytes[pos..pos + TRIPLET_BYTES].chunks_exact(4))
        {
            *c = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
        }
        if v.iter().all(|c| c.is_infinite()) {
            if !current.is_empty() {
                streamlines.push(finish(
                    std::mem::take(&mut current),
                    start,
                    streamlines.len(),
                )?);
            }
            break;
        }
        if v.iter().all(|c| c.is_nan()) {
            streamlines.push(finish(
                std::mem::take(&mut current),
                start,
                streamlines.len(),
            )?);
            pos += TRIPLET_BYTES;
            start = pos;
            continue;
        }
        if !v.iter().all(|c| c.is_finite()) {
            return Err(err(format!("malformed point at byte {pos}: {v:?}")));
        }
        current.push(Point3::new(v[0] as f64, v[1] as f64, v[2] as f64));
        pos += TRIPLET_BYTES;
    }
    if let Some(count) = header.count {
        if count != streamlines.len() {
            return Err(err(format!(
                "header count {count} does not match the {} streamline(s) decoded",
                streamlines.len()
            )));
        }
    }
    Ok(streamlines)
}

pub fn read_tck(path: impl AsRef<Path>) -> Result<Vec<Streamline>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tck(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, y: f32) -> Streamline {
        Streamline::new(
            (0..n)
                .map(|i| Point3::new(i as f64, y as f64, 0.5))
                .collect(),
        )
        .unwrap()
    }

    fn replace(bytes: &[u8], from: &str, to: &str) -> Vec<u8> {
        let at = bytes
            .windows(from.len())
            .position(|w| w == from.as_bytes())
            .unwrap();
        [&bytes[..at], to.as_bytes(), &bytes[at + from.len()..]].concat()
    }

    #[test]
    fn header_offset_points_past_header() {
        for count in [0, 9, 10, 99_999] {
            let h = header_with_offset(count);
            assert!(h.ends_with(&format!("file: . {}\nEND\n", h.len())));
        }
    }

    #[test]
    fn round_trip_and_empty() {
        let s = vec![line(3, 1.0), line(5, -2.25)];
        let bytes = encode_tck(&s).unwrap();
        assert_eq!(decode_tck(&bytes, "t.tck").unwrap(), s);
        assert_eq!(
            encode_tck(&decode_tck(&bytes, "t.tck").unwrap()).unwrap(),
            bytes
        );
        let empty = encode_tck(&[]).unwrap();
        assert!(decode_tck(&empty, "e.tck").unwrap().is_empty());
    }

    #[test]
    fn corrupt_offset_is_named() {
        let bytes = encode_tck(&[line(3, 0.0)]).unwrap();
        let good = format!("file: . {}", header_with_offset(1).len());
        let bad = replace(&bytes, &good, "file: . 9999");
        let msg = decode_tck(&bad, "c.tck").unwrap_err().to_string();
        assert!(msg.contains("9999"), "{msg}");
        let bad = replace(&bytes, &good, "file: . 3");
        let msg = decode_tck(&bad, "c.tck").unwrap_err().to_string();
        assert!(msg.contains("offset 3"), "{msg}");
    }

    #[test]
    fn truncation_and_terminator_errors() {
        let bytes = encode_tck(&[line(3, 0.0)]).unwrap();
        let msg = decode_tck(&bytes[..bytes.len() - 12], "t.tck")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("missing Inf terminator"), "{msg}");
        let msg = decode_tck(&bytes[..bytes.len() - 5], "t.tck")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("truncated data at byte"), "{msg}");
        let mut bad = bytes.clone();
        bad[..5].copy_from_slice(b"trk\0\0");
        assert!(decode_tck(&bad, "t.tck")
            .unwrap_err()
            .to_string()
            .contains("bad magic"));
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let bytes = encode_tck(&[line(3, 0.0), line(3, 1.0)]).unwrap();
        let bad = replace(&bytes, "count: 2", "count: 3");
        assert!(decode_tck(&bad, "t.tck")
            .unwrap_err()
            .to_string()
            .contains("count 3"));
    }
}
