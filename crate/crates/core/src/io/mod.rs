//! File formats: track files, affine matrices, atlas directories, result
//! directories and ground-truth labels.

mod affine;
mod atlas_dir;
mod result;
mod tck;
mod truth;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub use affine::{apply_affine, parse_affine, read_affine, Affine, AFFINE_ROW_TOL};
pub use atlas_dir::{
    bundle_track_path, read_atlas, read_bundle_dir, write_atlas, AtlasManifest, AtlasStatsFile,
    MANIFEST_FILE, STATS_FILE,
};
pub use result::{
    read_result, write_result, BundleSummary, ResultDirectory, ResultSummary,
    RESULT_FORMAT_VERSION, SUMMARY_FILE,
};
pub use tck::{decode_tck, encode_points, encode_tck, read_tck, write_resampled_tck, write_tck};
pub use truth::{read_truth, write_truth, GroundTruth, TRUTH_FORMAT_VERSION};

/// Serializes as pretty JSON with a trailing newline. Floats use the
/// shortest representation that parses back to the same value.
pub fn to_json_bytes<T: Serialize>(value: &T) -> std::result::Result<Vec<u8>, serde_json::Error> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let bytes = to_json_bytes(value).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}
