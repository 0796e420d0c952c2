//! Atlas directories: `manifest.json`, `atlas_stats.json` and one
//! `<bundle_id>.tck` per bundle holding its resampled streamlines.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tck::{read_tck, write_resampled_tck};
use super::{read_json, write_json};
use crate::atlas::{AtlasModel, BundleModel, BundleStats, ATLAS_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::streamline::{Bundle, ResampledStreamline, Streamline};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const STATS_FILE: &str = "atlas_stats.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasManifest {
    pub format_version: String,
    pub resample_k: usize,
    pub bundles: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasStatsFile {
    pub format_version: String,
    pub bundles: Vec<BundleStats>,
}

pub fn bundle_track_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.tck"))
}

fn check_version(path: &Path, found: &str) -> Result<()> {
    if found != ATLAS_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            expected: ATLAS_FORMAT_VERSION.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

pub fn write_atlas(model: &AtlasModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = AtlasManifest {
        format_version: model.format_version.clone(),
        resample_k: model.resample_k,
        bundles: model.bundles.iter().map(|b| b.id().to_string()).collect(),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    let stats = AtlasStatsFile {
        format_version: model.format_version.clone(),
        bundles: model.bundles.iter().map(|b| b.stats.clone()).collect(),
    };
    write_json(&dir.join(STATS_FILE), &stats)?;
    for b in &model.bundles {
        write_resampled_tck(bundle_track_path(dir, b.id()), b.bundle.streamlines())?;
    }
    Ok(())
}

fn to_resampled(path: &Path, raw: Vec<Streamline>, k: usize) -> Result<Vec<ResampledStreamline>> {
    raw.into_iter()
        .enumerate()
        .map(|(i, s)| {
            if s.len() != k {
                return Err(Error::parse(
                    path,
                    format!("streamline {i} has {} points, atlas expects {k}", s.len()),
                ));
            }
            ResampledStreamline::from_points(s.into_points())
        })
        .collect()
}

pub fn read_atlas(dir: impl AsRef<Path>) -> Result<AtlasModel> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: AtlasManifest = read_json(&manifest_path)?;
    check_version(&manifest_path, &manifest.format_version)?;
    let stats_path = dir.join(STATS_FILE);
    let stats: AtlasStatsFile = read_json(&stats_path)?;
    check_version(&stats_path, &stats.format_version)?;
    if manifest.bundles.is_empty() {
        return Err(Error::parse(&manifest_path, "atlas lists no bundles"));
    }

    let mut bundles = Vec::with_capacity(manifest.bundles.len());
    for (i, id) in manifest.bundles.iter().enumerate() {
        if manifest.bundles[..i].contains(id) {
            return Err(Error::DuplicateBundle(id.clone()));
        }
        let entry = stats.bundles.iter().find(|s| &s.id == id).ok_or_else(|| {
            Error::parse(
                &stats_path,
                format!("missing stats entry for bundle '{id}'"),
            )
        })?;
        let track_path = bundle_track_path(dir, id);
        let streamlines = to_resampled(&track_path, read_tck(&track_path)?, manifest.resample_k)?;
        if streamlines.len() != entry.streamline_count {
            return Err(Error::parse(
                &track_path,
                format!(
                    "{} streamlines on disk, stats record {}",
                    streamlines.len(),
                    entry.streamline_count
                ),
            ));
        }
        if entry.reference.k() != manifest.resample_k {
            return Err(Error::parse(
                &stats_path,
                format!(
                    "reference of bundle '{id}' has {} points",
                    entry.reference.k()
                ),
            ));
        }
        bundles.push(BundleModel {
            bundle: Bundle::new(id.clone(), streamlines)?,
            stats: entry.clone(),
        });
    }
    Ok(AtlasModel {
        format_version: manifest.format_version,
        resample_k: manifest.resample_k,
        bundles,
    })
}

/// Reads every `*.tck` file of `dir` as one bundle named after the file
/// stem, in file-name order.
pub fn read_bundle_dir(dir: impl AsRef<Path>) -> Result<Vec<(String, Vec<Streamline>)>> {
    let dir = dir.as_ref();
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "tck") {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(Error::parse(dir, "no .tck bundle files found"));
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let id = p
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::parse(&p, "bundle file name is not valid UTF-8"))?
                .to_string();
            Ok((id, read_tck(&p)?))
        })
        .collect()
}
