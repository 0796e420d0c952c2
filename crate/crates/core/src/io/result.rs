//! Result directories: `summary.json` plus `<bundle_id>.tck` with the
//! accepted streamlines of every recognized bundle, in atlas space.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::atlas_dir::bundle_track_path;
use super::tck::{read_tck, write_resampled_tck};
use super::{read_json, write_json};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evaluation::EvaluationReport;
use crate::features::PerFeature;
use crate::parcellation::{BundleStatus, ParcellationResult};
use crate::registration::RegistrationResult;
use crate::streamline::ResampledStreamline;

pub const SUMMARY_FILE: &str = "summary.json";
pub const RESULT_FORMAT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSummary {
    pub bundle_id: String,
    pub status: BundleStatus,
    pub accepted_count: usize,
    pub neighborhood_size: usize,
    pub atlas_neighborhood_size: usize,
    pub accepted: Vec<usize>,
    pub accepted_mmea: Vec<f64>,
    pub rejections: PerFeature<usize>,
    pub registration: Option<RegistrationResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultSummary {
    pub format_version: String,
    pub subject_count: usize,
    /// The effective configuration of the run.
    pub config: RunConfig,
    pub global_registration: Option<RegistrationResult>,
    pub bundles: Vec<BundleSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationReport>,
}

impl ResultSummary {
    pub fn new(
        result: &ParcellationResult,
        config: &RunConfig,
        evaluation: Option<EvaluationReport>,
    ) -> Self {
        Self {
            format_version: RESULT_FORMAT_VERSION.to_string(),
            subject_count: result.subject_count,
            config: config.clone(),
            global_registration: result.global_registration.clone(),
            bundles: result
                .bundles
                .iter()
                .map(|b| BundleSummary {
                    bundle_id: b.bundle_id.clone(),
                    status: b.status,
                    accepted_count: b.accepted.len(),
                    neighborhood_size: b.neighborhood_size,
                    atlas_neighborhood_size: b.atlas_neighborhood_size,
                    accepted: b.accepted.clone(),
                    accepted_mmea: b.accepted_mmea.clone(),
                    rejections: b.rejections.clone(),
                    registration: b.registration.clone(),
                })
                .collect(),
            evaluation,
        }
    }
}

/// A result directory read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultDirectory {
    pub summary: ResultSummary,
    /// Accepted streamlines per bundle, aligned with `summary.bundles`;
    /// empty for absent bundles.
    pub streamlines: Vec<Vec<ResampledStreamline>>,
}

/// Writes `summary` and the accepted streamlines of `result`. Track files of
/// absent bundles left over from earlier runs are removed.
pub fn write_result(
    result: &ParcellationResult,
    summary: &ResultSummary,
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for b in &result.bundles {
        let path = bundle_track_path(dir, &b.bundle_id);
        match b.status {
            BundleStatus::Recognized => write_resampled_tck(&path, &b.accepted_streamlines)?,
            BundleStatus::Absent => match std::fs::remove_file(&path) {
                Err(e) if e.kind() != std::io::ErrorKind::NotFound => {
                    return Err(Error::io(&path, e))
                }
                _ => {}
            },
        }
    }
    write_json(&dir.join(SUMMARY_FILE), summary)
}

pub fn read_result(dir: impl AsRef<Path>) -> Result<ResultDirectory> {
    let dir = dir.as_ref();
    let summary_path = dir.join(SUMMARY_FILE);
    let summary: ResultSummary = read_json(&summary_path)?;
    if summary.format_version != RESULT_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            path: summary_path,
            expected: RESULT_FORMAT_VERSION.to_string(),
            found: summary.format_version,
        });
    }
    let mut streamlines = Vec::with_capacity(summary.bundles.len());
    for b in &summary.bundles {
        if b.accepted.len() != b.accepted_count {
            return Err(Error::parse(
                &summary_path,
                format!(
                    "bundle '{}' lists {} indices but a count of {}",
                    b.bundle_id,
                    b.accepted.len(),
                    b.accepted_count
                ),
            ));
        }
        if b.status == BundleStatus::Absent {
            streamlines.push(Vec::new());
            continue;
        }
        let path = bundle_track_path(dir, &b.bundle_id);
        let set = read_tck(&path)?
            .into_iter()
            .map(|s| ResampledStreamline::from_points(s.into_points()))
            .collect::<Result<Vec<_>>>()?;
        if set.len() != b.accepted_count {
            return Err(Error::parse(
                &path,
                format!(
                    "{} streamlines on disk, summary records {}",
                    set.len(),
                    b.accepted_count
                ),
            ));
        }
        streamlines.push(set);
    }
    Ok(ResultDirectory {
        summary,
        streamlines,
    })
}
