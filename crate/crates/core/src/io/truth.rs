//! Ground-truth label files: one bundle id or `"outlier"` per subject
//! streamline.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::error::{Error, Result};
use crate::synth::OUTLIER_LABEL;

pub const TRUTH_FORMAT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub format_version: String,
    pub count: usize,
    pub labels: Vec<String>,
}

impl GroundTruth {
    pub fn from_labels(labels: &[Option<String>]) -> Self {
        Self {
            format_version: TRUTH_FORMAT_VERSION.to_string(),
            count: labels.len(),
            labels: labels
                .iter()
                .map(|l| l.clone().unwrap_or_else(|| OUTLIER_LABEL.to_string()))
                .collect(),
        }
    }

    /// Bundle of streamline `i`; `None` for outliers.
    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels
            .get(i)
            .map(String::as_str)
            .filter(|l| *l != OUTLIER_LABEL)
    }

    /// Subject indices labeled `bundle_id`.
    pub fn members(&self, bundle_id: &str) -> BTreeSet<usize> {
        (0..self.labels.len())
            .filter(|&i| self.label(i) == Some(bundle_id))
            .collect()
    }

    fn validate(&self, path: &Path) -> Result<()> {
        if self.format_version != TRUTH_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                path: path.to_path_buf(),
                expected: TRUTH_FORMAT_VERSION.to_string(),
                found: self.format_version.clone(),
            });
        }
        if self.count != self.labels.len() {
            return Err(Error::parse(
                path,
                format!("count {} but {} labels", self.count, self.labels.len()),
            ));
        }
        Ok(())
    }
}

pub fn write_truth(truth: &GroundTruth, path: impl AsRef<Path>) -> Result<()> {
    write_json(path.as_ref(), truth)
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let truth: GroundTruth = read_json(path)?;
    truth.validate(path)?;
    Ok(truth)
}
