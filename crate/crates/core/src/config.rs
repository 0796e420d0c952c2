//! Run configuration shared by every pipeline stage.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atlas::{AtlasOptions, ThresholdSource};
use crate::error::{Error, Result};
use crate::features::PerFeature;
use crate::io::read_json;
use crate::metrics::{DEFAULT_NEIGHBOR_MM, DEFAULT_PBE_CUTOFFS};
use crate::parcellation::{LabelOptions, ParcellationOptions};
use crate::registration::{Containment, LsnrOptions, SbrOptions};
use crate::streamline::DEFAULT_K;

/// Every tunable of a run. Missing fields in a config file take the defaults
/// below; unknown fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub resample_k: usize,
    /// Neighborhood radius as a multiple of the bundle radius.
    pub neighborhood_factor: f64,
    pub global_registration: bool,
    pub global_qb_threshold_mm: f64,
    pub local_qb_threshold_mm: f64,
    pub decile_low: f64,
    pub decile_high: f64,
    /// Neighbor threshold for adjacency, coverage and overlap.
    pub ba_threshold_mm: f64,
    pub containment: Containment,
    pub threshold_source: ThresholdSource,
    pub features: PerFeature<bool>,
    pub winner_take_all: bool,
    pub dissimilarity_lower_bound: bool,
    pub pbe_cutoffs: Vec<usize>,
    pub grid_cell_mm: f64,
    pub sbr: SbrOptions,
    /// Overrides the master seed of synthetic scenes when set. The pipeline
    /// itself is deterministic and draws no random numbers.
    pub seed: Option<u64>,
    /// Worker threads; `None` uses all available. Results do not depend on
    /// it, so it is not serialized.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let lsnr = LsnrOptions::default();
        let atlas = AtlasOptions::default();
        let parc = ParcellationOptions::default();
        let label = LabelOptions::default();
        Self {
            resample_k: DEFAULT_K,
            neighborhood_factor: lsnr.neighborhood_factor,
            global_registration: parc.global_registration,
            global_qb_threshold_mm: parc.global_qb_threshold_mm,
            local_qb_threshold_mm: lsnr.qb_threshold_mm,
            decile_low: atlas.decile_low,
            decile_high: atlas.decile_high,
            ba_threshold_mm: DEFAULT_NEIGHBOR_MM,
            containment: lsnr.containment,
            threshold_source: atlas.threshold_source,
            features: label.features,
            winner_take_all: parc.winner_take_all,
            dissimilarity_lower_bound: label.dissimilarity_lower_bound,
            pbe_cutoffs: DEFAULT_PBE_CUTOFFS.to_vec(),
            grid_cell_mm: parc.grid_cell_mm,
            sbr: lsnr.sbr,
            seed: None,
            workers: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let cfg: RunConfig = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resample_k < 3 || self.resample_k.is_multiple_of(2) {
            return Err(invalid(format!(
                "resample_k must be odd and at least 3, got {}",
                self.resample_k
            )));
        }
        let positive = [
            ("neighborhood_factor", self.neighborhood_factor),
            ("global_qb_threshold_mm", self.global_qb_threshold_mm),
            ("local_qb_threshold_mm", self.local_qb_threshold_mm),
            ("ba_threshold_mm", self.ba_threshold_mm),
            ("grid_cell_mm", self.grid_cell_mm),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0 < self.decile_low && self.decile_low < self.decile_high && self.decile_high < 1.0)
        {
            return Err(invalid(format!(
                "deciles must satisfy 0 < low < high < 1, got {} and {}",
                self.decile_low, self.decile_high
            )));
        }
        if !self.features.iter().any(|(_, &on)| on) {
            return Err(invalid("at least one feature must be enabled"));
        }
        if self.pbe_cutoffs.is_empty() {
            return Err(invalid("pbe_cutoffs must not be empty"));
        }
        if self.sbr.stages.is_empty() {
            return Err(invalid("sbr.stages must not be empty"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be at least 1"));
        }
        Ok(())
    }

    pub fn atlas_options(&self) -> AtlasOptions {
        AtlasOptions {
            decile_low: self.decile_low,
            decile_high: self.decile_high,
            threshold_source: self.threshold_source,
        }
    }

    pub fn parcellation_options(&self) -> ParcellationOptions {
        ParcellationOptions {
            global_registration: self.global_registration,
            global_qb_threshold_mm: self.global_qb_threshold_mm,
            lsnr: LsnrOptions {
                neighborhood_factor: self.neighborhood_factor,
                containment: self.containment,
                qb_threshold_mm: self.local_qb_threshold_mm,
                sbr: self.sbr.clone(),
            },
            label: LabelOptions {
                features: self.features.clone(),
                dissimilarity_lower_bound: self.dissimilarity_lower_bound,
            },
            winner_take_all: self.winner_take_all,
            grid_cell_mm: self.grid_cell_mm,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_option_defaults() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.atlas_options(), AtlasOptions::default());
        assert_eq!(cfg.parcellation_options(), ParcellationOptions::default());
        assert_eq!(cfg.neighborhood_factor, 6.0);
        assert_eq!((cfg.decile_low, cfg.decile_high), (0.1, 0.9));
        assert_eq!(cfg.ba_threshold_mm, 5.0);
        assert_eq!(cfg.pbe_cutoffs, vec![1, 10]);
    }

    #[test]
    fn partial_json_fills_defaults_and_round_trips() {
        let cfg: RunConfig = serde_json::from_str(r#"{"winner_take_all": true}"#).unwrap();
        assert!(cfg.winner_take_all);
        assert_eq!(cfg.resample_k, 21);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(!text.contains("workers"));
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
        assert!(serde_json::from_str::<RunConfig>(r#"{"resample": 21}"#).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            RunConfig {
                resample_k: 20,
                ..Default::default()
            },
            RunConfig {
                decile_low: 0.9,
                decile_high: 0.1,
                ..Default::default()
            },
            RunConfig {
                ba_threshold_mm: 0.0,
                ..Default::default()
            },
            RunConfig {
                features: PerFeature::from_fn(|_| false),
                ..Default::default()
            },
            RunConfig {
                workers: Some(0),
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
