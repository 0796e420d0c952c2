//! Atlas-based parcellation of superficial white matter streamlines.
//!
//! Streamlines are resampled to a fixed number of points, compared with
//! direct/flipped distances and six geometric features, and labelled by
//! per-bundle threshold intervals derived from fitted feature distributions.

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod cluster;
pub mod config;
pub mod distance;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod features;
pub mod io;
pub mod metrics;
pub mod optimize;
pub mod parcellation;
pub mod registration;
pub mod stats;
pub mod streamline;
pub mod synth;

pub use error::{Error, Result};
