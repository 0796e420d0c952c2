//! Parametric distributions, maximum-likelihood fits and model selection.

mod distribution;
mod fit;

pub use distribution::{Distribution, Family, FittedDistribution, QUANTILE_TOL};
pub use fit::{
    bin_count, empirical_quantile, empirical_quantile_sorted, fit_family, histogram_sse,
    select_best, FitError, Selection, BETA_MARGIN, FIT_MAX_EVALS, MAX_SHAPE, MIN_FIT_SAMPLES,
    SIGMA_FLOOR, ZERO_SHIFT,
};
