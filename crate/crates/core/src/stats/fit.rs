//! Maximum-likelihood fitting of the candidate families and histogram-SSE
//! model selection.

use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use super::distribution::{Distribution, Family, FittedDistribution};
use crate::optimize::{nelder_mead, NelderMeadOptions};

pub const MIN_FIT_SAMPLES: usize = 8;
/// Lower bound on fitted spread parameters.
pub const SIGMA_FLOOR: f64 = 1e-6;
/// Added to samples before positive-support fits when a sample is zero.
pub const ZERO_SHIFT: f64 = 1e-6;
/// Beta support margin beyond the sample range.
pub const BETA_MARGIN: f64 = 1e-6;
pub const FIT_MAX_EVALS: usize = 300;
/// Gamma and beta shape parameters beyond this count as divergence; the
/// family has then collapsed to a near-normal spike and is slow to evaluate.
pub const MAX_SHAPE: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {MIN_FIT_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("samples contain non-finite values")]
    NonFinite,
    #[error("samples outside the support of the {} family", .0.name())]
    OutOfSupport(Family),
    #[error("{} fit did not produce valid parameters", .0.name())]
    Diverged(Family),
}

/// Sample summaries sufficient for every likelihood used here.
struct Summary {
    mean: f64,
    var: f64,
    mean_ln: f64,
    var_ln: f64,
}

fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let (mean_ln, var_ln) = if xs.iter().all(|&x| x > 0.0) {
        let m = xs.iter().map(|x| x.ln()).sum::<f64>() / n;
        let v = xs.iter().map(|x| (x.ln() - m).powi(2)).sum::<f64>() / n;
        (m, v)
    } else {
        (f64::NAN, f64::NAN)
    };
    Summary {
        mean,
        var,
        mean_ln,
        var_ln,
    }
}

fn fit_opts() -> NelderMeadOptions {
    NelderMeadOptions {
        max_evals: FIT_MAX_EVALS,
        ftol_abs: 1e-12,
        ftol_rel: 1e-12,
    }
}

fn fit_gamma(xs: &[f64]) -> Distribution {
    let s = summarize(xs);
    // Closed-form approximation to the MLE shape, refined numerically.
    let g = (s.mean.ln() - s.mean_ln).max(1e-12);
    let k0 = (3.0 - g + ((g - 3.0).powi(2) + 24.0 * g).sqrt()) / (12.0 * g);
    let nll = |p: &[f64]| {
        let (k, theta) = (p[0].exp(), p[1].exp());
        -((k - 1.0) * s.mean_ln - s.mean / theta - k * theta.ln() - ln_gamma(k))
    };
    let x0 = [k0.ln(), (s.mean / k0).ln()];
    let m = nelder_mead(nll, &x0, &[0.1, 0.1], &fit_opts());
    let best = if m.f <= nll(&x0) { m.x } else { x0.to_vec() };
    Distribution::Gamma {
        shape: best[0].exp(),
        scale: best[1].exp().max(SIGMA_FLOOR),
    }
}

fn fit_beta(xs: &[f64]) -> Distribution {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min) - BETA_MARGIN;
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + BETA_MARGIN;
    let w = hi - lo;
    let n = xs.len() as f64;
    let (mut su, mut su2, mut sl, mut sl1) = (0.0, 0.0, 0.0, 0.0);
    for &x in xs {
        let u = (x - lo) / w;
        su += u;
        su2 += u * u;
        sl += u.ln();
        sl1 += (1.0 - u).ln();
    }
    let (mu, ml, ml1) = (su / n, sl / n, sl1 / n);
    let var = (su2 / n - mu * mu).max(1e-12);
    let common = (mu * (1.0 - mu) / var - 1.0).max(1e-3);
    let (a0, b0) = (mu * common, (1.0 - mu) * common);
    let nll = |p: &[f64]| {
        let (a, b) = (p[0].exp(), p[1].exp());
        -((a - 1.0) * ml + (b - 1.0) * ml1 - ln_beta(a, b))
    };
    let x0 = [a0.ln(), b0.ln()];
    let m = nelder_mead(nll, &x0, &[0.1, 0.1], &fit_opts());
    let best = if m.f <= nll(&x0) { m.x } else { x0.to_vec() };
    Distribution::Beta {
        alpha: best[0].exp(),
        beta: best[1].exp(),
        lo,
        hi,
    }
}

fn quartiles(xs: &[f64]) -> (f64, f64, f64) {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    (
        empirical_quantile_sorted(&v, 0.25),
        empirical_quantile_sorted(&v, 0.5),
        empirical_quantile_sorted(&v, 0.75),
    )
}

fn fit_burr(xs: &[f64]) -> Distribution {
    // Log-logistic (k = 1) start: median gives lambda, IQR gives c.
    let (q1, q2, q3) = quartiles(xs);
    let c0 = if q3 > q1 && q1 > 0.0 {
        (2.0 * 3f64.ln() / (q3 / q1).ln()).clamp(0.05, 1e3)
    } else {
        1.0
    };
    let lam0 = q2.max(SIGMA_FLOOR);
    let n = xs.len() as f64;
    let lns: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let mean_ln = lns.iter().sum::<f64>() / n;
    let nll = |p: &[f64]| {
        let (c, k, ll) = (p[0].exp(), p[1].exp(), p[2]);
        let tail: f64 = lns
            .iter()
            .map(|l| (c * (l - ll)).exp().ln_1p())
            .sum::<f64>()
            / n;
        -(c.ln() + k.ln() - ll + (c - 1.0) * (mean_ln - ll) - (k + 1.0) * tail)
    };
    let x0 = [c0.ln(), 0.0, lam0.ln()];
    let m = nelder_mead(&nll, &x0, &[0.1, 0.1, 0.1], &fit_opts());
    let best = if m.f <= nll(&x0) { m.x } else { x0.to_vec() };
    Distribution::Burr {
        c: best[0].exp(),
        k: best[1].exp(),
        lambda: best[2].exp(),
    }
}

/// Maximum-likelihood fit of one family.
pub fn fit_family(samples: &[f64], family: Family) -> Result<FittedDistribution, FitError> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(FitError::TooFewSamples(samples.len()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if family.positive_support() {
        if min < 0.0 {
            return Err(FitError::OutOfSupport(family));
        }
        if min == 0.0 {
            ZERO_SHIFT
        } else {
            0.0
        }
    } else {
        0.0
    };
    let shifted: Vec<f64>;
    let xs = if shift != 0.0 {
        shifted = samples.iter().map(|x| x + shift).collect();
        &shifted[..]
    } else {
        samples
    };

    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let numeric = matches!(family, Family::Gamma | Family::Beta | Family::Burr);
    if numeric && !(max > min) {
        // No likelihood maximum exists for zero-range samples.
        return Err(FitError::Diverged(family));
    }

    let dist = match family {
        Family::Normal => {
            let s = summarize(xs);
            Distribution::Normal {
                mu: s.mean,
                sigma: s.var.sqrt().max(SIGMA_FLOOR),
            }
        }
        Family::LogNormal => {
            let s = summarize(xs);
            Distribution::LogNormal {
                mu: s.mean_ln,
                sigma: s.var_ln.sqrt().max(SIGMA_FLOOR),
            }
        }
        Family::Gamma => fit_gamma(xs),
        Family::Beta => fit_beta(xs),
        Family::Burr => fit_burr(xs),
    };
    let extreme = match dist {
        Distribution::Gamma { shape, .. } => shape > MAX_SHAPE,
        Distribution::Beta { alpha, beta, .. } => alpha > MAX_SHAPE || beta > MAX_SHAPE,
        _ => false,
    };
    if !dist.is_valid() || extreme {
        return Err(FitError::Diverged(family));
    }
    let mut fit = FittedDistribution {
        dist,
        shift,
        sse: None,
    };
    let (q_lo, q_hi) = (fit.quantile(0.1), fit.quantile(0.9));
    if !(q_lo.is_finite() && q_hi.is_finite() && q_lo < q_hi) {
        return Err(FitError::Diverged(family));
    }
    fit.sse = histogram_sse(samples, &fit);
    if fit.sse.is_some_and(|s| !s.is_finite()) {
        return Err(FitError::Diverged(family));
    }
    Ok(fit)
}

/// Number of histogram bins used for SSE scoring.
pub fn bin_count(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(10)
}

/// Sum over equal-width bins on `[min, max]` of the squared difference
/// between the empirical density and the fitted pdf at the bin center.
/// `None` when the samples have zero range.
pub fn histogram_sse(samples: &[f64], fit: &FittedDistribution) -> Option<f64> {
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return None;
    }
    let bins = bin_count(samples.len());
    let width = (max - min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let b = (((x - min) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = samples.len() as f64;
    Some(
        counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let center = min + (i as f64 + 0.5) * width;
                (c as f64 / (n * width) - fit.pdf(center)).powi(2)
            })
            .sum(),
    )
}

/// All five fits and the selected one.
#[derive(Clone, Debug)]
pub struct Selection {
    /// Smallest-SSE available fit; `None` when no fit is usable.
    pub best: Option<FittedDistribution>,
    pub candidates: Vec<(Family, Result<FittedDistribution, FitError>)>,
}

/// Fits every family and keeps the one with the smallest histogram SSE.
/// Ties go to the earlier family in [`Family::ALL`].
pub fn select_best(samples: &[f64]) -> Result<Selection, FitError> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(FitError::TooFewSamples(samples.len()));
    }
    let candidates: Vec<_> = Family::ALL
        .iter()
        .map(|&f| (f, fit_family(samples, f)))
        .collect();
    let mut best: Option<FittedDistribution> = None;
    for (_, fit) in &candidates {
        if let Ok(fit) = fit {
            let Some(sse) = fit.sse else { continue };
            if best.is_none_or(|b| sse < b.sse.unwrap()) {
                best = Some(*fit);
            }
        }
    }
    Ok(Selection { best, candidates })
}

/// Linear-interpolation quantile of sorted samples (the common "type 7").
pub fn empirical_quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn empirical_quantile(samples: &[f64], p: f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    empirical_quantile_sorted(&v, p)
}
