use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::{erf_inv, erfc};
use statrs::function::gamma::{gamma_lr, ln_gamma};

/// Candidate parametric families, in tie-breaking order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    #[serde(rename = "lognormal")]
    LogNormal,
    Gamma,
    Beta,
    Burr,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Normal,
        Family::LogNormal,
        Family::Gamma,
        Family::Beta,
        Family::Burr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::LogNormal => "lognormal",
            Family::Gamma => "gamma",
            Family::Beta => "beta",
            Family::Burr => "burr",
        }
    }

    /// Families defined only for strictly positive values.
    pub fn positive_support(self) -> bool {
        matches!(self, Family::LogNormal | Family::Gamma | Family::Burr)
    }
}

/// A fully parameterised distribution.
///
/// `Beta` lives on `[lo, hi]`; `Burr` is the type XII distribution with CDF
/// `1 - (1 + (x/lambda)^c)^-k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Distribution {
    Normal {
        mu: f64,
        sigma: f64,
    },
    #[serde(rename = "lognormal")]
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
        lo: f64,
        hi: f64,
    },
    Burr {
        c: f64,
        k: f64,
        lambda: f64,
    },
}

const SQRT_2PI: f64 = 2.506_628_274_631_000_2;
/// Absolute tolerance of bisection quantiles.
pub const QUANTILE_TOL: f64 = 1e-8;

fn std_normal_quantile(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0)
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn bisect(cdf: impl Fn(f64) -> f64, p: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..400 {
        if hi - lo <= QUANTILE_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl Distribution {
    pub fn family(&self) -> Family {
        match self {
            Distribution::Normal { .. } => Family::Normal,
            Distribution::LogNormal { .. } => Family::LogNormal,
            Distribution::Gamma { .. } => Family::Gamma,
            Distribution::Beta { .. } => Family::Beta,
            Distribution::Burr { .. } => Family::Burr,
        }
    }

    /// Whether every parameter is finite and in range.
    pub fn is_valid(&self) -> bool {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Distribution::Normal { mu, sigma } | Distribution::LogNormal { mu, sigma } => {
                mu.is_finite() && pos(sigma)
            }
            Distribution::Gamma { shape, scale } => pos(shape) && pos(scale),
            Distribution::Beta {
                alpha,
                beta,
                lo,
                hi,
            } => pos(alpha) && pos(beta) && lo.is_finite() && hi.is_finite() && hi > lo,
            Distribution::Burr { c, k, lambda } => pos(c) && pos(k) && pos(lambda),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * SQRT_2PI)
            }
            Distribution::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let z = (x.ln() - mu) / sigma;
                (-0.5 * z * z).exp() / (x * sigma * SQRT_2PI)
            }
            Distribution::Gamma { shape, scale } => {
                if x <= 0.0 {
                    return 0.0;
                }
                ((shape - 1.0) * x.ln() - x / scale - shape * scale.ln() - ln_gamma(shape)).exp()
            }
            Distribution::Beta {
                alpha,
                beta,
                lo,
                hi,
            } => {
                if x <= lo || x >= hi {
                    return 0.0;
                }
                let w = hi - lo;
                let u = (x - lo) / w;
                ((alpha - 1.0) * u.ln() + (beta - 1.0) * (1.0 - u).ln() - ln_beta(alpha, beta))
                    .exp()
                    / w
            }
            Distribution::Burr { c, k, lambda } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let lz = (x / lambda).ln();
                let zc = (c * lz).exp();
                (c.ln() + k.ln() - lambda.ln() + (c - 1.0) * lz - (k + 1.0) * zc.ln_1p()).exp()
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Normal { mu, sigma } => std_normal_cdf((x - mu) / sigma),
            Distribution::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - mu) / sigma)
                }
            }
            Distribution::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, x / scale)
                }
            }
            Distribution::Beta {
                alpha,
                beta,
                lo,
                hi,
            } => {
                if x <= lo {
                    0.0
                } else if x >= hi {
                    1.0
                } else {
                    beta_reg(alpha, beta, (x - lo) / (hi - lo))
                }
            }
            Distribution::Burr { c, k, lambda } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let zc = (c * (x / lambda).ln()).exp();
                    -(-k * zc.ln_1p()).exp_m1()
                }
            }
        }
    }

    /// Inverse CDF. Closed form for normal, log-normal and Burr; bisection on
    /// the CDF for gamma and beta.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Distribution::Normal { mu, sigma } => mu + sigma * std_normal_quantile(p),
            Distribution::LogNormal { mu, sigma } => (mu + sigma * std_normal_quantile(p)).exp(),
            Distribution::Burr { c, k, lambda } => {
                // (1 - p)^(-1/k) - 1, stable for large k
                lambda * (-(-p).ln_1p() / k).exp_m1().powf(1.0 / c)
            }
            Distribution::Gamma { shape, scale } => {
                let mut hi = (shape * scale).max(QUANTILE_TOL);
                while self.cdf(hi) < p && hi.is_finite() {
                    hi *= 2.0;
                }
                bisect(|x| self.cdf(x), p, 0.0, hi)
            }
            Distribution::Beta { lo, hi, .. } => bisect(|x| self.cdf(x), p, lo, hi),
        }
    }

    /// Bisection inverse for any family; used to cross-check closed forms.
    pub fn quantile_by_bisection(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = match *self {
            Distribution::Beta { lo, hi, .. } => (lo, hi),
            Distribution::Normal { mu, sigma } => (mu - 40.0 * sigma, mu + 40.0 * sigma),
            _ => (0.0, 1.0),
        };
        while self.cdf(hi) < p && hi.is_finite() {
            hi *= 2.0;
        }
        while self.cdf(lo) > p {
            lo -= (hi - lo).max(1.0);
        }
        bisect(|x| self.cdf(x), p, lo, hi)
    }
}

/// A distribution fitted to feature samples.
///
/// The fitted variable is `x + shift`; a non-zero shift is used when
/// positive-support families meet samples equal to zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedDistribution {
    #[serde(flatten)]
    pub dist: Distribution,
    pub shift: f64,
    /// Histogram sum of squared errors; `None` when undefined (zero range).
    pub sse: Option<f64>,
}

impl FittedDistribution {
    pub fn family(&self) -> Family {
        self.dist.family()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.dist.pdf(x + self.shift)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.dist.cdf(x + self.shift)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.dist.quantile(p) - self.shift
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Trapezoid integral of the pdf over `[a, b]` with `n` panels.
    fn integrate(d: &Distribution, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (d.pdf(a) + d.pdf(b));
        for i in 1..n {
            s += d.pdf(a + i as f64 * h);
        }
        s * h
    }

    fn all_examples() -> Vec<(Distribution, f64, f64)> {
        vec![
            (
                Distribution::Normal {
                    mu: 5.0,
                    sigma: 2.0,
                },
                -20.0,
                30.0,
            ),
            (
                Distribution::LogNormal {
                    mu: 1.0,
                    sigma: 0.4,
                },
                1e-9,
                60.0,
            ),
            (
                Distribution::Gamma {
                    shape: 2.0,
                    scale: 3.0,
                },
                1e-12,
                150.0,
            ),
            (
                Distribution::Beta {
                    alpha: 2.5,
                    beta: 4.0,
                    lo: 3.0,
                    hi: 9.0,
                },
                3.0,
                9.0,
            ),
            (
                Distribution::Burr {
                    c: 3.0,
                    k: 2.0,
                    lambda: 10.0,
                },
                1e-12,
                400.0,
            ),
        ]
    }

    #[test]
    fn pdfs_integrate_to_one() {
        for (d, a, b) in all_examples() {
            let mass = integrate(&d, a, b, 200_000);
            assert!((mass - 1.0).abs() < 1e-3, "{:?}: {mass}", d);
        }
    }

    #[test]
    fn cdf_matches_integrated_pdf() {
        for (d, a, b) in all_examples() {
            let x = a + 0.3 * (b - a) * 0.2;
            assert_abs_diff_eq!(d.cdf(x), integrate(&d, a, x, 100_000), epsilon = 1e-4);
        }
    }

    #[test]
    fn quantile_examples() {
        let burr = Distribution::Burr {
            c: 1.0,
            k: 1.0,
            lambda: 1.0,
        };
        assert_abs_diff_eq!(burr.quantile(0.5), 1.0, epsilon = 1e-15);
        let n = Distribution::Normal {
            mu: 0.0,
            sigma: 1.0,
        };
        assert_abs_diff_eq!(n.quantile(0.5), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(n.quantile(0.975), 1.959_963_984_540_054, epsilon = 1e-12);
    }

    #[test]
    fn burr_near_weibull_limit_is_stable() {
        let d = Distribution::Burr {
            c: 1.09,
            k: 1.1e17,
            lambda: 9.0e16,
        };
        let (q1, q9) = (d.quantile(0.1), d.quantile(0.9));
        assert!(q1 > 0.0 && q9 > q1);
        assert_abs_diff_eq!(d.cdf(q1), 0.1, epsilon = 1e-9);
        assert_abs_diff_eq!(d.cdf(q9), 0.9, epsilon = 1e-9);
    }

    #[test]
    fn quantiles_are_monotone_and_invert_cdf() {
        for (d, _, _) in all_examples() {
            let mut last = f64::NEG_INFINITY;
            for i in 1..100 {
                let p = i as f64 / 100.0;
                let q = d.quantile(p);
                assert!(q > last, "{:?} not monotone at {p}", d);
                last = q;
                assert_abs_diff_eq!(d.cdf(q), p, epsilon = 1e-7);
            }
            assert!(d.quantile(0.1) < d.quantile(0.9));
        }
    }

    #[test]
    fn serde_uses_family_tag() {
        let f = FittedDistribution {
            dist: Distribution::Gamma {
                shape: 2.0,
                scale: 3.0,
            },
            shift: 0.0,
            sse: Some(0.5),
        };
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"family":"gamma","shape":2.0,"scale":3.0,"shift":0.0,"sse":0.5}"#
        );
        assert_eq!(serde_json::from_str::<FittedDistribution>(&s).unwrap(), f);
        let bad = s.replace("gamma", "weibull");
        assert!(serde_json::from_str::<FittedDistribution>(&bad).is_err());
    }
}
