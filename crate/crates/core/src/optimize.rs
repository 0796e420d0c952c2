//! Deterministic Nelder-Mead simplex minimiser.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop once `f_worst - f_best <= ftol_abs + ftol_rel * |f_best|`.
    pub ftol_abs: f64,
    pub ftol_rel: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 500,
            ftol_abs: 1e-3,
            ftol_rel: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimises `f` starting from `x0` with an axis-aligned initial simplex of
/// the given per-coordinate `steps`. NaN costs are treated as +inf.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(steps.len(), n, "one step per coordinate");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut costs: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; n];
    loop {
        // Stable sort keeps ties in vertex order, so runs are reproducible.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        costs = order.iter().map(|&i| costs[i]).collect();

        let spread = costs[n] - costs[0];
        if spread <= opts.ftol_abs + opts.ftol_rel * costs[0].abs() {
            converged = true;
            break;
        }
        // An iteration costs at most n + 2 evaluations (reflect, contract,
        // then an n-point shrink); never start one that could overrun.
        if evals + n + 2 > opts.max_evals {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(REFLECT, &simplex[n]);
        let fr = eval(&reflected, &mut evals);
        if fr < costs[0] {
            let expanded = along(EXPAND, &simplex[n]);
            let fe = eval(&expanded, &mut evals);
            if fe < fr {
                simplex[n] = expanded;
                costs[n] = fe;
            } else {
                simplex[n] = reflected;
                costs[n] = fr;
            }
            continue;
        }
        if fr < costs[n - 1] {
            simplex[n] = reflected;
            costs[n] = fr;
            continue;
        }
        let contracted = if fr < costs[n] {
            along(CONTRACT, &simplex[n])
        } else {
            along(-CONTRACT, &simplex[n])
        };
        let fc = eval(&contracted, &mut evals);
        if fc < costs[n].min(fr) {
            simplex[n] = contracted;
            costs[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            simplex[i] = best
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + SHRINK * (x - b))
                .collect();
            costs[i] = eval(&simplex[i], &mut evals);
        }
    }

    Minimum {
        x: simplex[0].clone(),
        f: costs[0],
        evals,
        iterations,
        converged,
    }
}
