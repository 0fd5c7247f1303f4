//! Conditional maximum likelihood for the truncation model.
//!
//! Given `X = x`, an observed `Y` has density `g(y) / Gbar(x)` on `[x, inf)`,
//! so the conditional log-likelihood is `sum_i ln g(y_i) - ln Gbar(x_i)`.
//! It is maximised by Nelder–Mead on log-parameters, which keeps every
//! iterate in the positive orthant.

use crate::distributions::{Family, ParametricModel};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::sampling::TruncatedSample;
use crate::{Error, Result};

pub const MIN_SAMPLE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct CmleFit {
    pub family: Family,
    pub theta_hat: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    /// Simplex iterations of the winning start.
    pub iterations: usize,
    /// Likelihood evaluations over all starts.
    pub evaluations: usize,
    pub n_restarts_used: usize,
}

impl CmleFit {
    pub fn model(&self) -> Result<ParametricModel> {
        ParametricModel::from_params(self.family, &self.theta_hat)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CmleOptions {
    /// Starts per axis of the log-spaced grid over `[grid_lo, grid_hi]`.
    pub grid_starts: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub simplex: NelderMeadOptions,
}

impl Default for CmleOptions {
    fn default() -> Self {
        Self {
            grid_starts: 5,
            grid_lo: 0.1,
            grid_hi: 10.0,
            simplex: NelderMeadOptions {
                diameter_tol: 1e-8,
                max_evals: 10_000,
                initial_step: 0.5,
            },
        }
    }
}

/// `sum_i [ln g(y_i) - ln Gbar(x_i)]`; `-inf` when `theta` is infeasible or
/// any term is not finite.
pub fn conditional_log_likelihood(theta: &[f64], family: Family, sample: &TruncatedSample) -> f64 {
    let Ok(model) = ParametricModel::from_params(family, theta) else {
        return f64::NEG_INFINITY;
    };
    let mut total = 0.0;
    for &(x, y) in sample.pairs() {
        let term = model.ln_density(y) - model.ln_survival(x);
        if !term.is_finite() {
            return f64::NEG_INFINITY;
        }
        total += term;
    }
    total
}

/// Deterministic multistart points: log-spaced in 1-D; centre plus the
/// four corners of the box in 2-D (`grid_starts` is then fixed at 5).
fn start_grid(dim: usize, opts: &CmleOptions) -> Vec<Vec<f64>> {
    let (lo, hi) = (opts.grid_lo.ln(), opts.grid_hi.ln());
    let m = opts.grid_starts.max(1);
    match dim {
        1 => (0..m)
            .map(|i| {
                let t = if m == 1 {
                    0.5
                } else {
                    i as f64 / (m - 1) as f64
                };
                vec![lo + t * (hi - lo)]
            })
            .collect(),
        _ => {
            let mid = 0.5 * (lo + hi);
            let mut pts = vec![vec![mid; dim]];
            if m > 1 {
                for corner in 0..(1usize << dim) {
                    pts.push(
                        (0..dim)
                            .map(|j| if corner >> j & 1 == 1 { hi } else { lo })
                            .collect(),
                    );
                }
            }
            pts
        }
    }
}

/// Maximise the conditional likelihood. With `init` a single start is used;
/// otherwise the deterministic grid. Ties between starts go to the earliest.
pub fn fit_cmle(
    sample: &TruncatedSample,
    family: Family,
    init: Option<&[f64]>,
    opts: &CmleOptions,
) -> Result<CmleFit> {
    if sample.n() < MIN_SAMPLE {
        return Err(Error::Validation(format!(
            "CMLE needs at least {MIN_SAMPLE} pairs, got {}",
            sample.n()
        )));
    }
    let starts: Vec<Vec<f64>> = match init {
        Some(theta) => {
            if theta.len() != family.dim() || theta.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "initial value {theta:?} is not a positive {}-vector",
                    family.dim()
                )));
            }
            vec![theta.iter().map(|v| v.ln()).collect()]
        }
        None => start_grid(family.dim(), opts),
    };

    let objective = |log_theta: &[f64]| {
        let theta: Vec<f64> = log_theta.iter().map(|v| v.exp()).collect();
        -conditional_log_likelihood(&theta, family, sample)
    };

    let mut best: Option<(Vec<f64>, f64, bool, usize)> = None;
    let mut evaluations = 0;
    for start in &starts {
        let m = nelder_mead(objective, start, opts.simplex);
        evaluations += m.evals;
        if !m.value.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| m.value < b.1) {
            best = Some((m.x, m.value, m.converged, m.iterations));
        }
    }
    let Some((log_theta, neg_ll, converged, iterations)) = best else {
        return Err(Error::Numerical(format!(
            "every CMLE start is infeasible for the {} family",
            family.name()
        )));
    };
    Ok(CmleFit {
        family,
        theta_hat: log_theta.iter().map(|v| v.exp()).collect(),
        log_likelihood: -neg_ll,
        converged,
        iterations,
        evaluations,
        n_restarts_used: starts.len(),
    })
}
