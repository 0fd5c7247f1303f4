//! Choosing the sample fraction, extrapolating high quantiles, and the AIDS
//! induction-time transforms.

use crate::cmle::{fit_cmle, CmleOptions};
use crate::distributions::{Family, ParametricModel};
use crate::fit::TailFit;
use crate::sampling::TruncatedSample;
use crate::semiparam::{gamma1_semi_from_cdf, SemiparamCdf};
use crate::{Error, Result};

pub const DEFAULT_THETA_EXPONENT: f64 = 0.3;
pub const DEFAULT_K_MAX: usize = 120;
/// Shift keeping `1/(8 - t + eps)` and `1/(m + eps)` finite.
pub const DEFAULT_AIDS_EPSILON: f64 = 0.05;
/// Shift used when mapping an extrapolated `X`-quantile back to years.
pub const DEFAULT_END_EPSILON: f64 = 0.01;
/// Length of the study window in years.
pub const AIDS_WINDOW: f64 = 8.0;

/// Outcome of the Thomas–Reiss search.
#[derive(Debug, Clone, PartialEq)]
pub struct KStarResult {
    pub k_star: usize,
    /// `objective[j]` belongs to `k = k_min + j`.
    pub objective: Vec<f64>,
    pub k_min: usize,
    pub theta_exponent: f64,
    /// `gamma_curve[i - 1]` is the estimate at sample fraction `i`.
    pub gamma_curve: Vec<f64>,
}

impl KStarResult {
    pub fn objective_at(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.k_min)
            .and_then(|j| self.objective.get(j).copied())
    }
}

/// Thomas–Reiss choice of `k` over `k = 2..=curve.len()`.
///
/// `curve[i - 1]` is the estimate at sample fraction `i`, starting at `i = 1`.
pub fn thomas_reiss_kstar(curve: &[f64], theta_exponent: f64) -> Result<KStarResult> {
    thomas_reiss_kstar_from(curve, theta_exponent, 2)
}

/// As [`thomas_reiss_kstar`] with the argmin restricted to `k >= k_min`.
///
/// The objective at `k` is `k^{-1} sum_{i<=k} i^theta |g(i) - median(g(1..=k))|`;
/// ties go to the smallest `k`.
pub fn thomas_reiss_kstar_from(
    curve: &[f64],
    theta_exponent: f64,
    k_min: usize,
) -> Result<KStarResult> {
    if curve.len() < 2 {
        return Err(Error::Domain(format!(
            "curve needs at least 2 entries, got {}",
            curve.len()
        )));
    }
    if !(0.0..=0.5).contains(&theta_exponent) {
        return Err(Error::Domain(format!(
            "theta exponent must lie in [0, 1/2], got {theta_exponent}"
        )));
    }
    if let Some(i) = curve.iter().position(|g| !g.is_finite()) {
        return Err(Error::Undefined(format!(
            "estimate at k={} is not finite",
            i + 1
        )));
    }
    let k_min = k_min.max(2);
    if k_min > curve.len() {
        return Err(Error::Domain(format!(
            "k_min = {k_min} exceeds curve length {}",
            curve.len()
        )));
    }

    let weights: Vec<f64> = (1..=curve.len())
        .map(|i| (i as f64).powf(theta_exponent))
        .collect();
    let mut sorted: Vec<f64> = Vec::with_capacity(curve.len());
    let mut objective = Vec::with_capacity(curve.len() + 1 - k_min);
    for (k, &g) in (1..).zip(curve) {
        let at = sorted.partition_point(|&v| v < g);
        sorted.insert(at, g);
        if k < k_min {
            continue;
        }
        let med = median_of_sorted(&sorted);
        let s: f64 = curve[..k]
            .iter()
            .zip(&weights)
            .map(|(g, w)| w * (g - med).abs())
            .sum();
        objective.push(s / k as f64);
    }
    let mut best = 0;
    for (j, &v) in objective.iter().enumerate() {
        if v < objective[best] {
            best = j;
        }
    }
    Ok(KStarResult {
        k_star: k_min + best,
        objective,
        k_min,
        theta_exponent,
        gamma_curve: curve.to_vec(),
    })
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// `threshold (v / tail_fraction)^(-gamma)` without range checks.
pub fn weissman_extrapolate(threshold: f64, tail_fraction: f64, gamma: f64, v: f64) -> f64 {
    threshold * (v / tail_fraction).powf(-gamma)
}

/// Weissman estimate of the `(1 - v)`-quantile of `X`, using `Fbar_n` of the
/// semiparametric CDF at the fit's threshold.
pub fn weissman_quantile(cdf: &SemiparamCdf, fit: &TailFit, v: f64) -> Result<f64> {
    if !(fit.gamma1_hat > 0.0) {
        return Err(Error::Domain(format!(
            "gamma1 must be > 0, got {}",
            fit.gamma1_hat
        )));
    }
    let tail = cdf.survival(fit.threshold);
    if !(v > 0.0 && v < tail) {
        return Err(Error::Domain(format!(
            "v must lie in (0, Fbar_n(threshold)) = (0, {tail}); got {v}"
        )));
    }
    Ok(weissman_extrapolate(fit.threshold, tail, fit.gamma1_hat, v))
}

/// One patient: infection time `m` and induction time `t`, in years.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AidsRecord {
    pub infection: f64,
    pub induction: f64,
}

const WINDOW_TOL: f64 = 1e-9;

/// `x = 1 / (8 - t + eps)`, `y = 1 / (m + eps)`.
///
/// Records with `m + t > 8` fall outside the study window and are rejected
/// with their 1-based positions.
pub fn aids_transform(records: &[AidsRecord], epsilon: f64) -> Result<TruncatedSample> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    let bad: Vec<String> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            !(r.infection >= 0.0
                && r.induction >= 0.0
                && r.induction <= AIDS_WINDOW
                && r.infection + r.induction <= AIDS_WINDOW + WINDOW_TOL)
        })
        .map(|(i, _)| (i + 1).to_string())
        .collect();
    if !bad.is_empty() {
        return Err(Error::Validation(format!(
            "records need m, t >= 0 and m + t <= {AIDS_WINDOW}; offending rows: {}",
            bad.join(", ")
        )));
    }
    let pairs = records
        .iter()
        .map(|r| {
            let x = 1.0 / (AIDS_WINDOW - r.induction + epsilon);
            let y = 1.0 / (r.infection + epsilon);
            // m + t = 8 gives x = y up to rounding
            (x.min(y), y)
        })
        .collect();
    TruncatedSample::new(pairs)
}

/// Map an extrapolated `X`-quantile back to induction time: `1/q - 8 + eps`.
pub fn end_time(q_v: f64, epsilon: f64) -> f64 {
    1.0 / q_v - AIDS_WINDOW + epsilon
}

#[derive(Debug, Clone)]
pub struct AidsOptions {
    /// Truncation parameters `(a, r)`; fitted by CMLE when absent.
    pub theta: Option<Vec<f64>>,
    pub theta_exponent: f64,
    pub k_max: usize,
    /// Tail probability for the quantile; `1 / (2n)` when absent.
    pub v: Option<f64>,
    pub epsilon_end: f64,
}

impl Default for AidsOptions {
    fn default() -> Self {
        Self {
            theta: None,
            theta_exponent: DEFAULT_THETA_EXPONENT,
            k_max: DEFAULT_K_MAX,
            v: None,
            epsilon_end: DEFAULT_END_EPSILON,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AidsReport {
    pub n: usize,
    pub theta_hat: Vec<f64>,
    pub k_star: usize,
    pub threshold: f64,
    pub gamma1_hat: f64,
    /// `Fbar_n(X_{n-k*:n})`.
    pub tail_fraction: f64,
    pub v: f64,
    /// Weissman estimate; `None` when `v` is not below the tail fraction.
    pub q_v: Option<f64>,
    pub t_end: Option<f64>,
}

/// Truncation model `Frechet2(a, r)` plugged into the semiparametric
/// estimator, `k*` by Thomas–Reiss, then Weissman extrapolation.
pub fn aids_pipeline(sample: &TruncatedSample, opts: &AidsOptions) -> Result<AidsReport> {
    let theta = match &opts.theta {
        Some(t) => t.clone(),
        None => fit_cmle(sample, Family::Frechet2, None, &CmleOptions::default())?.theta_hat,
    };
    let model = ParametricModel::from_params(Family::Frechet2, &theta)?;
    let cdf = SemiparamCdf::new(sample, &model)?;
    let n = cdf.n();
    let k_max = opts.k_max.min(n - 1);
    let curve = cdf
        .curve(k_max)
        .into_iter()
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Error::Undefined("semiparametric curve is undefined".into()))?;
    let kstar = thomas_reiss_kstar(&curve, opts.theta_exponent)?;
    let fit = gamma1_semi_from_cdf(&cdf, &model, kstar.k_star)?;
    let tail_fraction = cdf.survival(fit.threshold);
    let v = opts.v.unwrap_or(1.0 / (2.0 * n as f64));
    let q_v = weissman_quantile(&cdf, &fit, v).ok();
    Ok(AidsReport {
        n,
        theta_hat: theta,
        k_star: kstar.k_star,
        threshold: fit.threshold,
        gamma1_hat: fit.gamma1_hat,
        tail_fraction,
        v,
        q_v,
        t_end: q_v.map(|q| end_time(q, opts.epsilon_end)),
    })
}
