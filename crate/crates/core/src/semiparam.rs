//! Semiparametric tail-index estimation when the truncation law is known up
//! to a parameter.
//!
//! With `w_i = 1 / Gbar(x_i; theta)`, the distribution of `X` is estimated by
//! the weighted empirical CDF `F_n(x) = sum_{x_i <= x} w_i / sum_i w_i`. The
//! tail index is the `F_n`-mean of `log(x / X_{n-k:n})` above the threshold,
//! which reduces to a weighted Hill estimator over the top `k` order
//! statistics.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::distributions::{Family, ParametricModel};
use crate::fit::{check_k, Method, TailFit};
use crate::sampling::TruncatedSample;
use crate::{Error, Result};

/// Largest admissible `ln w_i`; beyond it `exp` is within a few orders of overflow.
pub const MAX_LOG_WEIGHT: f64 = 700.0;

pub const DEFAULT_GRID_SIZE: usize = 512;

/// The weighted empirical CDF `F_n(x; theta)`.
#[derive(Debug, Clone)]
pub struct SemiparamCdf {
    theta_hat: Vec<f64>,
    x: Vec<f64>,
    weights: Vec<f64>,
    /// `tail[j] = sum_{i >= j} weights[i]`, with a trailing zero.
    tail: Vec<f64>,
}

impl SemiparamCdf {
    pub fn new(sample: &TruncatedSample, truncation: &ParametricModel) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Validation("empty sample".into()));
        }
        let x = sample.sorted_x();
        let mut weights = Vec::with_capacity(x.len());
        for &xi in &x {
            let lw = -truncation.ln_survival(xi);
            if !(lw <= MAX_LOG_WEIGHT) {
                return Err(Error::Undefined(format!(
                    "weight 1/Gbar(x) overflows at x = {xi} (ln w = {lw}); check that gamma1 < gamma2 \
                     and the truncation parameters are sensible"
                )));
            }
            weights.push(lw.exp());
        }
        let mut tail = vec![0.0; x.len() + 1];
        for j in (0..x.len()).rev() {
            tail[j] = tail[j + 1] + weights[j];
        }
        Ok(Self {
            theta_hat: truncation.params(),
            x,
            weights,
            tail,
        })
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    /// Observations in ascending order.
    pub fn support(&self) -> &[f64] {
        &self.x
    }

    /// `1 / Gbar(x_(i))`, aligned with [`support`](Self::support).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `P_n(theta) = n / sum_i w_i`.
    pub fn normalizer(&self) -> f64 {
        self.x.len() as f64 / self.tail[0]
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let idx = self.x.partition_point(|&v| v <= x);
        if idx == self.x.len() {
            return 1.0;
        }
        (self.tail[0] - self.tail[idx]) / self.tail[0]
    }

    pub fn survival(&self, x: f64) -> f64 {
        let idx = self.x.partition_point(|&v| v <= x);
        self.tail[idx] / self.tail[0]
    }

    /// `X_{n-k:n}`.
    pub fn threshold(&self, k: usize) -> f64 {
        self.x[self.x.len() - k - 1]
    }

    /// Weighted log-spacing mean over the top `k` positions, `1 <= k < n`.
    pub fn estimate(&self, k: usize) -> Result<f64> {
        let n = self.x.len();
        if k == 0 || k >= n {
            return Err(Error::Domain(format!(
                "k must satisfy 1 <= k < n = {n}, got {k}"
            )));
        }
        let t = n - k - 1;
        let thr = self.x[t];
        let num: f64 = (t + 1..n)
            .map(|p| self.weights[p] * (self.x[p] / thr).ln())
            .sum();
        Ok(num / self.tail[t + 1])
    }

    /// Estimates for `k = 1..=k_max`; entries that are undefined are `None`.
    pub fn curve(&self, k_max: usize) -> Vec<Option<f64>> {
        (1..=k_max).map(|k| self.estimate(k).ok()).collect()
    }
}

pub fn semiparametric_cdf(
    sample: &TruncatedSample,
    theta_hat: &[f64],
    family: Family,
) -> Result<SemiparamCdf> {
    SemiparamCdf::new(sample, &ParametricModel::from_params(family, theta_hat)?)
}

/// Semiparametric tail-index estimate from the top `k` order statistics.
///
/// `stderr` is `sqrt(sigma^2 / k)` with the plug-in tail index of the
/// truncation model.
pub fn gamma1_semi(
    sample: &TruncatedSample,
    theta_hat: &[f64],
    family: Family,
    k: usize,
) -> Result<TailFit> {
    check_k(k, sample.n())?;
    let model = ParametricModel::from_params(family, theta_hat)?;
    let cdf = SemiparamCdf::new(sample, &model)?;
    gamma1_semi_from_cdf(&cdf, &model, k)
}

pub fn gamma1_semi_from_cdf(
    cdf: &SemiparamCdf,
    model: &ParametricModel,
    k: usize,
) -> Result<TailFit> {
    check_k(k, cdf.n())?;
    let gamma1_hat = cdf.estimate(k)?;
    let var = asymptotic_variance(gamma1_hat, model.tail_index());
    Ok(TailFit {
        method: Method::Semi,
        k,
        threshold: cdf.threshold(k),
        gamma1_hat,
        theta_hat: Some(model.params()),
        stderr: Some((var / k as f64).sqrt()),
    })
}

/// `D_n` on a geometric grid with its sup and Cramér–von Mises statistics.
#[derive(Debug, Clone)]
pub struct TailProcessCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub ks_stat: f64,
    pub cvm_stat: f64,
    /// `D_n` at the geometric midpoint of each grid cell.
    mid_values: Vec<f64>,
    k: usize,
    gamma1: f64,
}

impl TailProcessCurve {
    /// `int_1^inf x^{-1} D_n(x) dx`, midpoint rule in `log x` on the grid plus
    /// the closed-form contribution beyond the largest observation.
    pub fn log_integral(&self) -> f64 {
        let r = *self.grid.last().expect("grid has >= 2 points");
        let body: f64 = self
            .grid
            .windows(2)
            .zip(&self.mid_values)
            .map(|(w, d)| d * (w[1] / w[0]).ln())
            .sum();
        // past R the estimated tail is empty: D = -sqrt(k) x^{-1/gamma}
        let beyond = -(self.k as f64).sqrt() * self.gamma1 * r.powf(-1.0 / self.gamma1);
        body + beyond
    }
}

struct TailRatio<'a> {
    cdf: &'a SemiparamCdf,
    threshold: f64,
    base: f64,
}

impl TailRatio<'_> {
    fn at(&self, x: f64) -> f64 {
        self.cdf.survival(x * self.threshold) / self.base
    }
}

fn geometric_grid(r: f64, size: usize) -> Vec<f64> {
    let lr = r.ln();
    (0..size)
        .map(|j| {
            if j == 0 {
                1.0
            } else if j + 1 == size {
                r
            } else {
                (lr * j as f64 / (size - 1) as f64).exp()
            }
        })
        .collect()
}

fn tail_ratio(cdf: &SemiparamCdf, k: usize) -> Result<(TailRatio<'_>, f64)> {
    check_k(k, cdf.n())?;
    let threshold = cdf.threshold(k);
    let r = cdf.x[cdf.n() - 1] / threshold;
    if !(r > 1.0) {
        return Err(Error::Undefined(format!(
            "degenerate grid: X_(n) equals X_(n-k) at k={k}"
        )));
    }
    let base = cdf.survival(threshold);
    Ok((
        TailRatio {
            cdf,
            threshold,
            base,
        },
        r,
    ))
}

/// Evaluate `D_n(x) = sqrt(k) (Fbar_n(x T) / Fbar_n(T) - x^{-1/gamma1})`,
/// `T = X_{n-k:n}`, on `grid_size` geometric points of `[1, X_(n) / T]`.
pub fn tail_process_from_cdf(
    cdf: &SemiparamCdf,
    k: usize,
    gamma1_hat: f64,
    grid_size: usize,
) -> Result<TailProcessCurve> {
    if !(gamma1_hat > 0.0 && gamma1_hat.is_finite()) {
        return Err(Error::Domain(format!(
            "gamma1 must be > 0, got {gamma1_hat}"
        )));
    }
    if grid_size < 2 {
        return Err(Error::Domain("grid needs at least 2 points".into()));
    }
    let (ratio, r) = tail_ratio(cdf, k)?;
    let sk = (k as f64).sqrt();
    let inv = 1.0 / gamma1_hat;
    let d = |x: f64| sk * (ratio.at(x) - x.powf(-inv));

    let grid = geometric_grid(r, grid_size);
    let values: Vec<f64> = grid.iter().map(|&x| d(x)).collect();
    let mid_values: Vec<f64> = grid.windows(2).map(|w| d((w[0] * w[1]).sqrt())).collect();
    let ks_stat = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    // u = x^{-1/gamma} maps [1, inf) onto (0, 1]
    let mut cvm = 0.0;
    for w in grid.windows(2) {
        let (u0, u1) = (w[0].powf(-inv), w[1].powf(-inv));
        let xm = (0.5 * (u0 + u1)).powf(-gamma1_hat);
        cvm += d(xm).powi(2) * (u0 - u1);
    }
    let ur = r.powf(-inv);
    cvm += k as f64 * ur.powi(3) / 3.0;

    Ok(TailProcessCurve {
        grid,
        values,
        ks_stat,
        cvm_stat: cvm,
        mid_values,
        k,
        gamma1: gamma1_hat,
    })
}

pub fn tail_process(
    sample: &TruncatedSample,
    theta_hat: &[f64],
    family: Family,
    k: usize,
    gamma1_hat: f64,
    grid_size: usize,
) -> Result<TailProcessCurve> {
    let cdf = semiparametric_cdf(sample, theta_hat, family)?;
    tail_process_from_cdf(&cdf, k, gamma1_hat, grid_size)
}

/// `int_1^inf x^{-1} Fbar_n(x T) / Fbar_n(T) dx` by the midpoint rule in
/// `log x` on a geometric grid; reproduces the estimate up to grid error.
pub fn tail_log_moment(cdf: &SemiparamCdf, k: usize, grid_size: usize) -> Result<f64> {
    if grid_size < 2 {
        return Err(Error::Domain("grid needs at least 2 points".into()));
    }
    let (ratio, r) = tail_ratio(cdf, k)?;
    let grid = geometric_grid(r, grid_size);
    Ok(grid
        .windows(2)
        .map(|w| ratio.at((w[0] * w[1]).sqrt()) * (w[1] / w[0]).ln())
        .sum())
}

/// `sigma^2 = gamma^2 (1 + q)(1 + q^2)(1 - q)^3 1{q < 1}` with `q = gamma1/gamma2`
/// and `gamma = gamma1 gamma2 / (gamma1 + gamma2)`.
pub fn asymptotic_variance(gamma1: f64, gamma2: f64) -> f64 {
    if !(gamma1 < gamma2) {
        return 0.0;
    }
    let q = gamma1 / gamma2;
    let gamma = gamma1 * gamma2 / (gamma1 + gamma2);
    gamma * gamma * (1.0 + q) * (1.0 + q * q) * (1.0 - q).powi(3)
}

/// Normal interval `gamma1_hat +- z sqrt(sigma^2 / k)`; the asymptotic bias
/// term is ignored.
pub fn confidence_interval(fit: &TailFit, gamma2_hat: f64, level: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::Domain(format!(
            "level must lie in [0, 1), got {level}"
        )));
    }
    let z = Normal::standard().inverse_cdf(0.5 * (1.0 + level));
    let half = z * (asymptotic_variance(fit.gamma1_hat, gamma2_hat) / fit.k as f64).sqrt();
    Ok((fit.gamma1_hat - half, fit.gamma1_hat + half))
}
