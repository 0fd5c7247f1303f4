//! Product-limit estimators for right-truncated data and the tail-index
//! estimators built on them.
//!
//! `C_n(x) = n^{-1} #{i : x_i <= x <= y_i}` is the risk-set fraction. The
//! Lynden-Bell estimator is `F(x) = prod_{x_i > x} (1 - 1/(n C_n(x_i)))` and
//! Woodroofe's variant replaces each factor by `exp(-1/(n C_n(x_i)))`.

use crate::fit::{check_k, Method, TailFit};
use crate::sampling::TruncatedSample;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductLimitKind {
    LyndenBell,
    Woodroofe,
}

impl ProductLimitKind {
    fn factor(self, risk: f64) -> f64 {
        match self {
            ProductLimitKind::LyndenBell => 1.0 - 1.0 / risk,
            ProductLimitKind::Woodroofe => (-1.0 / risk).exp(),
        }
    }
}

/// `n C_n(x)` for every `x` in `points`, by binary search on sorted margins.
fn risk_counts(sorted_x: &[f64], sorted_y: &[f64], points: &[f64]) -> Vec<f64> {
    points
        .iter()
        .map(|&x| {
            let at_or_below = sorted_x.partition_point(|&v| v <= x);
            let y_below = sorted_y.partition_point(|&v| v < x);
            (at_or_below - y_below) as f64
        })
        .collect()
}

/// `C_n(x)`.
pub fn cn(sample: &TruncatedSample, x: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Validation("C_n needs a nonempty sample".into()));
    }
    let count = sample
        .pairs()
        .iter()
        .filter(|&&(xi, yi)| xi <= x && x <= yi)
        .count();
    Ok(count as f64 / sample.n() as f64)
}

/// Right-continuous step CDF from a product-limit construction.
#[derive(Debug, Clone)]
pub struct ProductLimitCurve {
    kind: ProductLimitKind,
    support: Vec<f64>,
    values: Vec<f64>,
    below: f64,
}

impl ProductLimitCurve {
    fn build(sample: &TruncatedSample, kind: ProductLimitKind) -> Result<Self> {
        let order = SortedSample::new(sample)?;
        let mut support: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        // walk down from the top, emitting each distinct value once
        let mut prod = 1.0;
        let n = order.x.len();
        let mut i = n;
        while i > 0 {
            let v = order.x[i - 1];
            support.push(v);
            values.push(prod);
            while i > 0 && order.x[i - 1] == v {
                prod *= kind.factor(order.risk[i - 1]);
                i -= 1;
            }
        }
        support.reverse();
        values.reverse();
        Ok(Self {
            kind,
            support,
            values,
            below: prod,
        })
    }

    pub fn kind(&self) -> ProductLimitKind {
        self.kind
    }

    /// Distinct observed `x` values, ascending.
    pub fn support(&self) -> &[f64] {
        &self.support
    }

    /// Curve value at each support point.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.support.partition_point(|&v| v <= x);
        if idx == 0 {
            self.below
        } else {
            self.values[idx - 1]
        }
    }
}

pub fn lynden_bell_cdf(sample: &TruncatedSample) -> Result<ProductLimitCurve> {
    ProductLimitCurve::build(sample, ProductLimitKind::LyndenBell)
}

pub fn woodroofe_cdf(sample: &TruncatedSample) -> Result<ProductLimitCurve> {
    ProductLimitCurve::build(sample, ProductLimitKind::Woodroofe)
}

/// The x-sample sorted stably (ties keep input order) with `n C_n` at each point.
struct SortedSample {
    x: Vec<f64>,
    risk: Vec<f64>,
}

impl SortedSample {
    fn new(sample: &TruncatedSample) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Validation("empty sample".into()));
        }
        let x = sample.sorted_x();
        let mut y: Vec<f64> = sample.ys().collect();
        y.sort_by(f64::total_cmp);
        let risk = risk_counts(&x, &y, &x);
        Ok(Self { x, risk })
    }
}

/// Product-limit tail-index estimator evaluated at any sample fraction.
///
/// Tied order statistics are handled positionally: the curve value at sorted
/// position `p` is the product of the factors at positions `> p`.
#[derive(Debug, Clone)]
pub struct ProductLimitTail {
    kind: ProductLimitKind,
    x: Vec<f64>,
    risk: Vec<f64>,
    /// `upper[p]` = product of factors at positions `> p`.
    upper: Vec<f64>,
}

impl ProductLimitTail {
    pub fn new(sample: &TruncatedSample, kind: ProductLimitKind) -> Result<Self> {
        let SortedSample { x, risk } = SortedSample::new(sample)?;
        let n = x.len();
        let mut upper = vec![1.0; n];
        for p in (0..n - 1).rev() {
            upper[p] = upper[p + 1] * kind.factor(risk[p + 1]);
        }
        Ok(Self {
            kind,
            x,
            risk,
            upper,
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn method(&self) -> Method {
        match self.kind {
            ProductLimitKind::LyndenBell => Method::Ww,
            ProductLimitKind::Woodroofe => Method::Bmn,
        }
    }

    /// `X_{n-k:n}`.
    pub fn threshold(&self, k: usize) -> f64 {
        self.x[self.x.len() - k - 1]
    }

    /// Estimate from the top `k` order statistics, `1 <= k < n`.
    pub fn estimate(&self, k: usize) -> Result<f64> {
        let n = self.x.len();
        if k == 0 || k >= n {
            return Err(Error::Domain(format!(
                "k must satisfy 1 <= k < n = {n}, got {k}"
            )));
        }
        let t = n - k - 1;
        let thr = self.x[t];
        let tail_mass = 1.0 - self.upper[t];
        if !(tail_mass > 0.0) {
            return Err(Error::Undefined(format!(
                "zero product-limit tail mass above X_(n-k) at k={k}"
            )));
        }
        // risk holds n*C_n, so each weight upper/risk is the jump of the curve
        let sum: f64 = (t + 1..n)
            .map(|p| self.upper[p] / self.risk[p] * (self.x[p] / thr).ln())
            .sum();
        Ok(sum / tail_mass)
    }

    /// Estimates for `k = 1..=k_max`; entries that are undefined are `None`.
    pub fn curve(&self, k_max: usize) -> Vec<Option<f64>> {
        (1..=k_max).map(|k| self.estimate(k).ok()).collect()
    }

    pub fn fit(&self, k: usize) -> Result<TailFit> {
        check_k(k, self.n())?;
        Ok(TailFit {
            method: self.method(),
            k,
            threshold: self.threshold(k),
            gamma1_hat: self.estimate(k)?,
            theta_hat: None,
            stderr: None,
        })
    }
}

/// Lynden-Bell-integral estimator at threshold `X_{n-k:n}`.
pub fn gamma1_ww(sample: &TruncatedSample, k: usize) -> Result<TailFit> {
    check_k(k, sample.n())?;
    ProductLimitTail::new(sample, ProductLimitKind::LyndenBell)?.fit(k)
}

/// Woodroofe-integral estimator at threshold `X_{n-k:n}`.
pub fn gamma1_bmn(sample: &TruncatedSample, k: usize) -> Result<TailFit> {
    check_k(k, sample.n())?;
    ProductLimitTail::new(sample, ProductLimitKind::Woodroofe)?.fit(k)
}
