use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Which tail-index estimator produced a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Woodroofe-integral estimator.
    Bmn,
    /// Semiparametric estimator with a parametric truncation model.
    Semi,
    /// Lynden-Bell-integral estimator.
    Ww,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Semi, Method::Bmn, Method::Ww];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bmn => "bmn",
            Method::Semi => "semi",
            Method::Ww => "ww",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "semi" => Ok(Method::Semi),
            "bmn" => Ok(Method::Bmn),
            "ww" | "w" => Ok(Method::Ww),
            other => Err(Error::Validation(format!(
                "unknown method '{other}' (semi, bmn, ww)"
            ))),
        }
    }
}

/// A tail-index estimate at a fixed sample fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFit {
    pub method: Method,
    /// Number of upper order statistics used.
    pub k: usize,
    /// The order statistic `X_{n-k:n}`.
    pub threshold: f64,
    pub gamma1_hat: f64,
    /// Truncation-model parameters plugged in (semiparametric fits only).
    pub theta_hat: Option<Vec<f64>>,
    /// Asymptotic standard error `sigma / sqrt(k)`, when available.
    pub stderr: Option<f64>,
}

/// Check `2 <= k < n`.
pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 2 || k >= n {
        return Err(Error::Domain(format!(
            "k must satisfy 2 <= k < n = {n}, got {k}"
        )));
    }
    Ok(())
}
