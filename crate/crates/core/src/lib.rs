//! Tail-index estimation for heavy-tailed data under random right truncation.
//!
//! A pair `(X, Y)` is observed only when `X <= Y`. The crate provides
//!
//! * closed-form Burr and Fréchet models ([`distributions`]),
//! * truncated-sample simulation and the observed fraction `p` ([`sampling`]),
//! * Lynden-Bell / Woodroofe product-limit estimators and the tail-index
//!   estimators built on them ([`nonparam`]),
//! * conditional maximum likelihood for a parametric truncation model ([`cmle`]),
//! * the semiparametric tail-index estimator, its tail empirical process and
//!   goodness-of-fit statistics ([`semiparam`]),
//! * adaptive sample-fraction selection, Weissman extrapolation and the AIDS
//!   induction-time transforms ([`selection`]),
//! * a deterministic Monte Carlo harness ([`harness`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cmle;
pub mod distributions;
mod error;
pub mod fit;
pub mod format;
pub mod harness;
pub mod nonparam;
pub mod optim;
pub mod quadrature;
pub mod rng;
pub mod sampling;
pub mod selection;
pub mod semiparam;

pub use error::{Error, Result};
pub use fit::{Method, TailFit};
