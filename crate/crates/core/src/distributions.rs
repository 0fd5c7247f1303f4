//! Burr, Fréchet and two-parameter Fréchet models.
//!
//! Every quantity is computed in log-space first and exponentiated last, so
//! survival values far out in the tail stay representable.

use rand::distr::Open01;
use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Survival `(1 + x^{1/delta})^{-delta/gamma}` on `[0, inf)`.
    Burr,
    /// Survival `1 - exp(-x^{-1/gamma})` on `(0, inf)`.
    Frechet,
    /// CDF `exp(-(a/x)^r)` on `(0, inf)`; tail index `1/r`.
    Frechet2,
}

impl Family {
    /// Number of free parameters.
    pub fn dim(self) -> usize {
        match self {
            Family::Burr | Family::Frechet2 => 2,
            Family::Frechet => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Burr => "burr",
            Family::Frechet => "frechet",
            Family::Frechet2 => "frechet2",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "burr" => Ok(Family::Burr),
            "frechet" => Ok(Family::Frechet),
            "frechet2" => Ok(Family::Frechet2),
            other => Err(Error::Validation(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Burr { gamma: f64, delta: f64 },
    Frechet { gamma: f64 },
    Frechet2 { a: f64, r: f64 },
}

/// A validated, immutable member of one of the three families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametricModel {
    kind: Kind,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `ln(1 - e^{-t})` for `t >= 0`.
fn ln_one_minus_exp_neg(t: f64) -> f64 {
    if t < std::f64::consts::LN_2 {
        (-(-t).exp_m1()).ln()
    } else {
        (-(-t).exp()).ln_1p()
    }
}

impl ParametricModel {
    pub fn burr(gamma: f64, delta: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        check_positive("delta", delta)?;
        Ok(Self {
            kind: Kind::Burr { gamma, delta },
        })
    }

    pub fn frechet(gamma: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        Ok(Self {
            kind: Kind::Frechet { gamma },
        })
    }

    pub fn frechet2(a: f64, r: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("r", r)?;
        Ok(Self {
            kind: Kind::Frechet2 { a, r },
        })
    }

    /// Build from a family tag and its parameter vector
    /// (`[gamma, delta]`, `[gamma]` or `[a, r]`).
    pub fn from_params(family: Family, params: &[f64]) -> Result<Self> {
        if params.len() != family.dim() {
            return Err(Error::InvalidParameter(format!(
                "{} takes {} parameter(s), got {}",
                family.name(),
                family.dim(),
                params.len()
            )));
        }
        match family {
            Family::Burr => Self::burr(params[0], params[1]),
            Family::Frechet => Self::frechet(params[0]),
            Family::Frechet2 => Self::frechet2(params[0], params[1]),
        }
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Burr { .. } => Family::Burr,
            Kind::Frechet { .. } => Family::Frechet,
            Kind::Frechet2 { .. } => Family::Frechet2,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self.kind {
            Kind::Burr { gamma, delta } => vec![gamma, delta],
            Kind::Frechet { gamma } => vec![gamma],
            Kind::Frechet2 { a, r } => vec![a, r],
        }
    }

    /// Tail index: `gamma` for Burr/Fréchet, `1/r` for the two-parameter Fréchet.
    pub fn tail_index(&self) -> f64 {
        match self.kind {
            Kind::Burr { gamma, .. } | Kind::Frechet { gamma } => gamma,
            Kind::Frechet2 { r, .. } => 1.0 / r,
        }
    }

    fn check_x(x: f64) -> Result<()> {
        if x.is_finite() && x >= 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!("x must be finite and >= 0, got {x}")))
        }
    }

    /// `(a/x)^r` in the Fréchet parametrisation, as a log.
    fn ln_frechet_t(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Frechet { gamma } => -x.ln() / gamma,
            Kind::Frechet2 { a, r } => r * (a.ln() - x.ln()),
            Kind::Burr { .. } => unreachable!(),
        }
    }

    /// Log survival. `x` is assumed finite and nonnegative.
    pub fn ln_survival(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Burr { gamma, delta } => {
                if x <= 0.0 {
                    return 0.0;
                }
                -(delta / gamma) * softplus(x.ln() / delta)
            }
            Kind::Frechet { .. } | Kind::Frechet2 { .. } => {
                if x <= 0.0 {
                    return 0.0;
                }
                ln_one_minus_exp_neg(self.ln_frechet_t(x).exp())
            }
        }
    }

    /// Log CDF. `x` is assumed finite and nonnegative.
    pub fn ln_cdf(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Burr { .. } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let ls = self.ln_survival(x);
                (-ls.exp_m1()).ln()
            }
            Kind::Frechet { .. } | Kind::Frechet2 { .. } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                -self.ln_frechet_t(x).exp()
            }
        }
    }

    /// Log density; `-inf` outside the support interior.
    pub fn ln_density(&self, x: f64) -> f64 {
        if !(x > 0.0) || !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        let lx = x.ln();
        match self.kind {
            Kind::Burr { gamma, delta } => {
                -gamma.ln() + (1.0 / delta - 1.0) * lx
                    - (delta / gamma + 1.0) * softplus(lx / delta)
            }
            Kind::Frechet { gamma } => {
                let lt = self.ln_frechet_t(x);
                -gamma.ln() - lx + lt - lt.exp()
            }
            Kind::Frechet2 { r, .. } => {
                let lt = self.ln_frechet_t(x);
                r.ln() - lx + lt - lt.exp()
            }
        }
    }

    /// CDF without argument checks; `+inf` maps to 1 and `x <= 0` to 0.
    pub(crate) fn cdf_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Burr { .. } => -self.ln_survival(x).exp_m1(),
            _ => self.ln_cdf(x).exp(),
        }
    }

    pub fn survival(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.ln_survival(x).exp())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.cdf_unchecked(x))
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::Domain(format!(
                "density needs x in (0, inf), got {x}"
            )));
        }
        Ok(self.ln_density(x).exp())
    }

    /// Inverse CDF on `(0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!(
                "quantile needs u in (0, 1), got {u}"
            )));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match self.kind {
            Kind::Burr { gamma, delta } => {
                // (1+z)^{-delta/gamma} = 1-u, solved for ln z to delay overflow
                let t = -(gamma / delta) * (-u).ln_1p();
                let ln_z = if t > 30.0 {
                    t + (-(-t).exp()).ln_1p()
                } else {
                    t.exp_m1().ln()
                };
                (delta * ln_z).exp()
            }
            Kind::Frechet { gamma } => (-u.ln()).powf(-gamma),
            Kind::Frechet2 { a, r } => a * (-u.ln()).powf(-1.0 / r),
        }
    }

    /// One inverse-transform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile_unchecked(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn models() -> Vec<ParametricModel> {
        vec![
            ParametricModel::burr(0.6, 0.25).unwrap(),
            ParametricModel::burr(1.4, 0.25).unwrap(),
            ParametricModel::frechet(0.6).unwrap(),
            ParametricModel::frechet(1.0).unwrap(),
            ParametricModel::frechet2(0.004, 2.1).unwrap(),
        ]
    }

    #[test]
    fn burr_survival_values() {
        let m = ParametricModel::burr(0.6, 0.25).unwrap();
        assert_eq!(m.survival(0.0).unwrap(), 1.0);
        // 2^{-0.25/0.6}
        let expect = (-(0.25f64 / 0.6) * std::f64::consts::LN_2).exp();
        assert!((m.survival(1.0).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.74915).abs() < 1e-5);
        assert!((m.cdf(1.0).unwrap() - (1.0 - expect)).abs() < 1e-15);
    }

    #[test]
    fn frechet_limits() {
        let m = ParametricModel::frechet(1.0).unwrap();
        assert!(m.survival(1e300).unwrap() < 1e-299);
        assert_eq!(
            ParametricModel::frechet(0.6).unwrap().cdf(0.0).unwrap(),
            0.0
        );
        assert!(ParametricModel::frechet(0.6).unwrap().cdf(1e-3).unwrap() < 1e-100);
        assert!((m.density(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn frechet2_values() {
        let m = ParametricModel::frechet2(0.004, 2.1).unwrap();
        assert!((m.cdf(0.004).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        let expect = 2.1 * (-1.0f64).exp() / 0.004;
        assert!((m.density(0.004).unwrap() - expect).abs() / expect < 1e-13);
        assert!((m.tail_index() - 1.0 / 2.1).abs() < 1e-15);
    }

    #[test]
    fn quantile_examples() {
        let b = ParametricModel::burr(0.6, 0.25).unwrap();
        let s1 = b.survival(1.0).unwrap();
        assert!((b.quantile(1.0 - s1).unwrap() - 1.0).abs() < 1e-12);
        let f = ParametricModel::frechet(1.0).unwrap();
        assert!((f.quantile((-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-14);
        for m in models() {
            let q = m.quantile(1e-300).unwrap();
            assert!(
                q > 0.0 && (m.ln_cdf(q) / 1e-300f64.ln() - 1.0).abs() < 1e-9,
                "{m:?}"
            );
        }
    }

    #[test]
    fn domain_errors() {
        let b = ParametricModel::burr(0.6, 0.25).unwrap();
        assert!(matches!(b.survival(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(b.survival(f64::INFINITY), Err(Error::Domain(_))));
        assert!(matches!(b.survival(-1.0), Err(Error::Domain(_))));
        assert!(matches!(b.density(0.0), Err(Error::Domain(_))));
        assert!(matches!(b.quantile(0.0), Err(Error::Domain(_))));
        assert!(matches!(b.quantile(1.0), Err(Error::Domain(_))));
        assert!(ParametricModel::burr(0.0, 1.0).is_err());
        assert!(ParametricModel::frechet(-1.0).is_err());
        assert!(ParametricModel::frechet2(1.0, f64::NAN).is_err());
        assert!(ParametricModel::from_params(Family::Burr, &[1.0]).is_err());
    }

    #[test]
    fn no_underflow_far_tail() {
        let b = ParametricModel::burr(0.1, 0.25).unwrap();
        let ls = b.ln_survival(1e6);
        assert!(ls.is_finite() && ls < -100.0);
        let ls = b.ln_survival(1e200);
        assert!(ls.is_finite());
    }

    #[test]
    fn cdf_plus_survival_is_one() {
        for m in models() {
            for &x in &[1e-3, 0.004, 0.1, 0.7, 1.0, 3.0, 40.0, 1e4] {
                let s = m.survival(x).unwrap() + m.cdf(x).unwrap();
                assert!((s - 1.0).abs() < 1e-15, "{m:?} x={x} sum={s}");
            }
        }
    }

    #[test]
    fn density_matches_finite_difference() {
        for m in models() {
            let lo = m.quantile(0.01).unwrap();
            let hi = m.quantile(0.99).unwrap();
            for i in 0..100 {
                let x = lo * (hi / lo).powf(i as f64 / 99.0);
                let h = 1e-5 * x;
                // differentiate whichever of cdf / survival is not near 1
                let fd = if m.cdf(x).unwrap() < 0.5 {
                    (m.cdf(x + h).unwrap() - m.cdf(x - h).unwrap()) / (2.0 * h)
                } else {
                    (m.survival(x - h).unwrap() - m.survival(x + h).unwrap()) / (2.0 * h)
                };
                let d = m.density(x).unwrap();
                assert!((fd - d).abs() / d < 1e-5, "{m:?} x={x} fd={fd} d={d}");
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        for m in models() {
            // trapezoid on log scale between extreme quantiles
            let lo = m.quantile(1e-9).unwrap();
            let hi = m.quantile(1.0 - 1e-9).unwrap();
            let steps = 200_000;
            let (la, lb) = (lo.ln(), hi.ln());
            let h = (lb - la) / steps as f64;
            let mut acc = 0.0;
            for i in 0..=steps {
                let t = la + h * i as f64;
                let x = t.exp();
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                acc += w * m.density(x).unwrap() * x;
            }
            assert!((acc * h - 1.0).abs() < 1e-6, "{m:?} integral {}", acc * h);
        }
    }

    #[test]
    fn regular_variation_of_tails() {
        for m in [
            ParametricModel::burr(0.6, 0.25).unwrap(),
            ParametricModel::burr(0.8, 0.25).unwrap(),
            ParametricModel::frechet(0.6).unwrap(),
            ParametricModel::frechet(1.4).unwrap(),
        ] {
            let g = m.tail_index();
            let mut prev_err = f64::INFINITY;
            for &t in &[1e2, 1e3, 1e4] {
                for &s in &[2.0, 5.0] {
                    let ratio = m.survival(s * t).unwrap() / m.survival(t).unwrap();
                    let target = f64::powf(s, -1.0 / g);
                    let err = (ratio / target - 1.0).abs();
                    if t == 1e4 {
                        assert!(err < 0.05, "{m:?} s={s} err={err}");
                    }
                    if s == 5.0 {
                        assert!(err <= prev_err + 1e-12);
                        prev_err = err;
                    }
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = ParametricModel::burr(0.6, 0.25).unwrap();
        let a: Vec<f64> = {
            let mut r = ChaCha8Rng::seed_from_u64(7);
            (0..10).map(|_| m.sample(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = ChaCha8Rng::seed_from_u64(7);
            (0..10).map(|_| m.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn burr_draws_match_cdf() {
        let m = ParametricModel::burr(0.6, 0.25).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(11);
        let mut xs: Vec<f64> = (0..100_000).map(|_| m.sample(&mut r)).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = m.cdf(x).unwrap();
                (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn frechet_draws_percentile() {
        let m = ParametricModel::frechet(0.6).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(12);
        let mut xs: Vec<f64> = (0..100_000).map(|_| m.sample(&mut r)).collect();
        xs.sort_by(f64::total_cmp);
        let q90 = xs[90_000];
        let exact = m.quantile(0.9).unwrap();
        assert!((q90 / exact - 1.0).abs() < 0.02);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_model() -> impl Strategy<Value = ParametricModel> {
            prop_oneof![
                (0.1f64..3.0, 0.1f64..2.0).prop_map(|(g, d)| ParametricModel::burr(g, d).unwrap()),
                (0.1f64..3.0).prop_map(|g| ParametricModel::frechet(g).unwrap()),
                (0.001f64..5.0, 0.3f64..6.0)
                    .prop_map(|(a, r)| ParametricModel::frechet2(a, r).unwrap()),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn survival_nonincreasing(m in any_model(), a in 0.0f64..50.0, b in 0.0f64..50.0) {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                prop_assert!(m.survival(lo).unwrap() >= m.survival(hi).unwrap());
            }

            #[test]
            fn quantile_round_trip(m in any_model(), u in 1e-6f64..(1.0 - 1e-6)) {
                let x = m.quantile(u).unwrap();
                prop_assert!((m.cdf(x).unwrap() - u).abs() < 1e-10);
                prop_assert!((m.survival(x).unwrap() - (1.0 - u)).abs() < 1e-10);
            }
        }
    }
}
