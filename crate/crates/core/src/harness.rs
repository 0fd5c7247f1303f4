//! Monte Carlo engine: ABIAS/RMSE curves over the sample fraction and
//! per-replication adaptive `k*`.
//!
//! Replication `r` draws from stream `r` of the master seed and the results
//! are merged in replication order, so output does not depend on the thread
//! schedule.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::cmle::{fit_cmle, CmleOptions};
use crate::format::g6;
use crate::nonparam::{ProductLimitKind, ProductLimitTail};
use crate::rng;
use crate::sampling::{
    from_simulation, simulate_truncated_with, solve_gamma2, truncation_probability, Scenario,
    ScenarioSpec, TruncatedSample, DEFAULT_DELTA,
};
use crate::selection::{thomas_reiss_kstar_from, DEFAULT_K_MAX, DEFAULT_THETA_EXPONENT};
use crate::semiparam::{asymptotic_variance, SemiparamCdf};
use crate::{Error, Method, Result};

/// How the truncation tail index is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Observed fraction; `gamma2` is solved for.
    P(f64),
    Gamma2(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub gamma1: f64,
    pub truncation: Truncation,
    pub delta: f64,
    /// Pre-truncation sample size `N`.
    pub n_drawn: usize,
    pub replications: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub master_seed: u64,
    pub theta_exponent: f64,
    pub estimators: Vec<Method>,
    /// Drop semiparametric estimates whose CMLE did not converge.
    pub strict: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::S1,
            gamma1: 0.6,
            truncation: Truncation::P(0.55),
            delta: DEFAULT_DELTA,
            n_drawn: 300,
            replications: 1000,
            k_min: 2,
            k_max: DEFAULT_K_MAX,
            master_seed: 1,
            theta_exponent: DEFAULT_THETA_EXPONENT,
            estimators: Method::ALL.to_vec(),
            strict: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Validation(format!("bad value '{value}' for key '{key}'")))
}

impl ScenarioConfig {
    /// Set one field from its textual key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "scenario" => self.scenario = value.parse()?,
            "gamma1" => self.gamma1 = parse_num(key, value)?,
            "p" => self.truncation = Truncation::P(parse_num(key, value)?),
            "gamma2" => self.truncation = Truncation::Gamma2(parse_num(key, value)?),
            "delta" => self.delta = parse_num(key, value)?,
            "n" | "N" => self.n_drawn = parse_num(key, value)?,
            "replications" | "reps" => self.replications = parse_num(key, value)?,
            "k_min" => self.k_min = parse_num(key, value)?,
            "k_max" => self.k_max = parse_num(key, value)?,
            "seed" | "master_seed" => self.master_seed = parse_num(key, value)?,
            "theta_exponent" => self.theta_exponent = parse_num(key, value)?,
            "estimators" => {
                self.estimators = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?;
            }
            "strict" => self.strict = parse_num(key, value)?,
            other => return Err(Error::Validation(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Apply `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key=value, got '{line}'"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Validation("replications must be at least 1".into()));
        }
        if self.n_drawn == 0 {
            return Err(Error::Validation("N must be at least 1".into()));
        }
        if self.k_min < 2 || self.k_min > self.k_max {
            return Err(Error::Validation(format!(
                "need 2 <= k_min <= k_max, got {}..{}",
                self.k_min, self.k_max
            )));
        }
        if !(0.0..=0.5).contains(&self.theta_exponent) {
            return Err(Error::Validation(
                "theta_exponent must lie in [0, 1/2]".into(),
            ));
        }
        let mut seen = self.estimators.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.estimators.len() {
            return Err(Error::Validation("estimators listed twice".into()));
        }
        Ok(())
    }

    /// Resolve `gamma2` (solving for it when `p` is given).
    pub fn resolve(&self) -> Result<ScenarioSpec> {
        self.validate()?;
        let gamma2 = match self.truncation {
            Truncation::Gamma2(g) => g,
            Truncation::P(p) => solve_gamma2(self.scenario, p, self.gamma1, self.delta)
                .map_err(|e| Error::Validation(format!("cannot resolve gamma2: {e}")))?,
        };
        ScenarioSpec::new(self.scenario, self.gamma1, gamma2, self.delta)
    }
}

/// Everything one replication contributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub index: usize,
    pub n_observed: usize,
    /// `None` when the CMLE failed or was not attempted.
    pub theta_hat: Option<Vec<f64>>,
    pub cmle_converged: bool,
    /// One curve per configured estimator, `k = 1..=k_max`.
    pub curves: Vec<(Method, Vec<Option<f64>>)>,
}

/// Simulate replication `index` and evaluate every configured estimator.
pub fn run_replication(
    config: &ScenarioConfig,
    spec: &ScenarioSpec,
    index: usize,
) -> Result<Replication> {
    let mut stream = rng::stream(config.master_seed, index as u64);
    let pairs = simulate_truncated_with(
        &spec.target_model()?,
        &spec.truncation_model()?,
        config.n_drawn,
        &mut stream,
    );
    let sample = from_simulation(pairs, config.n_drawn, Some(config.master_seed));
    Ok(evaluate(config, spec, &sample, index))
}

fn evaluate(
    config: &ScenarioConfig,
    spec: &ScenarioSpec,
    sample: &TruncatedSample,
    index: usize,
) -> Replication {
    let k_max = config.k_max;
    let missing = || vec![None; k_max];
    let mut theta_hat = None;
    let mut cmle_converged = false;
    let mut curves = Vec::with_capacity(config.estimators.len());
    for &method in &config.estimators {
        let curve = match method {
            Method::Semi => {
                let family = spec.scenario.truncation_family();
                match fit_cmle(sample, family, None, &CmleOptions::default()) {
                    Ok(fit) => {
                        cmle_converged = fit.converged;
                        theta_hat = Some(fit.theta_hat.clone());
                        let usable = fit.converged || !config.strict;
                        match fit.model().and_then(|m| SemiparamCdf::new(sample, &m)) {
                            Ok(cdf) if usable => cdf.curve(k_max),
                            _ => missing(),
                        }
                    }
                    Err(_) => missing(),
                }
            }
            Method::Bmn | Method::Ww => {
                let kind = if method == Method::Bmn {
                    ProductLimitKind::Woodroofe
                } else {
                    ProductLimitKind::LyndenBell
                };
                match ProductLimitTail::new(sample, kind) {
                    Ok(t) => t.curve(k_max),
                    Err(_) => missing(),
                }
            }
        };
        curves.push((method, curve));
    }
    Replication {
        index,
        n_observed: sample.n(),
        theta_hat,
        cmle_converged,
        curves,
    }
}

/// Aggregates for one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSummary {
    pub method: Method,
    pub k_min: usize,
    /// `|mean(gamma_hat) - gamma1|` for `k = k_min..=k_max`.
    pub abias: Vec<f64>,
    pub rmse: Vec<f64>,
    /// Replications with a defined estimate at each `k`.
    pub included: Vec<usize>,
    pub misses: Vec<usize>,
    /// `estimates[r][j]` is replication `r` at `k = k_min + j`.
    pub estimates: Vec<Vec<Option<f64>>>,
    pub k_star: Vec<Option<usize>>,
    pub gamma_at_kstar: Vec<Option<f64>>,
}

impl EstimatorSummary {
    pub fn ks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.abias.len()).map(move |j| self.k_min + j)
    }

    /// Most frequent `k*`; ties go to the smallest.
    pub fn kstar_mode(&self) -> Option<usize> {
        let mut counts = std::collections::BTreeMap::new();
        for k in self.k_star.iter().flatten() {
            *counts.entry(*k).or_insert(0usize) += 1;
        }
        let top = counts.values().copied().max()?;
        counts.into_iter().find(|&(_, c)| c == top).map(|(k, _)| k)
    }

    fn at_kstar(&self) -> impl Iterator<Item = f64> + '_ {
        self.gamma_at_kstar.iter().flatten().copied()
    }

    pub fn kstar_misses(&self) -> usize {
        self.gamma_at_kstar.iter().filter(|g| g.is_none()).count()
    }

    /// Mean of `gamma_hat(k*_r)` over replications.
    pub fn mean_at_kstar(&self) -> f64 {
        let n = self.at_kstar().count();
        self.at_kstar().sum::<f64>() / n as f64
    }

    /// RMSE of `gamma_hat(k*_r)` around `gamma1`.
    pub fn rmse_at_kstar(&self, gamma1: f64) -> f64 {
        let n = self.at_kstar().count();
        (self.at_kstar().map(|g| (g - gamma1).powi(2)).sum::<f64>() / n as f64).sqrt()
    }

    pub fn mean_kstar(&self) -> f64 {
        let ks: Vec<usize> = self.k_star.iter().flatten().copied().collect();
        ks.iter().sum::<usize>() as f64 / ks.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub config: ScenarioConfig,
    pub spec: ScenarioSpec,
    /// Observed fraction implied by `spec`.
    pub p: f64,
    pub mean_n_observed: f64,
    pub cmle_failures: usize,
    pub cmle_nonconverged: usize,
    /// Sorted by method name.
    pub estimators: Vec<EstimatorSummary>,
}

impl MonteCarloSummary {
    pub fn estimator(&self, method: Method) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|e| e.method == method)
    }
}

/// Run all replications in parallel and aggregate in replication order.
pub fn run_scenario(config: &ScenarioConfig) -> Result<MonteCarloSummary> {
    let spec = config.resolve()?;
    let reps: Vec<Replication> = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(config, &spec, r))
        .collect::<Result<_>>()?;
    summarize(config, &spec, &reps)
}

/// Aggregate replications that were produced by [`run_replication`].
pub fn summarize(
    config: &ScenarioConfig,
    spec: &ScenarioSpec,
    reps: &[Replication],
) -> Result<MonteCarloSummary> {
    let mut methods = config.estimators.clone();
    methods.sort_by_key(|m| m.as_str());
    let width = config.k_max - config.k_min + 1;
    let g1 = spec.gamma1;

    let mut estimators = Vec::with_capacity(methods.len());
    for method in methods {
        let mut estimates = Vec::with_capacity(reps.len());
        let mut k_star = Vec::with_capacity(reps.len());
        let mut gamma_at_kstar = Vec::with_capacity(reps.len());
        for rep in reps {
            let curve = &rep
                .curves
                .iter()
                .find(|(m, _)| *m == method)
                .expect("curve per estimator")
                .1;
            estimates.push(curve[config.k_min - 1..].to_vec());
            let prefix: Vec<f64> = curve.iter().map_while(|v| *v).collect();
            match thomas_reiss_kstar_from(&prefix, config.theta_exponent, config.k_min) {
                Ok(r) => {
                    k_star.push(Some(r.k_star));
                    gamma_at_kstar.push(Some(prefix[r.k_star - 1]));
                }
                Err(_) => {
                    k_star.push(None);
                    gamma_at_kstar.push(None);
                }
            }
        }
        let mut abias = Vec::with_capacity(width);
        let mut rmse = Vec::with_capacity(width);
        let mut included = Vec::with_capacity(width);
        let mut misses = Vec::with_capacity(width);
        for j in 0..width {
            let (mut s, mut s2, mut m) = (0.0, 0.0, 0usize);
            for row in &estimates {
                if let Some(g) = row[j] {
                    s += g;
                    s2 += (g - g1).powi(2);
                    m += 1;
                }
            }
            abias.push((s / m as f64 - g1).abs());
            rmse.push((s2 / m as f64).sqrt());
            included.push(m);
            misses.push(reps.len() - m);
        }
        estimators.push(EstimatorSummary {
            method,
            k_min: config.k_min,
            abias,
            rmse,
            included,
            misses,
            estimates,
            k_star,
            gamma_at_kstar,
        });
    }

    let semi = config.estimators.contains(&Method::Semi);
    Ok(MonteCarloSummary {
        config: config.clone(),
        spec: *spec,
        p: truncation_probability(spec)?,
        mean_n_observed: reps.iter().map(|r| r.n_observed as f64).sum::<f64>()
            / reps.len().max(1) as f64,
        cmle_failures: if semi {
            reps.iter().filter(|r| r.theta_hat.is_none()).count()
        } else {
            0
        },
        cmle_nonconverged: if semi {
            reps.iter()
                .filter(|r| r.theta_hat.is_some() && !r.cmle_converged)
                .count()
        } else {
            0
        },
        estimators,
    })
}

/// CSV with columns `estimator,k,abias,rmse`, rows sorted by `(estimator, k)`.
pub fn to_csv(summary: &MonteCarloSummary) -> String {
    let mut out = String::from("estimator,k,abias,rmse\n");
    for e in &summary.estimators {
        for (j, k) in e.ks().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                e.method,
                k,
                g6(e.abias[j]),
                g6(e.rmse[j])
            );
        }
    }
    out
}

pub fn emit_csv(summary: &MonteCarloSummary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv(summary)).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}

/// One row per estimator: mode of `k*`, mean and RMSE at each replication's
/// own `k*`.
pub fn format_table(summary: &MonteCarloSummary) -> String {
    let s = &summary.spec;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}  gamma1={}  gamma2={}  p={}  N={}  reps={}  mean n={}",
        s.scenario,
        g6(s.gamma1),
        g6(s.gamma2),
        g6(summary.p),
        summary.config.n_drawn,
        summary.config.replications,
        g6(summary.mean_n_observed)
    );
    let _ = writeln!(
        out,
        "{:<10}{:>8}{:>10}{:>12}{:>12}{:>12}{:>8}",
        "estimator", "k*mode", "k*mean", "gamma(k*)", "abias(k*)", "rmse(k*)", "misses"
    );
    for e in &summary.estimators {
        let mean = e.mean_at_kstar();
        let _ = writeln!(
            out,
            "{:<10}{:>8}{:>10}{:>12}{:>12}{:>12}{:>8}",
            e.method.as_str(),
            e.kstar_mode().map_or("-".to_string(), |k| k.to_string()),
            g6(e.mean_kstar()),
            g6(mean),
            g6((mean - s.gamma1).abs()),
            g6(e.rmse_at_kstar(s.gamma1)),
            e.kstar_misses()
        );
    }
    if summary.cmle_failures + summary.cmle_nonconverged > 0 {
        let _ = writeln!(
            out,
            "CMLE: {} failed, {} not converged",
            summary.cmle_failures, summary.cmle_nonconverged
        );
    }
    out
}

/// Empirical `var(sqrt(k) gamma_hat)` at a fixed `k` next to the closed-form
/// `sigma^2(gamma1, gamma2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRow {
    pub method: Method,
    pub k: usize,
    pub replications: usize,
    pub empirical: f64,
    pub formula: f64,
}

pub fn variance_report(summary: &MonteCarloSummary, k: usize) -> Result<Vec<VarianceRow>> {
    let s = &summary.spec;
    let formula = asymptotic_variance(s.gamma1, s.gamma2);
    let mut rows = Vec::new();
    for e in &summary.estimators {
        let j = k
            .checked_sub(e.k_min)
            .filter(|&j| j < e.abias.len())
            .ok_or_else(|| Error::Domain(format!("k={k} outside the simulated range")))?;
        let z: Vec<f64> = e
            .estimates
            .iter()
            .filter_map(|row| row[j])
            .map(|g| (k as f64).sqrt() * (g - s.gamma1))
            .collect();
        let m = z.len() as f64;
        let mean = z.iter().sum::<f64>() / m;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        rows.push(VarianceRow {
            method: e.method,
            k,
            replications: z.len(),
            empirical: var,
            formula,
        });
    }
    Ok(rows)
}

pub fn format_variance_report(rows: &[VarianceRow]) -> String {
    let mut out = String::from("estimator,k,reps,var_sqrtk_gamma,sigma2_formula\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.method,
            r.k,
            r.replications,
            g6(r.empirical),
            g6(r.formula)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonparam::gamma1_ww;
    use crate::sampling::simulate_truncated_with;
    use crate::selection::thomas_reiss_kstar;

    fn small(reps: usize) -> ScenarioConfig {
        ScenarioConfig {
            truncation: Truncation::Gamma2(1.4),
            replications: reps,
            k_max: 40,
            master_seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn config_text() {
        let mut c = ScenarioConfig::default();
        c.apply_text("scenario = s2\n# comment\ngamma1=0.8\np=0.9\nN=500\nreps=10\nestimators=semi, ww\n\nstrict=true\n").unwrap();
        assert_eq!(c.scenario, Scenario::S2);
        assert_eq!(c.truncation, Truncation::P(0.9));
        assert_eq!((c.n_drawn, c.replications), (500, 10));
        assert_eq!(c.estimators, vec![Method::Semi, Method::Ww]);
        assert!(c.strict);
        assert!(matches!(
            c.apply_text("bogus=1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(c.apply_text("gamma1"), Err(Error::Parse { .. })));
        // p = 0.9 is out of reach with Fréchet truncation
        assert!(matches!(c.resolve(), Err(Error::Validation(_))));
    }

    #[test]
    fn single_replication_matches_manual_pipeline() {
        let c = small(1);
        let spec = c.resolve().unwrap();
        let summary = run_scenario(&c).unwrap();

        let mut stream = rng::stream(7, 0);
        let pairs = simulate_truncated_with(
            &spec.target_model().unwrap(),
            &spec.truncation_model().unwrap(),
            300,
            &mut stream,
        );
        let sample = TruncatedSample::new(pairs).unwrap();
        let ww = summary.estimator(Method::Ww).unwrap();
        for (j, k) in ww.ks().enumerate() {
            let direct = gamma1_ww(&sample, k).unwrap().gamma1_hat;
            assert_eq!(ww.estimates[0][j], Some(direct));
            assert_eq!(ww.abias[j], (direct - 0.6).abs());
            assert_eq!(ww.rmse[j], (direct - 0.6).abs());
        }
        let curve: Vec<f64> = (1..=40)
            .map(|k| {
                ProductLimitTail::new(&sample, ProductLimitKind::LyndenBell)
                    .unwrap()
                    .estimate(k)
                    .unwrap()
            })
            .collect();
        assert_eq!(
            ww.k_star[0],
            Some(thomas_reiss_kstar(&curve, 0.3).unwrap().k_star)
        );
    }

    #[test]
    fn rmse_dominates_abias_and_counts_add_up() {
        let s = run_scenario(&small(20)).unwrap();
        assert_eq!(
            s.estimators.iter().map(|e| e.method).collect::<Vec<_>>(),
            vec![Method::Bmn, Method::Semi, Method::Ww]
        );
        for e in &s.estimators {
            assert_eq!(e.abias.len(), 39);
            for j in 0..e.abias.len() {
                assert!(e.rmse[j] >= e.abias[j] - 1e-15);
                assert_eq!(e.included[j] + e.misses[j], 20);
            }
        }
    }

    #[test]
    fn csv_shape() {
        let mut c = small(2);
        c.estimators = vec![];
        assert_eq!(
            to_csv(&run_scenario(&c).unwrap()),
            "estimator,k,abias,rmse\n"
        );
        c.estimators = vec![Method::Bmn];
        c.k_max = 3;
        let csv = to_csv(&run_scenario(&c).unwrap());
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("bmn,2,"));
    }

    #[test]
    fn misses_when_sample_is_short() {
        let mut c = small(3);
        c.n_drawn = 20;
        c.k_max = 30;
        c.estimators = vec![Method::Ww];
        let s = run_scenario(&c).unwrap();
        let e = &s.estimators[0];
        assert_eq!(*e.misses.last().unwrap(), 3);
        assert!(e.k_star.iter().all(|k| k.is_some()));
    }

    #[test]
    fn variance_report_shape() {
        let s = run_scenario(&small(10)).unwrap();
        let rows = variance_report(&s, 20).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows
            .iter()
            .all(|r| r.empirical > 0.0 && r.replications == 10));
        assert!(variance_report(&s, 1).is_err());
        assert!(format_variance_report(&rows).starts_with("estimator,k,reps"));
        assert!(format_table(&s).contains("semi"));
    }
}
