//! Randomly right-truncated samples: simulation, the observed fraction `p`,
//! and reading pairs from delimited text.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::distributions::{Family, ParametricModel};
use crate::quadrature::{self, QuadOptions};
use crate::rng;
use crate::selection::{aids_transform, AidsRecord, DEFAULT_AIDS_EPSILON};
use crate::{Error, Result};

/// Observed pairs `(x_i, y_i)` with `x_i <= y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSample {
    pairs: Vec<(f64, f64)>,
    n_drawn: usize,
    seed: Option<u64>,
}

impl TruncatedSample {
    /// Validate and wrap observed pairs. Rows are reported 1-based.
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        let bad: Vec<String> = pairs
            .iter()
            .enumerate()
            .filter(|(_, &(x, y))| !(x.is_finite() && y.is_finite() && x > 0.0 && x <= y))
            .map(|(i, _)| (i + 1).to_string())
            .collect();
        if !bad.is_empty() {
            return Err(Error::Validation(format!(
                "pairs must satisfy 0 < x <= y (finite); offending rows: {}",
                bad.join(", ")
            )));
        }
        Ok(Self {
            pairs,
            n_drawn: 0,
            seed: None,
        })
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    /// Number of retained pairs.
    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Number of pre-truncation draws; 0 when the sample was read from a file.
    pub fn n_drawn(&self) -> usize {
        self.n_drawn
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|p| p.0)
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|p| p.1)
    }

    /// The x-sample in ascending order.
    pub fn sorted_x(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.xs().collect();
        xs.sort_by(f64::total_cmp);
        xs
    }

    /// Multiply every coordinate by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            pairs: self.pairs.iter().map(|&(x, y)| (c * x, c * y)).collect(),
            ..self.clone()
        }
    }
}

/// The four model pairings of the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    /// Burr truncated by Burr.
    S1,
    /// Fréchet truncated by Fréchet.
    S2,
    /// Fréchet truncated by Burr.
    S3,
    /// Burr truncated by Fréchet.
    S4,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4];

    /// Family of the variable of interest `X`.
    pub fn target_family(self) -> Family {
        match self {
            Scenario::S1 | Scenario::S4 => Family::Burr,
            Scenario::S2 | Scenario::S3 => Family::Frechet,
        }
    }

    /// Family of the truncation variable `Y`.
    pub fn truncation_family(self) -> Family {
        match self {
            Scenario::S1 | Scenario::S3 => Family::Burr,
            Scenario::S2 | Scenario::S4 => Family::Frechet,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::S1 => "S1",
            Scenario::S2 => "S2",
            Scenario::S3 => "S3",
            Scenario::S4 => "S4",
        };
        f.write_str(s)
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Ok(Scenario::S1),
            "S2" => Ok(Scenario::S2),
            "S3" => Ok(Scenario::S3),
            "S4" => Ok(Scenario::S4),
            other => Err(Error::Validation(format!(
                "unknown scenario '{other}' (expected S1..S4)"
            ))),
        }
    }
}

pub const DEFAULT_DELTA: f64 = 0.25;

/// A scenario with its tail indices resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta: f64,
}

impl ScenarioSpec {
    /// Requires `0 < gamma1 < gamma2` and `delta > 0`.
    pub fn new(scenario: Scenario, gamma1: f64, gamma2: f64, delta: f64) -> Result<Self> {
        let spec = Self {
            scenario,
            gamma1,
            gamma2,
            delta,
        };
        spec.target_model()?;
        spec.truncation_model()?;
        if !(gamma1 < gamma2) {
            return Err(Error::Validation(format!(
                "need gamma1 < gamma2, got gamma1={gamma1}, gamma2={gamma2}"
            )));
        }
        Ok(spec)
    }

    fn model(family: Family, gamma: f64, delta: f64) -> Result<ParametricModel> {
        match family {
            Family::Burr => ParametricModel::burr(gamma, delta),
            Family::Frechet => ParametricModel::frechet(gamma),
            Family::Frechet2 => unreachable!("scenarios use one-parameter Fréchet"),
        }
    }

    /// Model of `X` (tail index `gamma1`).
    pub fn target_model(&self) -> Result<ParametricModel> {
        Self::model(self.scenario.target_family(), self.gamma1, self.delta)
    }

    /// Model of `Y` (tail index `gamma2`).
    pub fn truncation_model(&self) -> Result<ParametricModel> {
        Self::model(self.scenario.truncation_family(), self.gamma2, self.delta)
    }

    /// True parameter vector of the truncation model.
    pub fn truncation_theta(&self) -> Vec<f64> {
        match self.scenario.truncation_family() {
            Family::Burr => vec![self.gamma2, self.delta],
            _ => vec![self.gamma2],
        }
    }
}

/// Draw `n_drawn` independent pairs and keep those with `x <= y`.
pub fn simulate_truncated_with<R: Rng + ?Sized>(
    target: &ParametricModel,
    truncation: &ParametricModel,
    n_drawn: usize,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    let mut pairs = Vec::with_capacity(n_drawn);
    for _ in 0..n_drawn {
        let x = target.sample(rng);
        // a draw beyond the float range still truncates nothing
        let y = truncation.sample(rng).min(f64::MAX);
        if x <= y && x > 0.0 {
            pairs.push((x, y));
        }
    }
    pairs
}

/// Simulate a truncated sample of `n_drawn` pre-truncation pairs.
pub fn simulate_truncated(
    spec: &ScenarioSpec,
    n_drawn: usize,
    seed: u64,
) -> Result<TruncatedSample> {
    if n_drawn == 0 {
        return Err(Error::Validation("N must be at least 1".into()));
    }
    let mut stream = rng::stream(seed, 0);
    let pairs = simulate_truncated_with(
        &spec.target_model()?,
        &spec.truncation_model()?,
        n_drawn,
        &mut stream,
    );
    Ok(TruncatedSample {
        pairs,
        n_drawn,
        seed: Some(seed),
    })
}

/// Wrap simulated pairs with their provenance.
pub(crate) fn from_simulation(
    pairs: Vec<(f64, f64)>,
    n_drawn: usize,
    seed: Option<u64>,
) -> TruncatedSample {
    TruncatedSample {
        pairs,
        n_drawn,
        seed,
    }
}

/// `P(X <= Y) = \int F dG` for independent `X ~ target`, `Y ~ truncation`.
///
/// Integrated as `\int_0^1 F(G^{-1}(v)) dv`, which stays on a bounded
/// integrand even when `G` spreads its mass over many orders of magnitude.
pub fn observed_fraction(target: &ParametricModel, truncation: &ParametricModel) -> Result<f64> {
    let opts = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 0.0,
        max_intervals: 5000,
    };
    let r = quadrature::integrate(
        |v| target.cdf_unchecked(truncation.quantile_unchecked(v)),
        0.0,
        1.0,
        opts,
    )?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// `\int_0^\infty f(w) Gbar(w) dw` via the substitution `w = u / (1 - u)`.
///
/// Kept as an independent route to [`observed_fraction`]: it integrates
/// against the target density rather than the truncation quantile.
pub fn observed_fraction_half_line(
    target: &ParametricModel,
    truncation: &ParametricModel,
) -> Result<f64> {
    let opts = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 0.0,
        max_intervals: 5000,
    };
    let r = quadrature::integrate_half_line(
        |w| {
            if w <= 0.0 || !w.is_finite() {
                return 0.0;
            }
            (target.ln_density(w) + truncation.ln_survival(w)).exp()
        },
        opts,
    )?;
    Ok(r.value)
}

/// Observed fraction `p` for a scenario.
pub fn truncation_probability(spec: &ScenarioSpec) -> Result<f64> {
    observed_fraction(&spec.target_model()?, &spec.truncation_model()?)
}

const GAMMA2_MAX: f64 = 1e3;
const BRACKET_POINTS: usize = 120;

/// Solve `p(gamma2) = p_target` over `gamma2 in (gamma1, 1000]`.
///
/// Scans a log-spaced bracket, checks that `p` increases along it, and then
/// bisects the first sign change.
pub fn solve_gamma2(scenario: Scenario, p_target: f64, gamma1: f64, delta: f64) -> Result<f64> {
    if !(p_target > 0.5 && p_target < 1.0) {
        return Err(Error::Domain(format!(
            "p_target must lie in (0.5, 1), got {p_target}"
        )));
    }
    if !(gamma1 > 0.0 && gamma1.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma1 must be > 0, got {gamma1}"
        )));
    }
    if gamma1 >= GAMMA2_MAX {
        return Err(Error::Domain(format!("gamma1 must be below {GAMMA2_MAX}")));
    }
    let target = ScenarioSpec::model(scenario.target_family(), gamma1, delta)?;
    let p_at = |g2: f64| -> Result<f64> {
        let trunc = ScenarioSpec::model(scenario.truncation_family(), g2, delta)?;
        observed_fraction(&target, &trunc)
    };

    let lo = gamma1 * (1.0 + 1e-9);
    let ratio = (GAMMA2_MAX / lo).powf(1.0 / (BRACKET_POINTS - 1) as f64);
    let mut grid = Vec::with_capacity(BRACKET_POINTS);
    for i in 0..BRACKET_POINTS {
        let g = if i + 1 == BRACKET_POINTS {
            GAMMA2_MAX
        } else {
            lo * ratio.powi(i as i32)
        };
        grid.push((g, p_at(g)? - p_target));
    }
    let Some(j) = grid.windows(2).position(|w| w[0].1 <= 0.0 && w[1].1 >= 0.0) else {
        let (pmin, pmax) = grid
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, v)| {
                (a.min(v), b.max(v))
            });
        return Err(Error::Numerical(format!(
            "unreachable p: {p_target} is outside [{:.6}, {:.6}] attained by {scenario} over \
             gamma2 in ({gamma1}, {GAMMA2_MAX}]",
            pmin + p_target,
            pmax + p_target
        )));
    };
    if grid[..=j + 1].windows(2).any(|w| w[1].1 < w[0].1 - 1e-9) {
        return Err(Error::Numerical(format!(
            "p is not increasing in gamma2 on ({gamma1}, {}] for {scenario}",
            grid[j + 1].0
        )));
    }

    let (mut a, mut b) = (grid[j].0, grid[j + 1].0);
    let (mut fa, fb) = (grid[j].1, grid[j + 1].1);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = p_at(m)? - p_target;
        if fm == 0.0 || (b - a) < 1e-12 * m {
            return Ok(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Column layout of an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    /// Columns `(x, y)` of already-truncated pairs.
    Pairs,
    /// Columns `(m, t)`: infection time and induction time in years,
    /// transformed with the default epsilon.
    Aids,
}

/// Parse comma-delimited two-column numeric text. A non-numeric first row is
/// taken as a header. Blank lines are skipped.
pub fn parse_columns(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rows = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let line_no = i + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Vec<std::result::Result<f64, _>> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        if first {
            first = false;
            if parsed.iter().any(|p| p.is_err()) {
                continue;
            }
        }
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 2 columns, found {}", fields.len()),
            });
        }
        match (&parsed[0], &parsed[1]) {
            (Ok(a), Ok(b)) => rows.push((*a, *b)),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-numeric field in '{line}'"),
                })
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Validation("no data rows".into()));
    }
    Ok(rows)
}

/// Read a truncated sample from a file.
pub fn load_sample(path: impl AsRef<Path>, format: SampleFormat) -> Result<TruncatedSample> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    let rows = parse_columns(&text)?;
    match format {
        SampleFormat::Pairs => TruncatedSample::new(rows),
        SampleFormat::Aids => {
            let records: Vec<AidsRecord> = rows
                .into_iter()
                .map(|(m, t)| AidsRecord {
                    infection: m,
                    induction: t,
                })
                .collect();
            aids_transform(&records, DEFAULT_AIDS_EPSILON)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_models_give_one_half() {
        for m in [
            ParametricModel::burr(0.6, 0.25).unwrap(),
            ParametricModel::frechet(1.4).unwrap(),
            ParametricModel::frechet2(0.5, 3.0).unwrap(),
        ] {
            let p = observed_fraction(&m, &m).unwrap();
            assert!((p - 0.5).abs() < 1e-9, "{m:?}: {p}");
        }
    }

    #[test]
    fn burr_pair_has_closed_form() {
        // same delta: P(X <= Y) = gamma2 / (gamma1 + gamma2)
        for &(g1, g2) in &[(0.6, 1.4), (0.6, 5.4), (0.8, 1.9), (0.8, 7.2)] {
            let spec = ScenarioSpec::new(Scenario::S1, g1, g2, 0.25).unwrap();
            let p = truncation_probability(&spec).unwrap();
            assert!((p - g2 / (g1 + g2)).abs() < 1e-8, "{g1},{g2}: {p}");
        }
    }

    #[test]
    fn two_quadrature_routes_agree() {
        for s in Scenario::ALL {
            for &(g1, g2) in &[(0.6, 1.4), (0.8, 1.9), (0.6, 5.4)] {
                let spec = ScenarioSpec::new(s, g1, g2, 0.25).unwrap();
                let (f, g) = (
                    spec.target_model().unwrap(),
                    spec.truncation_model().unwrap(),
                );
                let a = observed_fraction(&f, &g).unwrap();
                let b = observed_fraction_half_line(&f, &g).unwrap();
                assert!((a - b).abs() < 1e-7, "{s} {g1} {g2}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn solve_round_trips() {
        for s in Scenario::ALL {
            for &p in &[0.55, 0.6] {
                match solve_gamma2(s, p, 0.6, 0.25) {
                    Ok(g2) => {
                        let spec = ScenarioSpec::new(s, 0.6, g2, 0.25).unwrap();
                        let back = truncation_probability(&spec).unwrap();
                        assert!((back - p).abs() < 1e-6, "{s} p={p}: {back}");
                    }
                    Err(e) => assert!(s == Scenario::S3, "{s} p={p}: {e}"),
                }
            }
        }
    }

    #[test]
    fn solve_near_symmetry_limit() {
        let g2 = solve_gamma2(Scenario::S1, 0.5 + 1e-4, 0.6, 0.25).unwrap();
        assert!((g2 - 0.6).abs() < 1e-3);
    }

    #[test]
    fn solve_reports_unreachable() {
        // Fréchet truncation cannot retain 90%
        let e = solve_gamma2(Scenario::S2, 0.9, 0.8, 0.25).unwrap_err();
        assert!(e.to_string().contains("unreachable"), "{e}");
        assert!(solve_gamma2(Scenario::S2, 0.4, 0.8, 0.25).is_err());
    }

    #[test]
    fn simulation_is_deterministic() {
        let spec = ScenarioSpec::new(Scenario::S1, 0.6, 1.4, 0.25).unwrap();
        let a = simulate_truncated(&spec, 300, 5).unwrap();
        let b = simulate_truncated(&spec, 300, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_drawn(), 300);
        assert!(a.n() <= 300);
        assert!(a.pairs().iter().all(|&(x, y)| x <= y));
        let c = simulate_truncated(&spec, 300, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn retained_fraction_near_p() {
        let spec = ScenarioSpec::new(Scenario::S2, 0.6, 1.4, 0.25).unwrap();
        let p = truncation_probability(&spec).unwrap();
        let sd = (p * (1.0 - p) / 300.0).sqrt();
        for seed in 0..20 {
            let s = simulate_truncated(&spec, 300, seed).unwrap();
            let frac = s.n() as f64 / 300.0;
            assert!((frac - p).abs() < 3.3 * sd, "seed {seed}: {frac} vs {p}");
        }
    }

    #[test]
    fn far_right_truncation_retains_almost_all() {
        let spec = ScenarioSpec::new(Scenario::S1, 0.6, 100.0, 0.25).unwrap();
        let s = simulate_truncated(&spec, 20_000, 1).unwrap();
        assert!(s.n() as f64 / 20_000.0 > 0.99);
    }

    #[test]
    fn spec_rejects_bad_ordering() {
        assert!(ScenarioSpec::new(Scenario::S1, 0.8, 0.6, 0.25).is_err());
        assert!(ScenarioSpec::new(Scenario::S1, 0.6, 1.4, 0.0).is_err());
    }

    #[test]
    fn parse_with_and_without_header() {
        let rows = parse_columns("1,3\n2,4\n").unwrap();
        assert_eq!(rows, vec![(1.0, 3.0), (2.0, 4.0)]);
        let rows = parse_columns("x,y\n1,3\n\n2,4\n").unwrap();
        assert_eq!(rows.len(), 2);
        let s = TruncatedSample::new(rows).unwrap();
        assert_eq!(s.n(), 2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_columns("x,y\n1,3\n2,abc\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_columns("1,3\n2,4,5\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_columns("x,y\n"), Err(Error::Validation(_))));
        assert!(matches!(parse_columns(""), Err(Error::Validation(_))));
    }

    #[test]
    fn violating_rows_are_named() {
        let e = TruncatedSample::new(vec![(1.0, 3.0), (5.0, 4.0), (2.0, 1.0)]).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("2, 3"), "{msg}");
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        std::fs::write(&p, "x,y\n1,3\n2,4\n").unwrap();
        let s = load_sample(&p, SampleFormat::Pairs).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.n_drawn(), 0);
        std::fs::write(&p, "5,4\n").unwrap();
        assert!(matches!(
            load_sample(&p, SampleFormat::Pairs),
            Err(Error::Validation(_))
        ));
        let missing = dir.path().join("nope.csv");
        assert!(matches!(
            load_sample(&missing, SampleFormat::Pairs),
            Err(Error::Io { .. })
        ));
    }
}
