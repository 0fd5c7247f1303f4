//! Command-line front end for `trunctail`.
//!
//! Exit status: 0 on success, 1 for invalid input or usage, 2 when the
//! numerics fail.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trunctail::cmle::{fit_cmle, CmleOptions};
use trunctail::distributions::{Family, ParametricModel};
use trunctail::format::g6;
use trunctail::harness::{self, ScenarioConfig};
use trunctail::nonparam::{ProductLimitKind, ProductLimitTail};
use trunctail::sampling::{
    load_sample, parse_columns, solve_gamma2, truncation_probability, SampleFormat, Scenario,
    ScenarioSpec, TruncatedSample, DEFAULT_DELTA,
};
use trunctail::selection::{
    aids_pipeline, aids_transform, thomas_reiss_kstar, weissman_quantile, AidsOptions, AidsRecord,
    DEFAULT_AIDS_EPSILON, DEFAULT_END_EPSILON, DEFAULT_K_MAX, DEFAULT_THETA_EXPONENT,
};
use trunctail::semiparam::{
    confidence_interval, gamma1_semi_from_cdf, tail_process_from_cdf, SemiparamCdf,
    DEFAULT_GRID_SIZE,
};
use trunctail::{Error, Method, Result, TailFit};

#[derive(Parser)]
#[command(
    name = "trunctail",
    version,
    about = "Tail-index estimation under random right truncation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo study: ABIAS/RMSE per k and a k* summary table.
    Simulate(SimulateArgs),
    /// Solve for the truncation tail index that gives a target observed fraction.
    #[command(name = "solve-gamma2")]
    SolveGamma2 {
        /// Scenario S1..S4.
        #[arg(long)]
        family: Scenario,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        gamma1: f64,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
    },
    /// Conditional MLE of the truncation-model parameters.
    #[command(name = "fit-cmle")]
    FitCmle {
        #[command(flatten)]
        data: DataArgs,
        /// burr, frechet or frechet2.
        #[arg(long)]
        family: Family,
        /// Single starting point instead of the default grid.
        #[arg(long, value_delimiter = ',')]
        init: Option<Vec<f64>>,
    },
    /// Tail-index estimate at a given or data-driven k.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        method: Method,
        #[command(flatten)]
        k: KArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Also print a normal interval at this level (semi only).
        #[arg(long)]
        level: Option<f64>,
    },
    /// Weissman extreme quantile from the semiparametric fit.
    Quantile {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        v: f64,
        #[command(flatten)]
        k: KArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Kolmogorov–Smirnov and Cramér–von Mises statistics of the tail process.
    Gof {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
        grid: usize,
    },
    /// AIDS induction-time analysis from (infection, induction) records.
    Aids {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_AIDS_EPSILON)]
        epsilon: f64,
        #[arg(long = "epsilon-end", default_value_t = DEFAULT_END_EPSILON)]
        epsilon_end: f64,
        /// Truncation parameters a,r; fitted by CMLE when omitted.
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        /// Tail probability; 1/(2n) when omitted.
        #[arg(long)]
        v: Option<f64>,
        #[arg(long = "k-max", default_value_t = DEFAULT_K_MAX)]
        k_max: usize,
        #[arg(long = "theta-exponent", default_value_t = DEFAULT_THETA_EXPONENT)]
        theta_exponent: f64,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Comma-separated two-column file.
    #[arg(long)]
    data: PathBuf,
    /// `pairs` for (x, y) or `aids` for (infection, induction) records.
    #[arg(long, default_value = "pairs", value_parser = parse_format)]
    format: SampleFormat,
}

#[derive(Args)]
struct KArgs {
    #[arg(long, conflicts_with = "auto_k")]
    k: Option<usize>,
    /// Choose k by the Thomas–Reiss rule.
    #[arg(long = "auto-k")]
    auto_k: bool,
    #[arg(long = "k-max", default_value_t = DEFAULT_K_MAX)]
    k_max: usize,
    #[arg(long = "theta-exponent", default_value_t = DEFAULT_THETA_EXPONENT)]
    theta_exponent: f64,
}

#[derive(Args)]
struct ModelArgs {
    /// Truncation parameters; fitted by CMLE when omitted.
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    /// Truncation family for the semiparametric estimator.
    #[arg(long, default_value = "frechet2")]
    family: Family,
}

#[derive(Args)]
struct SimulateArgs {
    /// key=value file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long, conflicts_with = "gamma2")]
    p: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Pre-truncation sample size N.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long = "k-min")]
    k_min: Option<usize>,
    #[arg(long = "k-max")]
    k_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "theta-exponent")]
    theta_exponent: Option<f64>,
    /// Comma-separated subset of semi,bmn,ww.
    #[arg(long)]
    estimators: Option<String>,
    /// Drop semiparametric estimates whose CMLE did not converge.
    #[arg(long)]
    strict: bool,
    /// Write the ABIAS/RMSE curves here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also report var(sqrt(k) gamma_hat) at this k.
    #[arg(long = "variance-k")]
    variance_k: Option<usize>,
}

fn parse_format(s: &str) -> std::result::Result<SampleFormat, String> {
    match s {
        "pairs" => Ok(SampleFormat::Pairs),
        "aids" => Ok(SampleFormat::Aids),
        other => Err(format!("unknown format '{other}' (pairs, aids)")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::SolveGamma2 {
            family,
            p,
            gamma1,
            delta,
        } => {
            let g2 = solve_gamma2(family, p, gamma1, delta)?;
            let achieved = truncation_probability(&ScenarioSpec::new(family, gamma1, g2, delta)?)?;
            println!("gamma2 = {}", g2_line(g2));
            println!(
                "p = {}  (|p - target| = {})",
                g6(achieved),
                g6((achieved - p).abs())
            );
            Ok(())
        }
        Command::FitCmle { data, family, init } => {
            let sample = load(&data)?;
            let fit = fit_cmle(&sample, family, init.as_deref(), &CmleOptions::default())?;
            println!("family = {}", family.name());
            println!("n = {}", sample.n());
            println!("theta_hat = {}", join(&fit.theta_hat));
            println!("log_likelihood = {}", g6(fit.log_likelihood));
            println!("converged = {}", fit.converged);
            println!("evaluations = {}", fit.evaluations);
            Ok(())
        }
        Command::Estimate {
            data,
            method,
            k,
            model,
            level,
        } => {
            let sample = load(&data)?;
            let fit = estimate(&sample, method, &k, &model)?;
            print_fit(&fit);
            if let Some(level) = level {
                let theta = fit
                    .theta_hat
                    .as_ref()
                    .ok_or_else(|| Error::Validation("--level needs --method semi".into()))?;
                let g2 = ParametricModel::from_params(model.family, theta)?.tail_index();
                let (lo, hi) = confidence_interval(&fit, g2, level)?;
                println!("interval = [{}, {}]", g6(lo), g6(hi));
            }
            Ok(())
        }
        Command::Quantile { data, v, k, model } => {
            let sample = load(&data)?;
            let (cdf, truncation) = semi_cdf(&sample, &model)?;
            let fit = semi_fit(&cdf, &truncation, &k)?;
            let q = weissman_quantile(&cdf, &fit, v)?;
            print_fit(&fit);
            println!("tail_fraction = {}", g6(cdf.survival(fit.threshold)));
            println!("q_v = {}", g6(q));
            Ok(())
        }
        Command::Gof {
            data,
            k,
            model,
            grid,
        } => {
            let sample = load(&data)?;
            let (cdf, truncation) = semi_cdf(&sample, &model)?;
            let fit = semi_fit(&cdf, &truncation, &KArgs::fixed(k))?;
            let curve = tail_process_from_cdf(&cdf, k, fit.gamma1_hat, grid)?;
            print_fit(&fit);
            println!("ks = {}", g6(curve.ks_stat));
            println!("cvm = {}", g6(curve.cvm_stat));
            Ok(())
        }
        Command::Aids {
            data,
            epsilon,
            epsilon_end,
            theta,
            v,
            k_max,
            theta_exponent,
        } => {
            let text = std::fs::read_to_string(&data).map_err(|source| Error::Io {
                path: data.clone(),
                source,
            })?;
            let records: Vec<AidsRecord> = parse_columns(&text)?
                .into_iter()
                .map(|(m, t)| AidsRecord {
                    infection: m,
                    induction: t,
                })
                .collect();
            let sample = aids_transform(&records, epsilon)?;
            let report = aids_pipeline(
                &sample,
                &AidsOptions {
                    theta,
                    theta_exponent,
                    k_max,
                    v,
                    epsilon_end,
                },
            )?;
            println!("n = {}", report.n);
            println!("theta_hat = {}", join(&report.theta_hat));
            println!("k_star = {}", report.k_star);
            println!("threshold = {}", g6(report.threshold));
            println!("gamma1_hat = {}", g6(report.gamma1_hat));
            println!("tail_fraction = {}", g6(report.tail_fraction));
            println!("v = {}", g6(report.v));
            match (report.q_v, report.t_end) {
                (Some(q), Some(t)) => {
                    println!("q_v = {}", g6(q));
                    println!("t_end = {}", g6(t));
                }
                _ => println!("q_v = undefined (v is not below the tail fraction)"),
            }
            Ok(())
        }
    }
}

fn g2_line(g2: f64) -> String {
    format!(
        "{}  (bisection to relative 1e-12, p quadrature to 1e-10)",
        g6(g2)
    )
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| g6(*x)).collect::<Vec<_>>().join(",")
}

fn load(data: &DataArgs) -> Result<TruncatedSample> {
    load_sample(&data.data, data.format)
}

impl KArgs {
    fn fixed(k: usize) -> Self {
        Self {
            k: Some(k),
            auto_k: false,
            k_max: DEFAULT_K_MAX,
            theta_exponent: DEFAULT_THETA_EXPONENT,
        }
    }

    /// Resolve `k` from a curve `k -> estimate` defined on `1..=k_max`.
    fn resolve(&self, n: usize, estimate: impl Fn(usize) -> Result<f64>) -> Result<usize> {
        match (self.k, self.auto_k) {
            (Some(k), _) => Ok(k),
            (None, true) => {
                let k_max = self.k_max.min(n.saturating_sub(1));
                let curve = (1..=k_max).map(&estimate).collect::<Result<Vec<f64>>>()?;
                Ok(thomas_reiss_kstar(&curve, self.theta_exponent)?.k_star)
            }
            (None, false) => Err(Error::Validation("give --k or --auto-k".into())),
        }
    }
}

fn semi_cdf(
    sample: &TruncatedSample,
    model: &ModelArgs,
) -> Result<(SemiparamCdf, ParametricModel)> {
    let theta = match &model.theta {
        Some(t) => t.clone(),
        None => fit_cmle(sample, model.family, None, &CmleOptions::default())?.theta_hat,
    };
    let truncation = ParametricModel::from_params(model.family, &theta)?;
    Ok((SemiparamCdf::new(sample, &truncation)?, truncation))
}

fn semi_fit(cdf: &SemiparamCdf, truncation: &ParametricModel, k: &KArgs) -> Result<TailFit> {
    let k = k.resolve(cdf.n(), |k| cdf.estimate(k))?;
    gamma1_semi_from_cdf(cdf, truncation, k)
}

fn estimate(
    sample: &TruncatedSample,
    method: Method,
    k: &KArgs,
    model: &ModelArgs,
) -> Result<TailFit> {
    match method {
        Method::Semi => {
            let (cdf, truncation) = semi_cdf(sample, model)?;
            semi_fit(&cdf, &truncation, k)
        }
        Method::Bmn | Method::Ww => {
            let kind = if method == Method::Bmn {
                ProductLimitKind::Woodroofe
            } else {
                ProductLimitKind::LyndenBell
            };
            let tail = ProductLimitTail::new(sample, kind)?;
            let k = k.resolve(tail.n(), |k| tail.estimate(k))?;
            tail.fit(k)
        }
    }
}

fn print_fit(fit: &TailFit) {
    println!("method = {}", fit.method);
    println!("k = {}", fit.k);
    println!("threshold = {}", g6(fit.threshold));
    println!("gamma1_hat = {}", g6(fit.gamma1_hat));
    if let Some(theta) = &fit.theta_hat {
        println!("theta_hat = {}", join(theta));
    }
    if let Some(se) = fit.stderr {
        println!("stderr = {}", g6(se));
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut config = ScenarioConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        config.apply_text(&text)?;
    }
    let overrides: [(&str, Option<String>); 12] = [
        ("scenario", args.scenario),
        ("gamma1", args.gamma1.map(|v| v.to_string())),
        ("p", args.p.map(|v| v.to_string())),
        ("gamma2", args.gamma2.map(|v| v.to_string())),
        ("delta", args.delta.map(|v| v.to_string())),
        ("n", args.n.map(|v| v.to_string())),
        ("replications", args.replications.map(|v| v.to_string())),
        ("k_min", args.k_min.map(|v| v.to_string())),
        ("k_max", args.k_max.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("theta_exponent", args.theta_exponent.map(|v| v.to_string())),
        ("estimators", args.estimators),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            config.set(key, &v)?;
        }
    }
    if args.strict {
        config.strict = true;
    }
    let summary = harness::run_scenario(&config)?;
    print!("{}", harness::format_table(&summary));
    if let Some(k) = args.variance_k {
        print!(
            "{}",
            harness::format_variance_report(&harness::variance_report(&summary, k)?)
        );
    }
    match &args.out {
        Some(path) => harness::emit_csv(&summary, path)?,
        None => print!("{}", harness::to_csv(&summary)),
    }
    Ok(())
}
