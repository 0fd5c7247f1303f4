//! Stochastic properties checked over many simulated samples.

use trunctail::cmle::{fit_cmle, CmleOptions};
use trunctail::distributions::Family;
use trunctail::harness::{
    run_replication, run_scenario, summarize, to_csv, ScenarioConfig, Truncation,
};
use trunctail::sampling::{simulate_truncated, Scenario, ScenarioSpec, DEFAULT_DELTA};
use trunctail::semiparam::{gamma1_semi, tail_process, DEFAULT_GRID_SIZE};

#[test]
fn ks_statistic_stays_bounded_when_well_specified() {
    let spec = ScenarioSpec::new(Scenario::S2, 0.6, 1.4, DEFAULT_DELTA).unwrap();
    let mut ks: Vec<f64> = (0..100u64)
        .map(|seed| {
            let s = simulate_truncated(&spec, 3600, 40_000 + seed).unwrap();
            assert!(s.n() > 1800);
            let k = 100;
            let fit = gamma1_semi(&s, &[1.4], Family::Frechet, k).unwrap();
            tail_process(
                &s,
                &[1.4],
                Family::Frechet,
                k,
                fit.gamma1_hat,
                DEFAULT_GRID_SIZE,
            )
            .unwrap()
            .ks_stat
        })
        .collect();
    ks.sort_by(f64::total_cmp);
    assert!(ks[98] < 5.0, "99th percentile {}", ks[98]);
}

#[test]
fn cmle_error_shrinks_with_sample_size() {
    let spec = ScenarioSpec::new(Scenario::S2, 0.6, 1.4, DEFAULT_DELTA).unwrap();
    let err = |n_drawn: usize, seed: u64| {
        let s = simulate_truncated(&spec, n_drawn, seed).unwrap();
        (fit_cmle(&s, Family::Frechet, None, &CmleOptions::default())
            .unwrap()
            .theta_hat[0]
            - 1.4)
            .abs()
    };
    let small: Vec<f64> = (0..50).map(|i| err(1_800, 70_000 + i)).collect();
    let large: Vec<f64> = (0..50).map(|i| err(18_000, 80_000 + i)).collect();
    let median = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        0.5 * (v[24] + v[25])
    };
    assert!(median(&large) < median(&small));
    // one-sided sign test at 5%: P(Bin(50, 1/2) >= 32) < 0.05
    let wins = large.iter().zip(&small).filter(|(l, s)| l < s).count();
    assert!(wins >= 32, "{wins} of 50");
}

#[test]
fn summaries_are_reproducible_and_schedule_free() {
    let config = ScenarioConfig {
        scenario: Scenario::S3,
        truncation: Truncation::Gamma2(1.4),
        replications: 12,
        k_max: 50,
        master_seed: 5,
        ..Default::default()
    };
    let a = run_scenario(&config).unwrap();
    let spec = config.resolve().unwrap();
    // replications evaluated back to front, then merged in index order
    let mut reps: Vec<_> = (0..12)
        .rev()
        .map(|r| run_replication(&config, &spec, r).unwrap())
        .collect();
    reps.reverse();
    let b = summarize(&config, &spec, &reps).unwrap();
    assert_eq!(a, b);
    assert_eq!(to_csv(&a), to_csv(&b));
}
