use catalysis_auth::adversary::{AttackKind, AttackStrategy, DosMode};
use catalysis_auth::harness::{
    feasible, run_experiment, run_report, search_states, sweep, ExperimentConfig, OutputFormat, SweepAxis,
};
use catalysis_auth::protocol::{Seat, StateProfile};

fn config(k: u32, k_prime: u32, kind: AttackKind, budget: u32, trials: u32) -> ExperimentConfig {
    ExperimentConfig::new(k, k_prime, AttackStrategy::new(kind, budget), trials, 17)
}

#[test]
fn passive_trials_never_abort() {
    let mut cfg = config(30, 5, AttackKind::Passive, 0, 1000);
    cfg.rounds_per_trial = 3;
    let stats = run_experiment(&cfg).unwrap();
    assert_eq!(stats.detected, 0);
    assert_eq!(stats.undetected_rate, 1.0);
    assert_eq!(stats.key_growth_per_round, 40.0);
    assert!(stats.ci_high < 0.01);
}

#[test]
fn rates_add_up() {
    let cfg = config(20, 4, AttackKind::TypeI { option: 3 }, 4, 2000);
    let stats = run_experiment(&cfg).unwrap();
    assert!((stats.detection_rate + stats.undetected_rate - 1.0).abs() < 1e-12);
    assert!(stats.ci_low <= stats.detection_rate && stats.detection_rate <= stats.ci_high);
    let binned: u64 = stats.eve_fraction_histogram.iter().map(|b| b.count).sum();
    assert_eq!(binned, stats.trials - stats.detected);
}

#[test]
fn k_prime_sweep_follows_closed_form() {
    let p0 = StateProfile::standard().p0;
    let cfg = config(201, 10, AttackKind::Impersonation { target: Seat::Alice }, 0, 8000);
    let table = sweep(&cfg, SweepAxis::KPrime, &[10, 50, 100]).unwrap();
    assert_eq!(table.monotone, Some(true));
    for row in &table.rows {
        let expected = 1.0 - p0.powi(row.config.k_prime as i32);
        let se = (expected * (1.0 - expected) / 8000.0).sqrt();
        assert!(
            (row.stats.detection_rate - expected).abs() < 4.0 * se,
            "K' = {}: {} vs {expected}",
            row.config.k_prime,
            row.stats.detection_rate
        );
    }
}

#[test]
fn zero_budget_type_one_is_undetected() {
    let cfg = config(20, 4, AttackKind::TypeI { option: 3 }, 3, 200);
    let table = sweep(&cfg, SweepAxis::L, &[0]).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].stats.detected, 0);
    assert_eq!(table.monotone, None);
}

#[test]
fn empty_sweep_is_rejected() {
    let cfg = config(20, 4, AttackKind::Passive, 0, 10);
    assert!(sweep(&cfg, SweepAxis::K, &[]).is_err());
}

#[test]
fn csv_report_has_fixed_columns() {
    let cfg = config(20, 4, AttackKind::TypeII { case: 2 }, 5, 100);
    let text = run_report(&cfg).unwrap().render(OutputFormat::Csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "strategy,K,K_prime,L,trials,detected,detection_rate,ci_low,ci_high,eve_fraction_mean,key_growth,\
         rounds_per_trial,master_seed"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..5], &["type2:2", "20", "4", "5", "100"]);
    assert_eq!(row[12], "17");
    assert!(lines.next().is_none());
}

#[test]
fn json_report_carries_config() {
    let cfg = config(20, 4, AttackKind::DenialOfService { mode: DosMode::Garbage }, 0, 50);
    let text = run_report(&cfg).unwrap().render(OutputFormat::Json).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["config"]["strategy"], "dos:garbage");
    assert_eq!(v["config"]["master_seed"], 17);
    assert_eq!(v["stats"]["detected"], 50);
    assert!(v["stats"].get("runtime_secs").is_none());
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    let mut cfg = config(40, 6, AttackKind::TypeII { case: 3 }, 7, 25);
    cfg.output_format = OutputFormat::Json;
    std::fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(ExperimentConfig::load(&path).unwrap(), cfg);
}

#[test]
fn search_starts_from_default_pair() {
    let r = search_states(5, 1, 0).unwrap();
    let default = catalysis_auth::schmidt::protocol_states();
    assert_eq!(r.challenge, default.challenge);
    assert_eq!(r.catalyst, default.catalyst);
    assert!((r.p0 - 0.9907).abs() < 5e-4);
    assert!(!r.improved);
}

#[test]
fn search_output_satisfies_constraints() {
    for (dim, seed) in [(4, 1), (5, 2), (6, 3)] {
        let r = search_states(dim, 3000, seed).unwrap();
        assert!(r.fallback || r.challenge.dim() == dim);
        assert!(feasible(&r.challenge, &r.catalyst));
        let p0 = catalysis_auth::schmidt::optimal_fidelity(&r.challenge, &r.catalyst).fidelity;
        assert!((p0 - r.p0).abs() < 1e-12);
    }
    let r = search_states(6, 3000, 3).unwrap();
    assert!(r.p0 <= StateProfile::standard().p0);
    assert!(search_states(3, 10, 0).is_err());
    assert!(search_states(5, 0, 0).is_err());
}
