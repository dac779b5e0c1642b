//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use catalysis_auth::adversary::{AttackKind, AttackStrategy, DosMode};
use catalysis_auth::harness::{
    run_report, run_trials, verify_constants, ExperimentConfig, OutputFormat, SweepAxis, TrialOutcome,
};
use catalysis_auth::protocol::{AbortReason, Honest, RoundConfig, RoundOutcome, Seat, Session};
use catalysis_auth::schmidt::{optimal_fidelity, protocol_states};
use catalysis_auth::state::{embed_schmidt, random_unitary, reduced_state, DensityOperator, MultipartiteState};

use common::{barrier_optimal_fidelity, random_schmidt};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn p0() -> f64 {
    let pair = protocol_states();
    optimal_fidelity(&pair.challenge, &pair.catalyst).fidelity
}

fn sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn undetected_rate(outcomes: &[TrialOutcome]) -> f64 {
    outcomes.iter().filter(|o| !o.detected).count() as f64 / outcomes.len() as f64
}

fn config(k: u32, k_prime: u32, kind: AttackKind, budget: u32, trials: u32, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(k, k_prime, AttackStrategy::new(kind, budget), trials, seed)
}

fn constants() -> Verdict {
    let start = Instant::now();
    let report = verify_constants();
    let elapsed = start.elapsed();
    let values: Vec<String> = report
        .checks
        .iter()
        .map(|c| format!("{}={}", c.name, c.value))
        .collect();
    verdict(
        report.all_passed() && elapsed < Duration::from_secs(1),
        format!("{} in {:.3}s", values.join(", "), elapsed.as_secs_f64()),
    )
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c1e);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let n = 2 + trial % 4;
        let b = random_schmidt(&mut rng, n);
        let c = random_schmidt(&mut rng, n);
        let fast = optimal_fidelity(&b, &c).fidelity;
        let slow = barrier_optimal_fidelity(b.as_slice(), c.as_slice());
        worst = worst.max((fast - slow).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-6 && elapsed < Duration::from_secs(60),
        format!(
            "max |enumeration - barrier| = {worst:.2e} over 100 pairs in {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn honest_completeness() -> Verdict {
    let (k, k_prime) = (100u32, 10u32);
    let mut session = Session::new(RoundConfig::new(k, k_prime, 1000), 1).unwrap();
    session.set_recording(false);
    let growth = 2 * k as usize - 4 * k_prime as usize;
    for n in 1..=1000usize {
        let r = session.run_round(&mut Honest).unwrap();
        if r.outcome != RoundOutcome::Success {
            return verdict(false, format!("round {n} aborted: {:?}", r.outcome));
        }
        let expected = 2 * k as usize + n * growth;
        for seat in [Seat::Alice, Seat::Bob] {
            if session.key_size(seat) != expected {
                return verdict(
                    false,
                    format!("round {n}: {seat:?} key {} != {expected}", session.key_size(seat)),
                );
            }
        }
    }
    let genuine = session.key_store().genuine();
    verdict(
        genuine == session.key_size(Seat::Bob) && session.check_conservation().is_ok(),
        format!(
            "1000 rounds, 0 aborts, key size {} = 200 + 1000*160, all pairs genuine",
            genuine
        ),
    )
}

fn impersonation_bound() -> Verdict {
    let start = Instant::now();
    let k_prime = 50;
    let cfg = config(
        2 * k_prime + 1,
        k_prime,
        AttackKind::Impersonation { target: Seat::Alice },
        0,
        100_000,
        4,
    );
    let outcomes = run_trials(&cfg).unwrap();
    let elapsed = start.elapsed();
    let rate = 1.0 - undetected_rate(&outcomes);
    let stated = 1.0 - 0.9907f64.powi(50);
    let exact = 1.0 - p0().powi(50);
    let se = sigma(stated, outcomes.len());
    let ok = (rate - stated).abs() < 3.0 * se && (rate - exact).abs() < 3.0 * se;
    verdict(
        ok && elapsed < Duration::from_secs(60),
        format!(
            "detection {rate:.5} vs 1-0.9907^50 = {stated:.5} (1-p0^50 = {exact:.5}), 3SE = {:.5}, {:.1}s",
            3.0 * se,
            elapsed.as_secs_f64()
        ),
    )
}

fn type_one_bound() -> Verdict {
    let l = 5;
    let cfg = config(100, 10, AttackKind::TypeI { option: 3 }, l, 100_000, 5);
    let outcomes = run_trials(&cfg).unwrap();
    let rate = undetected_rate(&outcomes);
    let bound = p0().powi(l as i32);
    let s = sigma(bound, outcomes.len());
    let thefts_ok = outcomes.iter().filter(|o| !o.detected).all(|o| o.pairs_with_bob <= l);
    verdict(
        (rate - bound).abs() < 3.0 * s && rate <= bound + 3.0 * s && thefts_ok,
        format!("L={l}: undetected {rate:.5} vs p0^L = {bound:.5}, 3σ = {:.5}", 3.0 * s),
    )
}

fn type_two_bound() -> Verdict {
    let (k, k_prime, l) = (100u32, 10u32, 50u32);
    let p0 = p0();
    let cfg = config(k, k_prime, AttackKind::TypeII { case: 2 }, l, 100_000, 6);
    let outcomes = run_trials(&cfg).unwrap();
    let n = outcomes.len();
    let rate = undetected_rate(&outcomes);
    let exponent = f64::from(l * k_prime) / f64::from(k);
    let bound = p0.powf(exponent);
    let s = sigma(bound, n);
    let cap = f64::from(l) / f64::from(k);
    let fraction_ok = outcomes
        .iter()
        .filter(|o| !o.detected)
        .all(|o| o.eve_fraction <= cap + 1e-12);

    let mut histogram = std::collections::BTreeMap::new();
    for o in outcomes.iter().filter(|o| !o.detected) {
        *histogram
            .entry(o.pairs_with_alice.max(o.pairs_with_bob))
            .or_insert(0u64) += 1;
    }
    let mut tail_ok = true;
    let mut tail = Vec::new();
    for (&pairs, &count) in &histogram {
        let e = f64::from(pairs) / f64::from(k);
        let p_e = count as f64 / n as f64;
        let limit = p0.powf(e * f64::from(k_prime));
        tail_ok &= p_e <= limit + 3.0 * sigma(limit, n);
        tail.push(format!("p(e={e:.2})={p_e:.5}<=p0^(eK')={limit:.5}"));
    }
    verdict(
        (rate - bound).abs() < 3.0 * s && fraction_ok && tail_ok,
        format!(
            "L={l}: undetected {rate:.5} vs p0^(LK'/K) = {bound:.5}, 3σ = {:.5}; e <= L/K in all undetected; {}",
            3.0 * s,
            tail.join(", ")
        ),
    )
}

fn trace_invariance() -> Verdict {
    let c = protocol_states().catalyst;
    let pair = embed_schmidt(&c);
    let joint = MultipartiteState::product(&[&pair, &pair]);
    let expected = DensityOperator::diagonal(&c).tensor(&DensityOperator::diagonal(&c));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u = random_unitary(c.dim() * c.dim(), &mut rng);
        let moved = joint.apply_unitary(&[0, 2], &u).unwrap();
        let bob = reduced_state(&moved, &[1, 3]).unwrap();
        worst = worst.max(bob.max_abs_diff(&expected));
    }
    verdict(
        worst < 1e-9,
        format!("max deviation of Bob's reduced state {worst:.2e} over 100 unitaries"),
    )
}

fn flood_rule() -> Verdict {
    let k_prime = 10;
    let flood = config(
        100,
        k_prime,
        AttackKind::DenialOfService { mode: DosMode::Flood },
        0,
        100,
        8,
    );
    let flood_out = run_trials(&flood).unwrap();
    let flood_hits = flood_out
        .iter()
        .filter(|o| o.abort_reason == Some(AbortReason::RequestFlood))
        .count();

    let theft = config(100, k_prime, AttackKind::TypeI { option: 3 }, k_prime + 1, 100, 9);
    let theft_out = run_trials(&theft).unwrap();
    let theft_aborts = theft_out.iter().filter(|o| o.detected).count();
    let theft_floods = theft_out
        .iter()
        .filter(|o| o.abort_reason == Some(AbortReason::RequestFlood))
        .count();
    verdict(
        flood_hits == 100 && theft_aborts == 100,
        format!(
            "K'+1 requests: {flood_hits}/100 flood aborts; type I with L=K'+1: {theft_aborts}/100 aborted \
             ({theft_floods} by the flood rule, the rest by a failed test first)"
        ),
    )
}

fn reproducibility() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(40, 5, AttackKind::TypeII { case: 2 }, 10, 2000, 99);
    cfg.rounds_per_trial = 2;
    let mut same = true;
    for format in [OutputFormat::Csv, OutputFormat::Json] {
        let paths = [dir.path().join("a"), dir.path().join("b")];
        for path in &paths {
            run_report(&cfg).unwrap().write(path, format).unwrap();
        }
        same &= std::fs::read(&paths[0]).unwrap() == std::fs::read(&paths[1]).unwrap();
    }
    let values = [1, 4, 8];
    let a = catalysis_auth::harness::sweep(&cfg, SweepAxis::L, &values).unwrap();
    let b = catalysis_auth::harness::sweep(&cfg, SweepAxis::L, &values).unwrap();
    for format in [OutputFormat::Csv, OutputFormat::Json] {
        same &= a.render(format).unwrap() == b.render(format).unwrap();
    }
    verdict(
        same,
        "repeated experiment and sweep reports are byte-identical (csv, json)",
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("constants", constants),
        ("optimal-fidelity oracle", oracle_equivalence),
        ("honest completeness", honest_completeness),
        ("impersonation bound", impersonation_bound),
        ("type I bound", type_one_bound),
        ("type II bound", type_two_bound),
        ("partial-trace invariance", trace_invariance),
        ("request-flood rule", flood_rule),
        ("reproducibility", reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.passed {
            failures += 1;
        }
        println!(
            "criterion {} {name}: {} ({})",
            i + 1,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if failures == 0 {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
