//! Seeded Monte Carlo experiments over sessions and attacks.
//!
//! Every trial is an independent session whose seed is derived from the
//! master seed and the trial index, so results do not depend on how trials
//! are scheduled across threads.

mod config;
mod report;
mod search;
mod stats;
mod verify;

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::adversary::Eve;
use crate::protocol::{ProtocolError, RoundOutcome, Session};

pub use config::{trial_seed, ExperimentConfig, OutputFormat};
pub use report::{ExperimentReport, SweepAxis, SweepTable};
pub use search::{feasible, search_states, SearchResult};
pub use stats::{aggregate, binomial_interval, ExperimentStats, HistogramBin, TrialOutcome};
pub use verify::{verify_constants, Check, CheckValue, VerifyReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Runs `rounds_per_trial` rounds of one session against the configured
/// strategy. The trial counts as detected if any round aborts.
pub fn run_trial(config: &ExperimentConfig, seed: u64) -> Result<TrialOutcome, HarnessError> {
    let mut session = Session::new(config.round_config(seed), config.initial_key_sets)?;
    session.set_recording(false);
    let mut eve = Eve::new(config.attack(), seed);
    eve.attach(&mut session);

    let mut outcome = TrialOutcome {
        seed,
        detected: false,
        abort_round: None,
        abort_reason: None,
        rounds_run: 0,
        key_delta: 0,
        pairs_with_alice: 0,
        pairs_with_bob: 0,
        eve_fraction: 0.0,
    };
    for _ in 0..config.rounds_per_trial {
        if session.is_terminated() {
            break;
        }
        let result = session.run_round(&mut eve)?;
        outcome.rounds_run += 1;
        outcome.key_delta += result.key_delta;
        if let RoundOutcome::Aborted { reason, .. } = result.outcome {
            if !outcome.detected {
                outcome.detected = true;
                outcome.abort_round = Some(session.round());
                outcome.abort_reason = Some(reason);
            }
        }
    }
    let ledger = eve.ledger();
    outcome.pairs_with_alice = ledger.pairs_with_alice;
    outcome.pairs_with_bob = ledger.pairs_with_bob;
    outcome.eve_fraction = ledger.eve_fraction(config.k);
    Ok(outcome)
}

/// All trials of `config`, in trial order.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialOutcome>, HarnessError> {
    config.validate()?;
    (0..u64::from(config.trials))
        .into_par_iter()
        .map(|i| run_trial(config, trial_seed(config.master_seed, i)))
        .collect()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentStats, HarnessError> {
    let start = Instant::now();
    let outcomes = run_trials(config)?;
    let mut stats = aggregate(&outcomes, config.k);
    stats.runtime_secs = start.elapsed().as_secs_f64();
    Ok(stats)
}

pub fn run_report(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    Ok(ExperimentReport {
        config: config.clone(),
        stats: run_experiment(config)?,
    })
}

/// One experiment per value of `axis`, everything else fixed.
pub fn sweep(config: &ExperimentConfig, axis: SweepAxis, values: &[u32]) -> Result<SweepTable, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Config("sweep needs at least one value".into()));
    }
    let rows = values
        .iter()
        .map(|&v| {
            let mut c = config.clone();
            match axis {
                SweepAxis::KPrime => c.k_prime = v,
                SweepAxis::L => c.attack_budget = v,
                SweepAxis::K => c.k = v,
            }
            run_report(&c)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let monotone = (axis == SweepAxis::KPrime).then(|| {
        let mut by_k_prime: Vec<&ExperimentReport> = rows.iter().collect();
        by_k_prime.sort_by_key(|r| r.config.k_prime);
        by_k_prime.windows(2).all(|w| {
            let (a, b) = (&w[0].stats, &w[1].stats);
            let slack = 3.0 * a.standard_error.max(b.standard_error);
            b.detection_rate + slack >= a.detection_rate
        })
    });
    Ok(SweepTable { axis, rows, monotone })
}
