use std::collections::BTreeMap;

use serde::Serialize;

use crate::protocol::AbortReason;

const Z95: f64 = 1.959_963_984_540_054;

/// What happened in one independent trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub detected: bool,
    /// Round (1-based) of the first abort.
    pub abort_round: Option<u32>,
    pub abort_reason: Option<AbortReason>,
    pub rounds_run: u32,
    pub key_delta: i64,
    pub pairs_with_alice: u32,
    pub pairs_with_bob: u32,
    pub eve_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub eve_fraction: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentStats {
    pub trials: u64,
    pub detected: u64,
    pub detection_rate: f64,
    pub standard_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub undetected_rate: f64,
    /// Mean Eve fraction over undetected trials.
    pub eve_fraction_mean: f64,
    /// Undetected trials by Eve fraction.
    pub eve_fraction_histogram: Vec<HistogramBin>,
    /// Mean change of the key store per round run.
    pub key_growth_per_round: f64,
    #[serde(skip)]
    pub runtime_secs: f64,
}

/// 95% interval for a binomial proportion: normal approximation, or Wilson
/// when either count is below 30.
pub fn binomial_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    if successes < 30 || trials - successes < 30 {
        let z2 = Z95 * Z95;
        let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        ((centre - half).max(0.0), (centre + half).min(1.0))
    } else {
        let half = Z95 * (p * (1.0 - p) / n).sqrt();
        ((p - half).max(0.0), (p + half).min(1.0))
    }
}

pub fn aggregate(outcomes: &[TrialOutcome], k: u32) -> ExperimentStats {
    let trials = outcomes.len() as u64;
    let detected = outcomes.iter().filter(|o| o.detected).count() as u64;
    let n = trials.max(1) as f64;
    let rate = detected as f64 / n;
    let (ci_low, ci_high) = binomial_interval(detected, trials);

    let mut bins: BTreeMap<u32, u64> = BTreeMap::new();
    let mut pair_sum: u64 = 0;
    for o in outcomes.iter().filter(|o| !o.detected) {
        let pairs = o.pairs_with_alice.max(o.pairs_with_bob);
        *bins.entry(pairs).or_default() += 1;
        pair_sum += u64::from(pairs);
    }
    let undetected = trials - detected;
    let rounds: u64 = outcomes.iter().map(|o| u64::from(o.rounds_run)).sum();
    let delta: i64 = outcomes.iter().map(|o| o.key_delta).sum();

    ExperimentStats {
        trials,
        detected,
        detection_rate: rate,
        standard_error: (rate * (1.0 - rate) / n).sqrt(),
        ci_low,
        ci_high,
        undetected_rate: 1.0 - rate,
        eve_fraction_mean: if undetected > 0 {
            pair_sum as f64 / (undetected as f64 * f64::from(k))
        } else {
            0.0
        },
        eve_fraction_histogram: bins
            .into_iter()
            .map(|(pairs, count)| HistogramBin {
                eve_fraction: f64::from(pairs) / f64::from(k),
                count,
            })
            .collect(),
        key_growth_per_round: if rounds > 0 { delta as f64 / rounds as f64 } else { 0.0 },
        runtime_secs: 0.0,
    }
}
