use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::schmidt::{is_catalyst, majorizes, optimal_fidelity, protocol_states, SchmidtVector};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub challenge: SchmidtVector,
    pub catalyst: SchmidtVector,
    pub p0: f64,
    pub evaluations: u64,
    /// False when nothing feasible beat the starting point.
    pub improved: bool,
    /// True when no feasible pair of the requested dimension was found and
    /// the default five-level pair is returned instead.
    pub fallback: bool,
}

/// `c` cannot be reached from `b` directly but catalyses its own production.
pub fn feasible(b: &SchmidtVector, c: &SchmidtVector) -> bool {
    !majorizes(c, b) && is_catalyst(c, b, c)
}

fn project(raw: Vec<f64>) -> Option<SchmidtVector> {
    let clipped: Vec<f64> = raw.into_iter().map(|x| if x < 1e-12 { 0.0 } else { x }).collect();
    SchmidtVector::new(&clipped).ok()
}

fn perturb(x: &SchmidtVector, scale: f64, rng: &mut ChaCha8Rng) -> Option<SchmidtVector> {
    let raw = x
        .as_slice()
        .iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            v + scale * (v + 0.02) * z
        })
        .collect();
    project(raw)
}

fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> Option<SchmidtVector> {
    project((0..dim).map(|_| rng.sample::<f64, _>(Exp1)).collect())
}

/// Random local search for a challenge/catalyst pair with a lower `p0`.
///
/// The default five-level pair, padded with zeros, is the first point
/// evaluated when `dim >= 5`; otherwise the search starts from random pairs.
pub fn search_states(dim: usize, iterations: u64, seed: u64) -> Result<SearchResult, HarnessError> {
    if dim < 4 {
        return Err(HarnessError::Config(format!("dimension {dim} is below 4")));
    }
    if iterations == 0 {
        return Err(HarnessError::Config("iterations must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let default = protocol_states();
    let mut best: Option<(SchmidtVector, SchmidtVector, f64)> = None;
    let mut start_p0 = None;
    let mut evaluations = 0;

    if dim >= default.challenge.dim() {
        let b = default.challenge.padded(dim);
        let c = default.catalyst.padded(dim);
        evaluations += 1;
        if feasible(&b, &c) {
            let p0 = optimal_fidelity(&b, &c).fidelity;
            start_p0 = Some(p0);
            best = Some((b, c, p0));
        }
    }

    while evaluations < iterations {
        evaluations += 1;
        let progress = evaluations as f64 / iterations as f64;
        let candidate = match &best {
            Some((b, c, _)) => {
                let scale = 0.1 * (1.0 - progress) + 0.005;
                perturb(b, scale, &mut rng).zip(perturb(c, scale, &mut rng))
            }
            None => random_vector(dim, &mut rng).zip(random_vector(dim, &mut rng)),
        };
        let Some((b, c)) = candidate else { continue };
        if !feasible(&b, &c) {
            continue;
        }
        let p0 = optimal_fidelity(&b, &c).fidelity;
        if best.as_ref().is_none_or(|(_, _, q)| p0 < *q) {
            best = Some((b, c, p0));
        }
    }

    Ok(match best {
        Some((challenge, catalyst, p0)) => SearchResult {
            improved: start_p0.is_none_or(|s| p0 < s),
            challenge,
            catalyst,
            p0,
            evaluations,
            fallback: false,
        },
        None => {
            let p0 = optimal_fidelity(&default.challenge, &default.catalyst).fidelity;
            SearchResult {
                challenge: default.challenge,
                catalyst: default.catalyst,
                p0,
                evaluations,
                improved: false,
                fallback: true,
            }
        }
    })
}
