use crate::schmidt::{
    aligned_fidelity, conversion_probability, is_catalyst, optimal_fidelity, protocol_states, SchmidtVector, StatePair,
};

use super::arena::PairState;
use super::ProtocolError;

/// Precomputed quantities for a challenge/catalyst pair, shared by every
/// session that uses it.
#[derive(Debug, Clone, PartialEq)]
pub struct StateProfile {
    pub pair: StatePair,
    /// Pure state closest to the catalyst that the challenge converts to
    /// without assistance.
    pub approximation: SchmidtVector,
    /// Fidelity of `approximation` with the catalyst: the per-test ceiling for
    /// anyone without the key.
    pub p0: f64,
    pub exact_probability: f64,
    pub challenge_fidelity: f64,
}

impl StateProfile {
    pub fn new(pair: StatePair) -> Result<Self, ProtocolError> {
        let StatePair {
            challenge: b,
            catalyst: c,
        } = &pair;
        if !is_catalyst(c, b, c) {
            return Err(ProtocolError::States(format!(
                "{c} does not catalyse the conversion {b} -> {c}"
            )));
        }
        let optimum = optimal_fidelity(b, c);
        Ok(StateProfile {
            approximation: optimum.target,
            p0: optimum.fidelity,
            exact_probability: conversion_probability(b, c),
            challenge_fidelity: aligned_fidelity(b, c),
            pair,
        })
    }

    /// Profile of the default five-level pair.
    pub fn standard() -> Self {
        Self::new(protocol_states()).expect("default states satisfy the catalysis condition")
    }

    /// Fidelity of a pair in `state` with the catalyst state.
    pub fn fidelity(&self, state: PairState) -> f64 {
        match state {
            PairState::Challenge => self.challenge_fidelity,
            PairState::Catalyst => 1.0,
            PairState::BestApproximation => self.p0,
            PairState::Forgery { fidelity } => fidelity,
        }
    }

    pub fn state_vector(&self, state: PairState) -> &SchmidtVector {
        match state {
            PairState::Challenge => &self.pair.challenge,
            PairState::Catalyst | PairState::Forgery { .. } => &self.pair.catalyst,
            PairState::BestApproximation => &self.approximation,
        }
    }

    /// Diagonal of either reduced state of a pair in `state`.
    pub fn marginal(&self, state: PairState) -> &SchmidtVector {
        self.state_vector(state)
    }
}
