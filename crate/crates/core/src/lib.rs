//! Simulation framework for catalysis-based quantum authentication and key
//! distribution.
//!
//! * [`schmidt`]: majorization, catalysis, conversion probability and
//!   optimal conversion fidelity on Schmidt coefficients.
//! * [`state`]: dense pure states, partial traces and projective tests.
//! * [`protocol`]: authentication rounds between Alice and Bob.
//! * [`adversary`]: Eve's interposition strategies and key ledger.
//! * [`harness`]: seeded Monte Carlo experiments, reports and state search.

pub mod adversary;
pub mod harness;
pub mod protocol;
pub mod schmidt;
pub mod state;
