//! Schmidt-coefficient algebra for bipartite pure states.
//!
//! A bipartite pure state is characterised, up to local unitaries, by its
//! ordered Schmidt coefficients. Everything the protocol needs to know about
//! LOCC convertibility lives at this level:
//!
//! * deterministic conversion `x -> y` is possible iff `y` majorizes `x`;
//! * the Schmidt coefficients of a product of two pairs are the pairwise
//!   products of their coefficients;
//! * the best exact conversion probability is the minimum ratio of tail sums;
//! * the best average fidelity of a deterministic approximate conversion is
//!   reached by a pure state whose coefficients are block-wise proportional to
//!   the target.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used when comparing cumulative sums.
pub const MAJORIZATION_TOL: f64 = 1e-12;

/// Tolerance on the normalisation of a Schmidt vector.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchmidtError {
    #[error("at least one weight must be strictly positive")]
    AllZero,
    #[error("weight {index} is negative or not finite ({value})")]
    InvalidWeight { index: usize, value: f64 },
}

/// Ordered, normalised vector of Schmidt coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SchmidtVector(Vec<f64>);

impl SchmidtVector {
    /// Normalises and sorts non-negative weights. Trailing zeros are kept so
    /// the caller controls the dimension.
    pub fn new(weights: &[f64]) -> Result<Self, SchmidtError> {
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(SchmidtError::InvalidWeight { index, value });
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(SchmidtError::AllZero);
        }
        let mut coefficients: Vec<f64> = weights.iter().map(|w| w / total).collect();
        coefficients.sort_by(|a, b| b.total_cmp(a));
        Ok(SchmidtVector(coefficients))
    }

    /// The one-dimensional vector `(1)`, i.e. a product state.
    pub fn trivial() -> Self {
        SchmidtVector(vec![1.0])
    }

    /// Uniform vector `(1/n, ..., 1/n)` (maximally entangled pair).
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "dimension must be positive");
        SchmidtVector(vec![1.0 / n as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Number of strictly positive coefficients.
    pub fn rank(&self) -> usize {
        self.0.iter().filter(|&&x| x > 0.0).count()
    }

    /// Copy zero-padded to dimension `n` (no-op if already at least `n`).
    pub fn padded(&self, n: usize) -> Self {
        let mut v = self.0.clone();
        if v.len() < n {
            v.resize(n, 0.0);
        }
        SchmidtVector(v)
    }

    /// Cumulative sums `Σ_{i<=k} x_i` for every `k`.
    pub fn prefix_sums(&self) -> Vec<f64> {
        self.0
            .iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }

    /// Tail sums `E_l = Σ_{i>=l} x_i`, accumulated from the end.
    pub fn tail_sums(&self) -> Vec<f64> {
        let mut tails = vec![0.0; self.0.len()];
        let mut acc = 0.0;
        for (i, &x) in self.0.iter().enumerate().rev() {
            acc += x;
            tails[i] = acc;
        }
        tails
    }
}

impl TryFrom<Vec<f64>> for SchmidtVector {
    type Error = SchmidtError;

    fn try_from(value: Vec<f64>) -> Result<Self, Self::Error> {
        SchmidtVector::new(&value)
    }
}

impl From<SchmidtVector> for Vec<f64> {
    fn from(value: SchmidtVector) -> Self {
        value.0
    }
}

impl std::fmt::Display for SchmidtVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Normalises and sorts raw weights into a [`SchmidtVector`].
pub fn make_schmidt(weights: &[f64]) -> Result<SchmidtVector, SchmidtError> {
    SchmidtVector::new(weights)
}

fn pad_pair(x: &SchmidtVector, y: &SchmidtVector) -> (SchmidtVector, SchmidtVector) {
    let n = x.dim().max(y.dim());
    (x.padded(n), y.padded(n))
}

/// True iff `y` majorizes `x`, i.e. `x -> y` is possible by deterministic LOCC.
pub fn majorizes(y: &SchmidtVector, x: &SchmidtVector) -> bool {
    let (y, x) = pad_pair(y, x);
    let (ys, xs) = (y.prefix_sums(), x.prefix_sums());
    let n = ys.len();
    let dominated = ys.iter().zip(&xs).all(|(sy, sx)| *sy >= *sx - MAJORIZATION_TOL);
    dominated && (ys[n - 1] - xs[n - 1]).abs() <= MAJORIZATION_TOL
}

/// Schmidt coefficients of the product of two pairs.
pub fn tensor_schmidt(x: &SchmidtVector, y: &SchmidtVector) -> SchmidtVector {
    let mut products = Vec::with_capacity(x.dim() * y.dim());
    for &a in x.as_slice() {
        for &b in y.as_slice() {
            products.push(a * b);
        }
    }
    products.sort_by(|a, b| b.total_cmp(a));
    SchmidtVector(products)
}

/// True iff `gamma` enables the otherwise impossible deterministic conversion
/// `b -> c`.
pub fn is_catalyst(gamma: &SchmidtVector, b: &SchmidtVector, c: &SchmidtVector) -> bool {
    !majorizes(c, b) && majorizes(&tensor_schmidt(c, gamma), &tensor_schmidt(b, gamma))
}

/// Maximal probability of converting `b` exactly into `c` by LOCC.
///
/// Minimum over `l` of `E_l(b) / E_l(c)`; indices where the target tail is
/// empty do not constrain the conversion.
pub fn conversion_probability(b: &SchmidtVector, c: &SchmidtVector) -> f64 {
    if majorizes(c, b) {
        return 1.0;
    }
    let (b, c) = pad_pair(b, c);
    let (tb, tc) = (b.tail_sums(), c.tail_sums());
    let mut p: f64 = 1.0;
    for (eb, ec) in tb.iter().zip(&tc) {
        if *ec > MAJORIZATION_TOL {
            p = p.min(eb / ec);
        }
    }
    p.clamp(0.0, 1.0)
}

/// Fidelity `(Σ √(x_i y_i))²` between two pure states written in a common
/// Schmidt basis with aligned ordering.
pub fn aligned_fidelity(x: &SchmidtVector, y: &SchmidtVector) -> f64 {
    let (x, y) = pad_pair(x, y);
    let overlap: f64 = x.as_slice().iter().zip(y.as_slice()).map(|(a, b)| (a * b).sqrt()).sum();
    (overlap * overlap).min(1.0)
}

/// Result of [`optimal_fidelity`].
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityOptimum {
    pub fidelity: f64,
    /// Pure state reachable from `b` by deterministic LOCC that achieves `fidelity`.
    pub target: SchmidtVector,
}

/// Largest average fidelity with `c` reachable from `b` by deterministic LOCC
/// without entanglement assistance.
///
/// Candidates are built for every set of breakpoints splitting `1..n` into
/// consecutive blocks: inside a block the candidate is proportional to `c`
/// and carries the same mass as `b` on that block. Blocks where `c` has no
/// mass copy `b`. The best sorted candidate that majorizes `b` wins. The
/// candidate with every breakpoint set is `b` itself, so a feasible answer
/// always exists. Cost is `O(n 2^(n-1))`.
pub fn optimal_fidelity(b: &SchmidtVector, c: &SchmidtVector) -> FidelityOptimum {
    if majorizes(c, b) {
        return FidelityOptimum {
            fidelity: 1.0,
            target: c.padded(b.dim()),
        };
    }
    let (b, c) = pad_pair(b, c);
    let n = b.dim();
    let (bs, cs) = (b.as_slice(), c.as_slice());
    let mut candidate = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>)> = None;

    for mask in 0u64..(1u64 << (n - 1)) {
        let mut start = 0;
        for end in 1..=n {
            let cut = end == n || mask & (1 << (end - 1)) != 0;
            if !cut {
                continue;
            }
            let b_mass: f64 = bs[start..end].iter().sum();
            let c_mass: f64 = cs[start..end].iter().sum();
            for i in start..end {
                candidate[i] = if c_mass > 0.0 { cs[i] * b_mass / c_mass } else { bs[i] };
            }
            start = end;
        }
        let sorted = candidate.windows(2).all(|w| w[0] >= w[1] - MAJORIZATION_TOL);
        if !sorted || !prefix_dominates(&candidate, bs) {
            continue;
        }
        let overlap: f64 = candidate.iter().zip(cs).map(|(x, y)| (x * y).sqrt()).sum();
        let fidelity = overlap * overlap;
        if best.as_ref().is_none_or(|(f, _)| fidelity > *f) {
            best = Some((fidelity, candidate.clone()));
        }
    }

    let (fidelity, target) = best.expect("b itself is always a feasible candidate");
    FidelityOptimum {
        fidelity: fidelity.min(1.0),
        target: SchmidtVector::new(&target).expect("candidate carries b's mass"),
    }
}

fn prefix_dominates(y: &[f64], x: &[f64]) -> bool {
    let (mut sy, mut sx) = (0.0, 0.0);
    for (a, b) in y.iter().zip(x) {
        sy += a;
        sx += b;
        if sy < sx - MAJORIZATION_TOL {
            return false;
        }
    }
    (sy - sx).abs() <= MAJORIZATION_TOL
}

/// Everything the protocol needs to know about converting `b` into `c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConversionReport {
    pub deterministic: bool,
    pub probability: f64,
    pub fidelity: f64,
    pub optimal_target: SchmidtVector,
}

pub fn conversion_report(b: &SchmidtVector, c: &SchmidtVector) -> ConversionReport {
    let optimum = optimal_fidelity(b, c);
    ConversionReport {
        deterministic: majorizes(c, b),
        probability: conversion_probability(b, c),
        fidelity: optimum.fidelity,
        optimal_target: optimum.target,
    }
}

/// The challenge state `b` and the catalyst state `c` used by the protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub challenge: SchmidtVector,
    pub catalyst: SchmidtVector,
}

/// Default five-level challenge/catalyst pair: `b -> c` is impossible
/// deterministically but `b ⊗ c -> c ⊗ c` is.
pub fn protocol_states() -> StatePair {
    StatePair {
        challenge: SchmidtVector(vec![0.31, 0.31, 0.30, 0.04, 0.04]),
        catalyst: SchmidtVector(vec![0.48, 0.24, 0.14, 0.14, 0.0]),
    }
}
