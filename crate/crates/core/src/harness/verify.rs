use serde::Serialize;

use crate::schmidt::{conversion_probability, majorizes, optimal_fidelity, protocol_states, tensor_schmidt};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CheckValue {
    Number(f64),
    Flag(bool),
}

impl std::fmt::Display for CheckValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CheckValue::Number(x) => write!(f, "{x:.10}"),
            CheckValue::Flag(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: CheckValue,
    pub expected: &'static str,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Checks the numbers the default state pair is chosen for.
pub fn verify_constants() -> VerifyReport {
    let pair = protocol_states();
    let (b, c) = (&pair.challenge, &pair.catalyst);
    let p = conversion_probability(b, c);
    let p0 = optimal_fidelity(b, c).fidelity;
    let direct = majorizes(c, b);
    let catalysed = majorizes(&tensor_schmidt(c, c), &tensor_schmidt(b, c));
    VerifyReport {
        checks: vec![
            Check {
                name: "conversion_probability",
                value: CheckValue::Number(p),
                expected: "0.572 +/- 0.001",
                passed: (p - 0.572).abs() <= 0.001,
            },
            Check {
                name: "optimal_fidelity",
                value: CheckValue::Number(p0),
                expected: "0.9907 +/- 0.0005",
                passed: (p0 - 0.9907).abs() <= 0.0005,
            },
            Check {
                name: "direct_conversion",
                value: CheckValue::Flag(direct),
                expected: "false",
                passed: !direct,
            },
            Check {
                name: "catalysed_conversion",
                value: CheckValue::Flag(catalysed),
                expected: "true",
                passed: catalysed,
            },
        ],
    }
}
