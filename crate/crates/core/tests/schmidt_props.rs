mod common;

use catalysis_auth::schmidt::{
    conversion_probability, is_catalyst, majorizes, optimal_fidelity, protocol_states, tensor_schmidt, SchmidtVector,
};
use proptest::prelude::*;

fn schmidt(max_dim: usize) -> impl Strategy<Value = SchmidtVector> {
    prop::collection::vec(0.001f64..1.0, 1..=max_dim).prop_map(|w| SchmidtVector::new(&w).unwrap())
}

fn same_dim_pair(max_dim: usize) -> impl Strategy<Value = (SchmidtVector, SchmidtVector)> {
    (2..=max_dim).prop_flat_map(|n| {
        (
            prop::collection::vec(0.001f64..1.0, n),
            prop::collection::vec(0.0f64..1.0, n),
        )
            .prop_filter("c needs mass", |(_, c)| c.iter().sum::<f64>() > 1e-3)
            .prop_map(|(b, c)| (SchmidtVector::new(&b).unwrap(), SchmidtVector::new(&c).unwrap()))
    })
}

#[test]
fn barrier_oracle_reproduces_known_values() {
    let states = protocol_states();
    let f = common::barrier_optimal_fidelity(states.challenge.as_slice(), states.catalyst.as_slice());
    assert!((f - 0.990_670_443_777_030_4).abs() < 1e-9, "{f}");
    let f = common::barrier_optimal_fidelity(&[0.8, 0.2], &[0.5, 0.5]);
    assert!((f - 0.9).abs() < 1e-9, "{f}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn majorization_reflexive_and_antisymmetric(x in schmidt(6), y in schmidt(6)) {
        prop_assert!(majorizes(&x, &x));
        if majorizes(&x, &y) && majorizes(&y, &x) {
            let n = x.dim().max(y.dim());
            for (a, b) in x.padded(n).as_slice().iter().zip(y.padded(n).as_slice()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn uniform_is_majorized_by_everything(x in schmidt(6)) {
        prop_assert!(majorizes(&x, &SchmidtVector::uniform(x.dim())));
    }

    #[test]
    fn tensor_identity_and_commutativity(x in schmidt(5), y in schmidt(5)) {
        prop_assert_eq!(tensor_schmidt(&x, &SchmidtVector::trivial()), x.clone());
        let xy = tensor_schmidt(&x, &y);
        let yx = tensor_schmidt(&y, &x);
        prop_assert_eq!(xy.dim(), x.dim() * y.dim());
        for (a, b) in xy.as_slice().iter().zip(yx.as_slice()) {
            prop_assert!((a - b).abs() < 1e-15);
        }
        prop_assert!((xy.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn probability_one_iff_deterministic((b, c) in same_dim_pair(6)) {
        let p = conversion_probability(&b, &c);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(p == 1.0, majorizes(&c, &b));
    }

    #[test]
    fn fidelity_bounds((b, c) in same_dim_pair(6)) {
        let opt = optimal_fidelity(&b, &c);
        prop_assert!(majorizes(&opt.target, &b));
        prop_assert_eq!(opt.fidelity == 1.0, majorizes(&c, &b));
        prop_assert!(conversion_probability(&b, &c) <= opt.fidelity + 1e-12);
    }

    #[test]
    fn catalysis_soundness(gamma in schmidt(4), (b, c) in same_dim_pair(4)) {
        if is_catalyst(&gamma, &b, &c) {
            prop_assert!(majorizes(&tensor_schmidt(&c, &gamma), &tensor_schmidt(&b, &gamma)));
            prop_assert!(!majorizes(&c, &b));
        }
    }

    #[test]
    fn enumeration_matches_barrier_oracle((b, c) in same_dim_pair(5)) {
        let enumerated = optimal_fidelity(&b, &c).fidelity;
        let oracle = common::barrier_optimal_fidelity(b.as_slice(), c.as_slice());
        prop_assert!((enumerated - oracle).abs() < 1e-9, "enum {} oracle {}", enumerated, oracle);
    }
}
