//! Test-only oracles, independent of the library's optimisation path.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use catalysis_auth::schmidt::SchmidtVector;

/// Maximises `(Σ √(χ_i c_i))²` over probability vectors `χ` whose prefix sums
/// dominate those of `b`, with a log-barrier interior-point method.
///
/// The objective `Σ √(χ_i c_i)` is concave and the feasible set is a polytope
/// in the prefix-sum coordinates, so Newton steps on the barrier problem
/// converge to the global optimum. Requires every `b_i > 0` so the polytope
/// has an interior.
pub fn barrier_optimal_fidelity(b: &[f64], c: &[f64]) -> f64 {
    let n = b.len();
    assert_eq!(n, c.len());
    assert!(n >= 2);
    assert!(b.iter().all(|&x| x > 0.0), "oracle needs strictly positive b");

    let b_prefix: Vec<f64> = b
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();

    // interior start: midpoint of b and the first basis vector
    let mut chi: Vec<f64> = b.iter().map(|x| 0.5 * x).collect();
    chi[0] += 0.5;
    let mut x = DVector::from_iterator(n - 1, chi[..n - 1].iter().copied());

    let to_chi = |x: &DVector<f64>| -> Vec<f64> {
        let mut chi: Vec<f64> = x.iter().copied().collect();
        chi.push(1.0 - x.sum());
        chi
    };
    // slacks: prefix constraints k = 1..n-1, then positivity of every χ_i
    let slacks = |chi: &[f64]| -> Vec<f64> {
        let mut s = Vec::with_capacity(2 * n - 1);
        let mut acc = 0.0;
        for k in 0..n - 1 {
            acc += chi[k];
            s.push(acc - b_prefix[k]);
        }
        s.extend_from_slice(chi);
        s
    };
    let objective = |chi: &[f64]| -> f64 { -chi.iter().zip(c).map(|(x, y)| (x * y).sqrt()).sum::<f64>() };
    let barrier = |t: f64, chi: &[f64]| -> Option<f64> {
        let s = slacks(chi);
        if s.iter().any(|&v| v <= 0.0) {
            return None;
        }
        Some(t * objective(chi) - s.iter().map(|v| v.ln()).sum::<f64>())
    };
    assert!(barrier(1.0, &to_chi(&x)).is_some(), "start point not interior");

    // M maps x to χ - e_n
    let m = DMatrix::from_fn(n, n - 1, |i, j| {
        if i == n - 1 {
            -1.0
        } else if i == j {
            1.0
        } else {
            0.0
        }
    });
    let constraint_rows: Vec<DVector<f64>> = (0..n - 1)
        .map(|k| DVector::from_fn(n, |i, _| if i <= k { 1.0 } else { 0.0 }))
        .chain((0..n).map(|i| DVector::from_fn(n, |j, _| if j == i { 1.0 } else { 0.0 })))
        .collect();
    let constraints = constraint_rows.len() as f64;

    let mut t = 1.0;
    while constraints / t > 1e-13 {
        for _ in 0..200 {
            let chi = to_chi(&x);
            let s = slacks(&chi);
            let mut grad = DVector::<f64>::zeros(n);
            let mut hess = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                if c[i] > 0.0 {
                    grad[i] -= t * c[i].sqrt() / (2.0 * chi[i].sqrt());
                    hess[(i, i)] += t * c[i].sqrt() / (4.0 * chi[i].powf(1.5));
                }
            }
            for (row, slack) in constraint_rows.iter().zip(&s) {
                grad -= row / *slack;
                hess += row * row.transpose() / (slack * slack);
            }
            let gx = m.transpose() * &grad;
            let hx = m.transpose() * &hess * &m;
            let step = match hx.clone().cholesky() {
                Some(ch) => -ch.solve(&gx),
                None => -hx.lu().solve(&gx).expect("singular Hessian"),
            };
            let decrement = -gx.dot(&step);
            if decrement / 2.0 < 1e-15 {
                break;
            }
            let current = barrier(t, &chi).unwrap();
            let mut alpha = 1.0;
            loop {
                let candidate = &x + &step * alpha;
                if let Some(v) = barrier(t, &to_chi(&candidate)) {
                    if v <= current - 0.25 * alpha * decrement {
                        x = candidate;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-18 {
                    break;
                }
            }
        }
        t *= 4.0;
    }
    let value = -objective(&to_chi(&x));
    value * value
}

/// Uniformly random point of the simplex, sorted non-increasing.
pub fn random_schmidt<R: Rng>(rng: &mut R, n: usize) -> SchmidtVector {
    let weights: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    SchmidtVector::new(&weights).unwrap()
}
