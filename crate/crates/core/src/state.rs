//! Dense state layer: amplitude matrices for pairs, amplitude tensors for up to
//! four particles, partial traces and projective tests.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::schmidt::SchmidtVector;

pub type C64 = Complex<f64>;

/// Tolerance for norm, trace, hermiticity and unitarity checks.
pub const STATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("state is not normalised (squared norm {0})")]
    NotNormalized(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not unitary (deviation {0})")]
    NotUnitary(f64),
    #[error("matrix is not a density operator: {0}")]
    NotDensity(&'static str),
    #[error("invalid particle index set {0:?}")]
    InvalidParticles(Vec<usize>),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
}

/// Which particle of a pair an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Pure state of two particles: `|ψ⟩ = Σ_ij Ψ_ij |i⟩|j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    amplitudes: DMatrix<C64>,
}

impl BipartiteState {
    pub fn new(amplitudes: DMatrix<C64>) -> Result<Self, StateError> {
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(BipartiteState { amplitudes })
    }

    pub fn amplitudes(&self) -> &DMatrix<C64> {
        &self.amplitudes
    }

    pub fn dims(&self) -> (usize, usize) {
        self.amplitudes.shape()
    }

    /// Row-major flattening, particle B fastest.
    pub fn to_vector(&self) -> DVector<C64> {
        let (da, db) = self.dims();
        DVector::from_fn(da * db, |k, _| self.amplitudes[(k / db, k % db)])
    }

    pub fn to_multipartite(&self) -> MultipartiteState {
        let (da, db) = self.dims();
        MultipartiteState {
            amplitudes: self.to_vector(),
            dims: vec![da, db],
        }
    }

    pub fn density(&self) -> DensityOperator {
        let v = self.to_vector();
        let (da, db) = self.dims();
        DensityOperator {
            matrix: &v * v.adjoint(),
            dims: vec![da, db],
        }
    }
}

/// `|x⟩ = Σ √x_k |k⟩|k⟩`.
pub fn embed_schmidt(x: &SchmidtVector) -> BipartiteState {
    let n = x.dim();
    let mut amplitudes = DMatrix::zeros(n, n);
    for (k, &xk) in x.as_slice().iter().enumerate() {
        amplitudes[(k, k)] = C64::new(xk.sqrt(), 0.0);
    }
    BipartiteState { amplitudes }
}

/// Squared singular values of the amplitude matrix, sorted.
pub fn schmidt_of(state: &BipartiteState) -> SchmidtVector {
    let singular = state.amplitudes.clone().svd(false, false).singular_values;
    let squares: Vec<f64> = singular.iter().map(|s| s * s).collect();
    SchmidtVector::new(&squares).expect("normalised state has non-zero singular values")
}

fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<C64>::identity(n, n)).norm()
}

fn check_unitary(u: &DMatrix<C64>, dim: usize) -> Result<(), StateError> {
    if u.nrows() != dim || u.ncols() != dim {
        return Err(StateError::DimensionMismatch {
            expected: dim,
            got: u.nrows().max(u.ncols()),
        });
    }
    let defect = unitarity_defect(u);
    if defect > STATE_TOL {
        return Err(StateError::NotUnitary(defect));
    }
    Ok(())
}

/// Applies `u` to one particle of the pair.
pub fn apply_local_unitary(state: &BipartiteState, side: Side, u: &DMatrix<C64>) -> Result<BipartiteState, StateError> {
    let (da, db) = state.dims();
    let amplitudes = match side {
        Side::A => {
            check_unitary(u, da)?;
            u * &state.amplitudes
        }
        Side::B => {
            check_unitary(u, db)?;
            &state.amplitudes * u.transpose()
        }
    };
    Ok(BipartiteState { amplitudes })
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Pure state of several particles with explicit dimension factorisation.
/// Amplitudes are stored row-major: the last particle varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipartiteState {
    amplitudes: DVector<C64>,
    dims: Vec<usize>,
}

impl MultipartiteState {
    pub fn new(amplitudes: DVector<C64>, dims: Vec<usize>) -> Result<Self, StateError> {
        let total: usize = dims.iter().product();
        if amplitudes.len() != total {
            return Err(StateError::DimensionMismatch {
                expected: total,
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(MultipartiteState { amplitudes, dims })
    }

    /// Tensor product of pairs; pair `p` contributes particles `2p` and `2p + 1`.
    pub fn product(pairs: &[&BipartiteState]) -> Self {
        let mut amplitudes = DVector::from_element(1, C64::new(1.0, 0.0));
        let mut dims = Vec::with_capacity(2 * pairs.len());
        for pair in pairs {
            amplitudes = amplitudes.kronecker(&pair.to_vector());
            let (da, db) = pair.dims();
            dims.extend([da, db]);
        }
        MultipartiteState { amplitudes, dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    /// Reshapes into a matrix whose rows index the particles in `rows` (in the
    /// given order) and whose columns index the remaining particles.
    fn split(&self, rows: &[usize]) -> Result<(DMatrix<C64>, Vec<usize>), StateError> {
        let n = self.dims.len();
        let mut seen = vec![false; n];
        for &p in rows {
            if p >= n || seen[p] {
                return Err(StateError::InvalidParticles(rows.to_vec()));
            }
            seen[p] = true;
        }
        if rows.is_empty() {
            return Err(StateError::InvalidParticles(rows.to_vec()));
        }
        let cols: Vec<usize> = (0..n).filter(|p| !seen[*p]).collect();
        let row_dim: usize = rows.iter().map(|&p| self.dims[p]).product();
        let col_dim: usize = cols.iter().map(|&p| self.dims[p]).product();
        let mut m = DMatrix::zeros(row_dim, col_dim);
        for (flat, amp) in self.amplitudes.iter().enumerate() {
            let digits = self.digits(flat);
            let r = rows.iter().fold(0, |acc, &p| acc * self.dims[p] + digits[p]);
            let c = cols.iter().fold(0, |acc, &p| acc * self.dims[p] + digits[p]);
            m[(r, c)] = *amp;
        }
        Ok((m, cols))
    }

    fn digits(&self, mut flat: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for (p, d) in self.dims.iter().enumerate().rev() {
            digits[p] = flat % d;
            flat /= d;
        }
        digits
    }

    fn merge(&mut self, m: &DMatrix<C64>, rows: &[usize], cols: &[usize]) {
        for flat in 0..self.amplitudes.len() {
            let digits = self.digits(flat);
            let r = rows.iter().fold(0, |acc, &p| acc * self.dims[p] + digits[p]);
            let c = cols.iter().fold(0, |acc, &p| acc * self.dims[p] + digits[p]);
            self.amplitudes[flat] = m[(r, c)];
        }
    }

    /// Applies `u` jointly to the particles in `targets` (composite index in
    /// the order given).
    pub fn apply_unitary(&self, targets: &[usize], u: &DMatrix<C64>) -> Result<Self, StateError> {
        let (m, cols) = self.split(targets)?;
        check_unitary(u, m.nrows())?;
        let mut out = self.clone();
        out.merge(&(u * m), targets, &cols);
        Ok(out)
    }
}

/// Reduced density operator on the particles in `keep`, tracing out the rest.
pub fn reduced_state(joint: &MultipartiteState, keep: &[usize]) -> Result<DensityOperator, StateError> {
    let (m, _) = joint.split(keep)?;
    Ok(DensityOperator {
        matrix: &m * m.adjoint(),
        dims: keep.iter().map(|&p| joint.dims[p]).collect(),
    })
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: DMatrix<C64>,
    dims: Vec<usize>,
}

impl DensityOperator {
    pub fn new(matrix: DMatrix<C64>, dims: Vec<usize>) -> Result<Self, StateError> {
        let total: usize = dims.iter().product();
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(StateError::DimensionMismatch {
                expected: total,
                got: matrix.nrows(),
            });
        }
        if (&matrix - matrix.adjoint()).norm() > STATE_TOL {
            return Err(StateError::NotDensity("not Hermitian"));
        }
        if (matrix.trace() - C64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(StateError::NotDensity("trace differs from 1"));
        }
        let rho = DensityOperator { matrix, dims };
        if rho.eigenvalues().iter().any(|&l| l < -STATE_TOL) {
            return Err(StateError::NotDensity("negative eigenvalue"));
        }
        Ok(rho)
    }

    /// Diagonal operator `diag(p)` on a single particle.
    pub fn diagonal(p: &SchmidtVector) -> Self {
        let n = p.dim();
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(p.as_slice()[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        DensityOperator { matrix, dims: vec![n] }
    }

    pub fn tensor(&self, other: &DensityOperator) -> Self {
        let mut dims = self.dims.clone();
        dims.extend(&other.dims);
        DensityOperator {
            matrix: self.matrix.kronecker(&other.matrix),
            dims,
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Eigenvalues sorted non-increasing.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eig: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        eig
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &DensityOperator) -> f64 {
        (&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Overlap of a state with the Schmidt-form target `|x⟩ = Σ √x_k |k⟩|k⟩`.
pub trait TargetFidelity {
    fn fidelity_with(&self, target: &SchmidtVector) -> Result<f64, StateError>;
}

fn target_vector(target: &SchmidtVector, da: usize, db: usize) -> Result<DVector<C64>, StateError> {
    if da != db || target.dim() > da {
        return Err(StateError::DimensionMismatch {
            expected: target.dim(),
            got: da.min(db),
        });
    }
    Ok(embed_schmidt(&target.padded(da)).to_vector())
}

impl TargetFidelity for BipartiteState {
    fn fidelity_with(&self, target: &SchmidtVector) -> Result<f64, StateError> {
        let (da, db) = self.dims();
        let t = target_vector(target, da, db)?;
        Ok(t.dotc(&self.to_vector()).norm_sqr())
    }
}

impl TargetFidelity for DensityOperator {
    fn fidelity_with(&self, target: &SchmidtVector) -> Result<f64, StateError> {
        let [da, db] = self.dims[..] else {
            return Err(StateError::DimensionMismatch {
                expected: 2,
                got: self.dims.len(),
            });
        };
        let t = target_vector(target, da, db)?;
        Ok((t.adjoint() * &self.matrix * &t)[(0, 0)].re)
    }
}

/// `⟨t|ρ_x ⊗ ρ_y|t⟩` for two unrelated particles whose marginals are diagonal
/// in the target's Schmidt basis: `Σ_k t_k x_k y_k`.
pub fn product_marginal_fidelity(x: &SchmidtVector, y: &SchmidtVector, target: &SchmidtVector) -> f64 {
    let n = x.dim().max(y.dim()).max(target.dim());
    let (x, y, t) = (x.padded(n), y.padded(n), target.padded(n));
    x.as_slice()
        .iter()
        .zip(y.as_slice())
        .zip(t.as_slice())
        .map(|((a, b), c)| a * b * c)
        .sum()
}

/// One run of a two-outcome projective test that passes with the given
/// probability.
pub fn sample_projective_test<R: Rng + ?Sized>(pass_probability: f64, rng: &mut R) -> Result<bool, StateError> {
    if !(0.0..=1.0).contains(&pass_probability) {
        return Err(StateError::ProbabilityOutOfRange(pass_probability));
    }
    Ok(rng.random::<f64>() < pass_probability)
}

/// Measures `{|t⟩⟨t|, 1 - |t⟩⟨t|}` on a stored pure state and returns the
/// outcome with the collapsed post-measurement state.
pub fn measure_projector<R: Rng + ?Sized>(
    state: &BipartiteState,
    target: &SchmidtVector,
    rng: &mut R,
) -> Result<(bool, Option<BipartiteState>), StateError> {
    let (da, db) = state.dims();
    let t = target_vector(target, da, db)?;
    let psi = state.to_vector();
    let overlap = t.dotc(&psi);
    let pass_probability = overlap.norm_sqr().min(1.0);
    let passed = sample_projective_test(pass_probability, rng)?;
    let post = if passed {
        Some(t)
    } else {
        let rest = psi - t * overlap;
        let norm = rest.norm();
        (norm > 0.0).then(|| rest / C64::new(norm, 0.0))
    };
    Ok((
        passed,
        post.map(|v| BipartiteState {
            amplitudes: DMatrix::from_fn(da, db, |i, j| v[i * db + j]),
        }),
    ))
}
