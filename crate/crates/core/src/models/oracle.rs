use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{hamiltonian_apply, HamiltonianSpec};
use crate::circuit::{Circuit, Direction};
use crate::error::{Error, Result};
use crate::kernels::{StateVector, C64};

/// Largest register for which the dense oracle is built.
pub const DENSE_QUBIT_CAP: usize = 14;
/// Target a-posteriori error of one Krylov propagation, relative to the
/// input norm.
pub const KRYLOV_TOL: f64 = 1e-12;

const KRYLOV_MAX_DIM: usize = 48;
const KRYLOV_MAX_SUBSTEPS: usize = 1 << 12;

/// Action of a fixed target unitary `U` on statevectors.
pub trait TargetUnitary: Send + Sync {
    fn num_qubits(&self) -> usize;
    /// `U|ψ>`.
    fn apply(&self, state: &StateVector) -> Result<StateVector>;
    /// `U†|ψ>`.
    fn apply_adjoint(&self, state: &StateVector) -> Result<StateVector>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    #[default]
    Dense,
    Krylov,
}

fn check_register(expected: usize, state: &StateVector) -> Result<()> {
    if state.num_qubits() != expected {
        return Err(Error::DimensionMismatch { expected, found: state.num_qubits() });
    }
    Ok(())
}

/// Target given by another circuit, applied gate by gate. Serves as a cheap
/// matrix-free target for benchmarks at sizes where no dense matrix fits.
#[derive(Clone, Debug)]
pub struct CircuitOracle {
    circuit: Circuit,
}

impl CircuitOracle {
    pub fn new(circuit: Circuit) -> Self {
        CircuitOracle { circuit }
    }
}

impl TargetUnitary for CircuitOracle {
    fn num_qubits(&self) -> usize {
        self.circuit.num_qubits()
    }

    fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.circuit.apply(state, Direction::Forward)
    }

    /// `C†ψ = conj(Cᵀ conj(ψ))`.
    fn apply_adjoint(&self, state: &StateVector) -> Result<StateVector> {
        Ok(self.circuit.apply(&state.conj(), Direction::BackwardTransposed)?.conj())
    }
}

/// Explicit `2^k × 2^k` unitary.
#[derive(Clone, Debug)]
pub struct DenseOracle {
    num_qubits: usize,
    matrix: DMatrix<C64>,
}

impl DenseOracle {
    pub fn from_matrix(num_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if matrix.shape() != (dim, dim) {
            return Err(Error::ShapeMismatch(format!("oracle matrix must be {dim}x{dim}")));
        }
        let dev = (matrix.adjoint() * &matrix - DMatrix::identity(dim, dim)).norm();
        if !(dev < 1e-10) {
            return Err(Error::NotUnitary(dev));
        }
        Ok(DenseOracle { num_qubits, matrix })
    }

    /// `exp(−iHt)` by scaling and squaring of a truncated Taylor series.
    pub fn from_hamiltonian(spec: &HamiltonianSpec, t: f64) -> Result<Self> {
        let k = spec.num_qubits;
        if k > DENSE_QUBIT_CAP {
            return Err(Error::DenseSizeCap { qubits: k, cap: DENSE_QUBIT_CAP });
        }
        let h = dense_hamiltonian(spec)?;
        let a = h * C64::new(0.0, -t);
        Ok(DenseOracle { num_qubits: k, matrix: expm(&a) })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
}

impl TargetUnitary for DenseOracle {
    fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn apply(&self, state: &StateVector) -> Result<StateVector> {
        check_register(self.num_qubits, state)?;
        let v = DVector::from_column_slice(state.amplitudes());
        StateVector::from_amplitudes(self.num_qubits, (&self.matrix * v).data.into())
    }

    fn apply_adjoint(&self, state: &StateVector) -> Result<StateVector> {
        check_register(self.num_qubits, state)?;
        let v = DVector::from_column_slice(state.amplitudes());
        StateVector::from_amplitudes(self.num_qubits, self.matrix.ad_mul(&v).data.into())
    }
}

/// Matrix of `H`, column by column through [`hamiltonian_apply`].
pub fn dense_hamiltonian(spec: &HamiltonianSpec) -> Result<DMatrix<C64>> {
    let k = spec.num_qubits;
    let dim = 1usize << k;
    let mut h = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let col = hamiltonian_apply(spec, &StateVector::basis(k, j)?)?;
        h.column_mut(j).copy_from_slice(col.amplitudes());
    }
    Ok(h)
}

fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let dim = a.nrows();
    let norm1 = (0..dim).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as u32 } else { 0 };
    let b = a * C64::new(0.5f64.powi(squarings as i32), 0.0);
    let mut result = DMatrix::<C64>::identity(dim, dim);
    let mut term = DMatrix::<C64>::identity(dim, dim);
    for n in 1..=40 {
        term = &term * &b * C64::new(1.0 / n as f64, 0.0);
        result += &term;
        if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Lanczos propagation `exp(−iHt)|ψ>` with full reorthogonalization. The
/// subspace grows until the a-posteriori estimate `β_m |[e^{−iT_m t} e_1]_m|`
/// drops below [`KRYLOV_TOL`]; when the subspace cap is hit, the time step is
/// halved repeatedly.
#[derive(Clone, Debug)]
pub struct KrylovOracle {
    spec: HamiltonianSpec,
    t: f64,
    max_dim: usize,
}

impl KrylovOracle {
    pub fn new(spec: HamiltonianSpec, t: f64) -> Self {
        let max_dim = KRYLOV_MAX_DIM.min(1 << spec.num_qubits);
        KrylovOracle { spec, t, max_dim }
    }

    pub fn with_max_dim(mut self, max_dim: usize) -> Self {
        self.max_dim = max_dim.max(1);
        self
    }

    fn propagate(&self, state: &StateVector, tau: f64) -> Result<StateVector> {
        check_register(self.spec.num_qubits, state)?;
        if tau == 0.0 || state.norm() == 0.0 {
            return Ok(state.clone());
        }
        let mut substeps = 1;
        loop {
            let dt = tau / substeps as f64;
            let mut cur = state.clone();
            let mut failure = None;
            for _ in 0..substeps {
                match self.step(&cur, dt) {
                    Ok(next) => cur = next,
                    Err(e) => {
                        failure = Some(e);
                        break;
                    }
                }
            }
            match failure {
                None => return Ok(cur),
                Some(e) if substeps >= KRYLOV_MAX_SUBSTEPS => return Err(e),
                Some(_) => substeps *= 2,
            }
        }
    }

    fn step(&self, state: &StateVector, dt: f64) -> Result<StateVector> {
        let k = self.spec.num_qubits;
        let beta0 = state.norm();
        let mut basis: Vec<Vec<C64>> = vec![state.amplitudes().iter().map(|z| z / beta0).collect()];
        let mut alphas: Vec<f64> = vec![];
        let mut betas: Vec<f64> = vec![];
        loop {
            let m = basis.len();
            let v = StateVector::from_amplitudes(k, basis[m - 1].clone())?;
            let mut w = hamiltonian_apply(&self.spec, &v)?.into_amplitudes();
            let alpha = dot(&basis[m - 1], &w).re;
            alphas.push(alpha);
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    for (x, y) in w.iter_mut().zip(b) {
                        *x -= c * y;
                    }
                }
            }
            let beta = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let coeffs = tridiagonal_exp(&alphas, &betas, dt);
            let estimate = beta * coeffs[m - 1].norm();
            if !estimate.is_finite() {
                return Err(Error::NonFinite("Krylov propagation"));
            }
            if estimate < KRYLOV_TOL || beta < 1e-14 {
                let mut out = vec![C64::new(0.0, 0.0); 1 << k];
                for (c, b) in coeffs.iter().zip(&basis) {
                    for (o, y) in out.iter_mut().zip(b) {
                        *o += c * y * beta0;
                    }
                }
                return StateVector::from_amplitudes(k, out);
            }
            if m >= self.max_dim {
                return Err(Error::KrylovNotConverged { dim: m, estimate });
            }
            betas.push(beta);
            basis.push(w.into_iter().map(|z| z / beta).collect());
        }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `exp(−iTt) e_1` for the real symmetric tridiagonal `T`.
fn tridiagonal_exp(alphas: &[f64], betas: &[f64], t: f64) -> Vec<C64> {
    let m = alphas.len();
    let mut tm = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        tm[(i, i)] = alphas[i];
        if i + 1 < m {
            tm[(i, i + 1)] = betas[i];
            tm[(i + 1, i)] = betas[i];
        }
    }
    let eig = tm.symmetric_eigen();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let q = eig.eigenvectors[(i, j)] * eig.eigenvectors[(0, j)];
                    C64::new(0.0, -eig.eigenvalues[j] * t).exp() * q
                })
                .sum()
        })
        .collect()
}

impl TargetUnitary for KrylovOracle {
    fn num_qubits(&self) -> usize {
        self.spec.num_qubits
    }

    fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.propagate(state, self.t)
    }

    fn apply_adjoint(&self, state: &StateVector) -> Result<StateVector> {
        self.propagate(state, -self.t)
    }
}

pub fn make_oracle(spec: &HamiltonianSpec, t: f64, method: OracleMethod) -> Result<Box<dyn TargetUnitary>> {
    Ok(match method {
        OracleMethod::Dense => Box::new(DenseOracle::from_hamiltonian(spec, t)?),
        OracleMethod::Krylov => Box::new(KrylovOracle::new(spec.clone(), t)),
    })
}
