//! Dense reference constructions built with Kronecker products and explicit
//! index sums. These never call into [`crate::kernels`]; they serve as
//! independent oracles for tests and for the `check` command, and are only
//! practical for a handful of qubits.

use nalgebra::DMatrix;

use crate::circuit::Circuit;
use crate::kernels::{GateMatrix, StateVector, Targets, C64};

pub type CMatrix = DMatrix<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn gate_to_dense(g: &GateMatrix) -> CMatrix {
    CMatrix::from_fn(4, 4, |i, j| g.get(i, j))
}

/// Permutation matrix that reorders qubit wires so that `order[0]` becomes the
/// most significant wire, `order[1]` the next, and so on.
pub fn wire_permutation(order: &[usize]) -> CMatrix {
    let k = order.len();
    let dim = 1 << k;
    let mut p = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        let bit = |q: usize| (x >> (k - 1 - q)) & 1;
        let y = order.iter().fold(0, |acc, &q| (acc << 1) | bit(q));
        p[(y, x)] = ONE;
    }
    p
}

/// Full `2^k × 2^k` matrix of a two-qubit gate: `Pᵀ (G ⊗ I) P` with `P`
/// bringing the target wires to the front.
pub fn embed_gate(g: &GateMatrix, targets: Targets, num_qubits: usize) -> CMatrix {
    let mut order = vec![targets.0, targets.1];
    order.extend((0..num_qubits).filter(|&q| q != targets.0 && q != targets.1));
    let p = wire_permutation(&order);
    let big = kron(&gate_to_dense(g), &CMatrix::identity(1 << (num_qubits - 2), 1 << (num_qubits - 2)));
    p.transpose() * big * p
}

/// C(G) = G_n ··· G_1 for the sequential slot list.
pub fn circuit_unitary(circuit: &Circuit) -> CMatrix {
    let k = circuit.num_qubits();
    let dim = 1 << k;
    let mut c = CMatrix::identity(dim, dim);
    for slot in circuit.slots() {
        c = embed_gate(&circuit.gates()[slot.logical_id], slot.targets, k) * c;
    }
    c
}

pub fn state_to_dense(s: &StateVector) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(s.amplitudes())
}

pub fn dense_to_state(num_qubits: usize, v: &nalgebra::DVector<C64>) -> StateVector {
    StateVector::from_amplitudes(num_qubits, v.iter().copied().collect()).expect("dimension")
}

/// Hole environment by brute force over all pairs of basis indices:
/// `D[i][j] = Σ bra[r]·ket[c]` over `r, c` that agree off the targets and carry
/// target bits `i` (for `r`) and `j` (for `c`).
pub fn hole_environment(bra: &StateVector, ket: &StateVector, targets: Targets) -> GateMatrix {
    let k = bra.num_qubits();
    let dim = 1 << k;
    let bit = |x: usize, q: usize| (x >> (k - 1 - q)) & 1;
    let mask = (1 << (k - 1 - targets.0)) | (1 << (k - 1 - targets.1));
    let mut d = GateMatrix::zeros();
    for r in 0..dim {
        for c in 0..dim {
            if r & !mask != c & !mask {
                continue;
            }
            let i = 2 * bit(r, targets.0) + bit(r, targets.1);
            let j = 2 * bit(c, targets.0) + bit(c, targets.1);
            d[(i, j)] += bra.amplitudes()[r] * ket.amplitudes()[c];
        }
    }
    d
}

/// Matrix unit |i><j| as a 4x4 gate.
pub fn matrix_unit(entry: usize) -> GateMatrix {
    let mut e = GateMatrix::zeros();
    e.0[entry] = ONE;
    e
}

/// −Re Tr[U† C].
pub fn trace_objective(c: &CMatrix, u: &CMatrix) -> f64 {
    -(u.adjoint() * c).trace().re
}

pub fn frobenius_distance_sq(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm_sqr()).sum()
}

/// e^{−iHt} for Hermitian `H` through its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::new(0.0, -e * t).exp()));
    v * phases * v.adjoint()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn zeros(dim: usize) -> CMatrix {
    CMatrix::from_element(dim, dim, ZERO)
}
