//! Seeded random gates and states.
//!
//! Unitaries are drawn by orthonormalizing a complex Gaussian matrix (QR) and
//! absorbing the phases of `diag(R)` into `Q`, which makes the distribution
//! Haar.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::kernels::{GateMatrix, StateVector, C64, EVEN_BLOCK, ODD_BLOCK};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(m, m, |_, _| gaussian_c64(rng))
}

/// Haar-distributed `m × m` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<C64> {
    let qr = gaussian_matrix(m, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_gate<R: Rng + ?Sized>(rng: &mut R) -> GateMatrix {
    let q = haar_unitary(4, rng);
    GateMatrix::from_fn(|i, j| q[(i, j)])
}

/// Parity-conserving gate with independent Haar U(2) blocks.
pub fn haar_parity_gate<R: Rng + ?Sized>(rng: &mut R) -> GateMatrix {
    let mut g = GateMatrix::zeros();
    for block in [ODD_BLOCK, EVEN_BLOCK] {
        let q = haar_unitary(2, rng);
        for (s, &e) in block.iter().enumerate() {
            g.0[e] = q[(s / 2, s % 2)];
        }
    }
    g
}

/// Gaussian matrix with no structure (not unitary).
pub fn gaussian_gate<R: Rng + ?Sized>(rng: &mut R) -> GateMatrix {
    GateMatrix::from_fn(|_, _| gaussian_c64(rng))
}

/// Normalized Gaussian statevector.
pub fn random_state<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> StateVector {
    let amps: Vec<C64> = (0..1usize << num_qubits).map(|_| gaussian_c64(rng)).collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(num_qubits, amps.into_iter().map(|z| z / norm).collect())
        .expect("length is a power of two")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_gates_are_unitary_and_reproducible() {
        let g1 = haar_gate(&mut rng(7));
        let g2 = haar_gate(&mut rng(7));
        assert_eq!(g1, g2);
        assert!(g1.unitarity_deviation() < 1e-13);
        let p = haar_parity_gate(&mut rng(3));
        assert!(p.is_parity_sparse());
        assert!(p.unitarity_deviation() < 1e-13);
    }
}
