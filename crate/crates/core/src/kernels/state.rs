use super::C64;
use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Dense amplitude vector of a `k`-qubit register.
///
/// Basis indices enumerate qubit values lexicographically with qubit 0 as
/// the most significant bit: |q0 q1 ... q_{k-1}> sits at index
/// `q0·2^{k-1} + q1·2^{k-2} + ... + q_{k-1}`. Many simulators use the opposite
/// order; everything in this crate (gates, Hamiltonians, checkpoints) follows
/// this one.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zeros(num_qubits: usize) -> Self {
        StateVector { num_qubits, amps: vec![ZERO; 1 << num_qubits] }
    }

    /// Computational basis state |index>.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1 << num_qubits;
        if index >= dim {
            return Err(Error::BasisIndexOutOfRange { index, dim });
        }
        let mut s = Self::zeros(num_qubits);
        s.amps[index] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(num_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << num_qubits {
            return Err(Error::DimensionMismatch { expected: 1 << num_qubits, found: amps.len() });
        }
        Ok(StateVector { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    /// Storage footprint of the amplitudes in bytes.
    pub fn size_bytes(&self) -> usize {
        self.amps.len() * std::mem::size_of::<C64>()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Bilinear product Σ_i self[i]·other[i] (no conjugation).
    pub fn dot(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a * b).sum()
    }

    /// Hermitian inner product <self|other>.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn conj(&self) -> StateVector {
        StateVector { num_qubits: self.num_qubits, amps: self.amps.iter().map(|z| z.conj()).collect() }
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        (self.amps.iter().zip(&other.amps)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// `arity` logical statevectors stored interleaved: the logical index runs
/// fastest, so the layout is `(ψ_0[0], ψ_1[0], …, ψ_0[1], ψ_1[1], …)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVectorArray {
    num_qubits: usize,
    arity: usize,
    amps: Vec<C64>,
}

impl StateVectorArray {
    pub fn zeros(num_qubits: usize, arity: usize) -> Self {
        StateVectorArray { num_qubits, arity, amps: vec![ZERO; arity << num_qubits] }
    }

    /// Interleave equally sized statevectors.
    pub fn from_logical(states: &[StateVector]) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::ShapeMismatch("empty statevector list".into()))?;
        let k = first.num_qubits();
        let arity = states.len();
        let mut out = Self::zeros(k, arity);
        for (a, s) in states.iter().enumerate() {
            if s.num_qubits() != k {
                return Err(Error::DimensionMismatch { expected: k, found: s.num_qubits() });
            }
            for (i, z) in s.amplitudes().iter().enumerate() {
                out.amps[i * arity + a] = *z;
            }
        }
        Ok(out)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    /// Gather logical vector `a` into a standalone statevector.
    pub fn logical(&self, a: usize) -> StateVector {
        let amps = self.amps.iter().skip(a).step_by(self.arity).copied().collect();
        StateVector { num_qubits: self.num_qubits, amps }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_qubits_take_one_mebibyte() {
        assert_eq!(StateVector::zeros(16).size_bytes(), 1 << 20);
    }

    #[test]
    fn basis_out_of_range() {
        assert!(StateVector::basis(2, 4).is_err());
        assert_eq!(StateVector::basis(2, 3).unwrap().amplitudes()[3], C64::new(1.0, 0.0));
    }

    #[test]
    fn interleaving_round_trip() {
        let states: Vec<_> = (0..3)
            .map(|a| {
                let amps = (0..4).map(|i| C64::new((10 * a + i) as f64, 0.0)).collect();
                StateVector::from_amplitudes(2, amps).unwrap()
            })
            .collect();
        let arr = StateVectorArray::from_logical(&states).unwrap();
        assert_eq!(arr.amplitudes()[0].re, 0.0);
        assert_eq!(arr.amplitudes()[1].re, 10.0);
        assert_eq!(arr.amplitudes()[3].re, 1.0);
        for (a, s) in states.iter().enumerate() {
            assert_eq!(&arr.logical(a), s);
        }
    }
}
