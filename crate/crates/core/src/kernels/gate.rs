use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::C64;
use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Flat (row-major) indices of the entries a parity-conserving gate may
/// populate. Rows/columns 0 and 3 carry even parity, 1 and 2 odd parity.
pub const PARITY_ENTRIES: [usize; 8] = [0, 3, 5, 6, 9, 10, 12, 15];

/// Entries of the odd-parity 2x2 block (rows/cols {1, 2}), row-major.
pub const ODD_BLOCK: [usize; 4] = [5, 6, 9, 10];

/// Entries of the even-parity 2x2 block (rows/cols {0, 3}), row-major.
pub const EVEN_BLOCK: [usize; 4] = [0, 3, 12, 15];

/// Entries that are structurally zero for a parity-conserving gate.
pub const PARITY_ZEROS: [usize; 8] = [1, 2, 4, 7, 8, 11, 13, 14];

/// Flat-index permutation exchanging the two wires of a 4x4 gate.
/// Involutive; maps the parity pattern onto itself.
pub const WIRE_SWAP: [usize; 16] = {
    const SW: [usize; 4] = [0, 2, 1, 3];
    let mut out = [0; 16];
    let mut e = 0;
    while e < 16 {
        out[e] = SW[e / 4] * 4 + SW[e % 4];
        e += 1;
    }
    out
};

/// A 4x4 complex matrix stored row-major. Row/column index `2*a + b` where
/// `a` is the state of the first target wire and `b` of the second.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateMatrix(pub [C64; 16]);

impl GateMatrix {
    pub const fn zeros() -> Self {
        GateMatrix([ZERO; 16])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i * 5] = ONE;
        }
        m
    }

    pub fn from_rows(rows: [[C64; 4]; 4]) -> Self {
        let mut m = Self::zeros();
        for (i, row) in rows.iter().enumerate() {
            m.0[i * 4..i * 4 + 4].copy_from_slice(row);
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i * 4 + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[row * 4 + col]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.get(j, i))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.get(j, i).conj())
    }

    pub fn conj(&self) -> Self {
        GateMatrix(self.0.map(|z| z.conj()))
    }

    pub fn scale(&self, s: C64) -> Self {
        GateMatrix(self.0.map(|z| z * s))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        out += other;
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self::from_fn(|i, j| (0..4).map(|l| self.get(i, l) * other.get(l, j)).sum())
    }

    /// Same operator with the roles of the two wires exchanged.
    pub fn wire_swap(&self) -> Self {
        permute_entries(self, &WIRE_SWAP)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `M^† M - I`.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.adjoint().matmul(self);
        (p.0.iter().enumerate())
            .map(|(e, z)| {
                let d = if e % 5 == 0 { *z - ONE } else { *z };
                d.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest magnitude among the eight structurally-zero parity entries.
    pub fn off_parity_magnitude(&self) -> f64 {
        PARITY_ZEROS.iter().map(|&e| self.0[e].norm()).fold(0.0, f64::max)
    }

    pub fn is_parity_sparse(&self) -> bool {
        PARITY_ZEROS.iter().all(|&e| self.0[e] == ZERO)
    }

    /// Σ_ij self[i][j] · other[i][j], i.e. Tr[selfᵀ · other].
    pub fn contract(&self, other: &Self) -> C64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.0.iter().zip(other.0.iter())).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Default for GateMatrix {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Index<(usize, usize)> for GateMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i * 4 + j]
    }
}

impl IndexMut<(usize, usize)> for GateMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i * 4 + j]
    }
}

impl std::ops::AddAssign<&GateMatrix> for GateMatrix {
    fn add_assign(&mut self, rhs: &GateMatrix) {
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a += b;
        }
    }
}

impl fmt::Debug for GateMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GateMatrix [")?;
        for i in 0..4 {
            write!(f, "  ")?;
            for j in 0..4 {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub(crate) fn permute_entries(m: &GateMatrix, perm: &[usize; 16]) -> GateMatrix {
    let mut out = GateMatrix::zeros();
    for e in 0..16 {
        out.0[e] = m.0[perm[e]];
    }
    out
}

/// Ordered pair of target qubits. The first qubit is the more significant
/// wire of the 4x4 gate index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Targets(pub usize, pub usize);

impl Targets {
    pub fn new(first: usize, second: usize) -> Self {
        Targets(first, second)
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        for q in [self.0, self.1] {
            if q >= num_qubits {
                return Err(Error::TargetOutOfRange { qubit: q, num_qubits });
            }
        }
        if self.0 == self.1 {
            return Err(Error::DuplicateTargets(self.0));
        }
        Ok(())
    }

    /// `(low, high, swapped)` with `low < high`.
    pub fn normalized(&self) -> (usize, usize, bool) {
        if self.0 < self.1 {
            (self.0, self.1, false)
        } else {
            (self.1, self.0, true)
        }
    }

    pub fn is_adjacent(&self) -> bool {
        let (lo, hi, _) = self.normalized();
        hi == lo + 1
    }
}

/// A two-qubit gate placed on a pair of wires.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    pub matrix: GateMatrix,
    pub targets: Targets,
    pub parity_sparse: bool,
}

impl Gate {
    pub fn new(matrix: GateMatrix, targets: Targets) -> Self {
        Gate { matrix, targets, parity_sparse: false }
    }

    /// Gate flagged as parity sparse; fails unless the eight off-pattern
    /// entries are exactly zero.
    pub fn parity(matrix: GateMatrix, targets: Targets) -> Result<Self> {
        if !matrix.is_parity_sparse() {
            return Err(Error::NotParitySparse(matrix.off_parity_magnitude()));
        }
        Ok(Gate { matrix, targets, parity_sparse: true })
    }

    /// Matrix expressed on the normalized (ascending) wire order.
    pub(crate) fn normalized(&self) -> (usize, usize, GateMatrix) {
        let (lo, hi, swapped) = self.targets.normalized();
        let m = if swapped { self.matrix.wire_swap() } else { self.matrix };
        (lo, hi, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_swap_is_involution_and_keeps_parity_pattern() {
        for e in 0..16 {
            assert_eq!(WIRE_SWAP[WIRE_SWAP[e]], e);
        }
        let mut mapped: Vec<usize> = PARITY_ENTRIES.iter().map(|&e| WIRE_SWAP[e]).collect();
        mapped.sort();
        assert_eq!(mapped, PARITY_ENTRIES.to_vec());
        // |01> <-> |10>
        assert_eq!(WIRE_SWAP[1 * 4 + 2], 2 * 4 + 1);
    }

    #[test]
    fn targets_validation() {
        assert!(Targets(0, 1).validate(2).is_ok());
        assert!(matches!(Targets(0, 2).validate(2), Err(Error::TargetOutOfRange { qubit: 2, .. })));
        assert!(matches!(Targets(1, 1).validate(3), Err(Error::DuplicateTargets(1))));
        assert_eq!(Targets(3, 0).normalized(), (0, 3, true));
        assert!(Targets(2, 1).is_adjacent());
        assert!(!Targets(0, 2).is_adjacent());
    }

    #[test]
    fn parity_gate_rejects_dense() {
        let mut m = GateMatrix::identity();
        assert!(Gate::parity(m, Targets(0, 1)).is_ok());
        m[(0, 1)] = C64::new(1e-300, 0.0);
        assert!(Gate::parity(m, Targets(0, 1)).is_err());
    }
}
