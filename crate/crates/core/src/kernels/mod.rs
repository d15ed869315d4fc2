//! Statevector contraction primitives: gate application, hole contraction
//! (gradient environment of a missing gate) and hole application (derivative
//! arrays), for single statevectors and interleaved statevector arrays.
//!
//! Qubit 0 is the most significant bit of a basis index. See [`StateVector`].

mod gate;
pub mod raw;
mod state;

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

#[allow(unused_imports)]
pub(crate) use gate::permute_entries;
pub use gate::{Gate, GateMatrix, Targets, EVEN_BLOCK, ODD_BLOCK, PARITY_ENTRIES, PARITY_ZEROS, WIRE_SWAP};
pub use raw::LoopOrder;
pub use state::{StateVector, StateVectorArray};

use crate::error::{Error, Result};

/// All sixteen gate entries in row-major order.
pub const ALL_ENTRIES: [usize; 16] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];

fn check_same_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// ψ' = G ψ on the gate's targets.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut out = StateVector::zeros(state.num_qubits());
    apply_gate_into(state, gate, &mut out)?;
    Ok(out)
}

/// ψ' = G ψ written into a caller-owned buffer.
pub fn apply_gate_into(state: &StateVector, gate: &Gate, out: &mut StateVector) -> Result<()> {
    let k = state.num_qubits();
    gate.targets.validate(k)?;
    check_same_len(state.len(), out.len())?;
    let (lo, hi, g) = gate.normalized();
    raw::apply(&g, lo, hi, k, 1, state.amplitudes(), out.amplitudes_mut());
    Ok(())
}

/// Adjacent-wire gate application with an explicit loop nesting. Both orders
/// sum each output entry in the same sequence and agree bit for bit.
pub fn apply_gate_adjacent(state: &StateVector, gate: &Gate, order: LoopOrder) -> Result<StateVector> {
    let k = state.num_qubits();
    gate.targets.validate(k)?;
    if !gate.targets.is_adjacent() {
        return Err(Error::InvalidParameter(format!("targets {:?} are not adjacent", gate.targets)));
    }
    let (lo, _, g) = gate.normalized();
    let mut out = StateVector::zeros(k);
    raw::apply_adjacent(&g, lo, k, 1, state.amplitudes(), out.amplitudes_mut(), order);
    Ok(out)
}

/// General-path gate application, usable for adjacent targets too.
pub fn apply_gate_general(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let k = state.num_qubits();
    gate.targets.validate(k)?;
    let (lo, hi, g) = gate.normalized();
    let mut out = StateVector::zeros(k);
    raw::apply_general(&g, raw::Legs::new(k, lo, hi, 1), state.amplitudes(), out.amplitudes_mut());
    Ok(out)
}

/// Environment of a gate hole between `bra` and `ket`:
/// `D[i][j] = Σ_env bra[env,i]·ket[env,j]`, so that
/// `Σ_ij G[i][j]·D[i][j] == bra · (G ket)` for every gate `G` on `targets`.
/// The bra is not conjugated.
pub fn hole_contract(bra: &StateVector, ket: &StateVector, targets: Targets) -> Result<GateMatrix> {
    let k = ket.num_qubits();
    check_same_len(ket.len(), bra.len())?;
    targets.validate(k)?;
    let (lo, hi, swapped) = targets.normalized();
    let d = raw::hole_contract(bra.amplitudes(), ket.amplitudes(), lo, hi, k);
    Ok(if swapped { d.wire_swap() } else { d })
}

/// Arity-16 array whose logical vector `4i + j` is `|i><j|` on `targets`
/// applied to `state`; contracting the array index with the row-major gate
/// entries reproduces `apply_gate`.
pub fn hole_apply(state: &StateVector, targets: Targets) -> Result<StateVectorArray> {
    hole_apply_entries(state, targets, &ALL_ENTRIES)
}

/// Hole application keeping only the listed gate entries (e.g. the eight
/// parity-allowed ones). Logical vector `a` corresponds to `entries[a]`.
pub fn hole_apply_entries(state: &StateVector, targets: Targets, entries: &[usize]) -> Result<StateVectorArray> {
    let k = state.num_qubits();
    targets.validate(k)?;
    if entries.iter().any(|&e| e >= 16) {
        return Err(Error::InvalidParameter("gate entry index >= 16".into()));
    }
    let (lo, hi, swapped) = targets.normalized();
    let normalized: Vec<usize> = entries.iter().map(|&e| if swapped { WIRE_SWAP[e] } else { e }).collect();
    let mut out = StateVectorArray::zeros(k, entries.len());
    raw::hole_apply(state.amplitudes(), lo, hi, k, &normalized, out.amplitudes_mut());
    Ok(out)
}

/// Applies `gate` to each logical vector of the array.
pub fn apply_gate_to_array(array: &StateVectorArray, gate: &Gate) -> Result<StateVectorArray> {
    let mut out = StateVectorArray::zeros(array.num_qubits(), array.arity());
    apply_gate_to_array_into(array, gate, &mut out)?;
    Ok(out)
}

pub fn apply_gate_to_array_into(array: &StateVectorArray, gate: &Gate, out: &mut StateVectorArray) -> Result<()> {
    let k = array.num_qubits();
    gate.targets.validate(k)?;
    check_same_len(array.amplitudes().len(), out.amplitudes().len())?;
    check_same_len(array.arity(), out.arity())?;
    let (lo, hi, g) = gate.normalized();
    raw::apply(&g, lo, hi, k, array.arity(), array.amplitudes(), out.amplitudes_mut());
    Ok(())
}

/// Block `B[a][4i + j] = hole_contract(bra, array[a], targets)[i][j]` of
/// shape `arity × 16`.
pub fn hole_contract_array(bra: &StateVector, array: &StateVectorArray, targets: Targets) -> Result<DMatrix<C64>> {
    let k = array.num_qubits();
    check_same_len(bra.len(), 1 << k)?;
    targets.validate(k)?;
    let (lo, hi, swapped) = targets.normalized();
    let arity = array.arity();
    let mut acc = vec![C64::new(0.0, 0.0); arity * 16];
    raw::hole_contract_array_acc(bra.amplitudes(), array.amplitudes(), arity, lo, hi, k, &ALL_ENTRIES, &mut acc);
    Ok(DMatrix::from_fn(arity, 16, |a, e| {
        let col = if swapped { WIRE_SWAP[e] } else { e };
        acc[col * arity + a]
    }))
}
