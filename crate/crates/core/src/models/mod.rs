//! Fermi-Hubbard Hamiltonians in hard-core boson form, Trotter circuits built
//! from their local gates, and matrix-free target-unitary oracles.

mod oracle;
mod trotter;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, Gate, GateMatrix, StateVector, Targets, C64};

pub use oracle::{
    dense_hamiltonian, make_oracle, CircuitOracle, DenseOracle, KrylovOracle, OracleMethod, TargetUnitary,
    DENSE_QUBIT_CAP, KRYLOV_TOL,
};
pub use trotter::{build_trotter_circuit, trotter_gate, TrotterLayer, TrotterPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SpinlessFh,
    SpinfulFh,
}

/// Two-site operators, as 4x4 matrices on `|00>, |01>, |10>, |11>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoSiteOperator {
    /// `c†_a c_b + c†_b c_a`.
    Hopping,
    /// `n_a n_b`.
    DensityDensity,
}

impl TwoSiteOperator {
    pub fn matrix(self) -> GateMatrix {
        let mut m = GateMatrix::zeros();
        match self {
            TwoSiteOperator::Hopping => {
                m[(1, 2)] = C64::new(1.0, 0.0);
                m[(2, 1)] = C64::new(1.0, 0.0);
            }
            TwoSiteOperator::DensityDensity => m[(3, 3)] = C64::new(1.0, 0.0),
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianTerm {
    pub coefficient: f64,
    pub operator: TwoSiteOperator,
    pub sites: Targets,
}

/// `H = Σ coefficient · operator(sites)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub kind: ModelKind,
    pub num_sites: usize,
    pub num_qubits: usize,
    pub periodic: bool,
    pub j: f64,
    pub u: f64,
    pub terms: Vec<HamiltonianTerm>,
}

/// Bonds `(j, j+1)` of a chain of `l` sites starting at qubit `offset`. A
/// periodic chain adds `(l−1, 0)`; for `l = 2` that bond is `(0, 1)` again and
/// is reported with multiplicity 2 instead.
fn chain_bonds(l: usize, offset: usize, periodic: bool) -> Vec<(Targets, f64)> {
    let mut bonds: Vec<(Targets, f64)> = (0..l - 1).map(|j| (Targets(offset + j, offset + j + 1), 1.0)).collect();
    if periodic {
        if l == 2 {
            bonds[0].1 = 2.0;
        } else {
            bonds.push((Targets(offset + l - 1, offset), 1.0));
        }
    }
    bonds
}

/// `−J Σ (c†_j c_{j+1} + h.c.) + U Σ n_j n_{j+1}` on `l` qubits.
pub fn build_spinless_fh(l: usize, j: f64, u: f64, periodic: bool) -> Result<HamiltonianSpec> {
    if l < 2 {
        return Err(Error::TooFewSites(l));
    }
    let mut terms = vec![];
    for (sites, mult) in chain_bonds(l, 0, periodic) {
        terms.push(HamiltonianTerm { coefficient: -j * mult, operator: TwoSiteOperator::Hopping, sites });
        terms.push(HamiltonianTerm { coefficient: u * mult, operator: TwoSiteOperator::DensityDensity, sites });
    }
    Ok(HamiltonianSpec { kind: ModelKind::SpinlessFh, num_sites: l, num_qubits: l, periodic, j, u, terms })
}

/// Spinful chain on `2l` qubits: spin-up sites `0..l`, spin-down sites
/// `l..2l`. Hopping stays within each spin chain; the on-site interaction
/// couples qubits `j` and `j + l`.
pub fn build_spinful_fh(l: usize, j: f64, u: f64, periodic: bool) -> Result<HamiltonianSpec> {
    if l < 2 {
        return Err(Error::TooFewSites(l));
    }
    let mut terms = vec![];
    for offset in [0, l] {
        for (sites, mult) in chain_bonds(l, offset, periodic) {
            terms.push(HamiltonianTerm { coefficient: -j * mult, operator: TwoSiteOperator::Hopping, sites });
        }
    }
    for site in 0..l {
        terms.push(HamiltonianTerm {
            coefficient: u,
            operator: TwoSiteOperator::DensityDensity,
            sites: Targets(site, site + l),
        });
    }
    Ok(HamiltonianSpec { kind: ModelKind::SpinfulFh, num_sites: l, num_qubits: 2 * l, periodic, j, u, terms })
}

impl HamiltonianSpec {
    /// Terms summed per site pair into one 4x4 matrix, in first-appearance order.
    pub fn local_terms(&self) -> Vec<(Targets, GateMatrix)> {
        let mut out: Vec<(Targets, GateMatrix)> = vec![];
        for t in &self.terms {
            let m = t.operator.matrix().scale(C64::new(t.coefficient, 0.0));
            match out.iter_mut().find(|(s, _)| *s == t.sites) {
                Some((_, acc)) => *acc += &m,
                None => out.push((t.sites, m)),
            }
        }
        out
    }
}

/// `H|ψ>` as a sum of two-site term actions.
pub fn hamiltonian_apply(spec: &HamiltonianSpec, state: &StateVector) -> Result<StateVector> {
    if state.num_qubits() != spec.num_qubits {
        return Err(Error::DimensionMismatch { expected: spec.num_qubits, found: state.num_qubits() });
    }
    let mut out = StateVector::zeros(spec.num_qubits);
    let mut scratch = StateVector::zeros(spec.num_qubits);
    for (sites, m) in spec.local_terms() {
        kernels::apply_gate_into(state, &Gate::new(m, sites), &mut scratch)?;
        for (o, s) in out.amplitudes_mut().iter_mut().zip(scratch.amplitudes()) {
            *o += s;
        }
    }
    Ok(out)
}
