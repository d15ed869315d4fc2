//! Circuit topology: sequential slot lists over shared logical gates,
//! brick-wall construction, and translation classes of slot pairs.

mod checkpoint;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kernels::{self, Gate, GateMatrix, StateVector, Targets};

pub use checkpoint::Checkpoint;

/// Tolerance on `‖G†G − I‖_F` for gates placed in a circuit.
pub const UNITARITY_TOL: f64 = 1e-12;

/// One gate occurrence in the sequential order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateSlot {
    pub logical_id: usize,
    pub targets: Targets,
}

/// Brick-wall bookkeeping. Layer `r` (0-based) uses bonds `(2b, 2b+1)` when
/// `r` is even and `(2b+1, 2b+2 mod L)` when odd.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BrickwallMeta {
    pub num_layers: usize,
    pub layer_of_slot: Vec<usize>,
    /// In lattice sites.
    pub translation_period: usize,
    pub periodic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Slots in order with the gate matrices.
    Forward,
    /// Slots in reverse order with transposed (not conjugated) matrices.
    BackwardTransposed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RepresentativePolicy {
    #[default]
    Smallest,
    Largest,
}

/// A translation equivalence class of slot pairs `(s, s')`, `s < s'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TranslationClass {
    pub representative: (usize, usize),
    pub multiplicity: usize,
}

/// Sequential two-qubit gate circuit; `C(G) = G_n ··· G_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    slots: Vec<GateSlot>,
    gates: Vec<GateMatrix>,
    topology: Option<BrickwallMeta>,
}

impl Circuit {
    pub fn new(num_qubits: usize, gates: Vec<GateMatrix>, slots: Vec<GateSlot>) -> Result<Self> {
        let c = Circuit { num_qubits, slots, gates, topology: None };
        c.validate()?;
        Ok(c)
    }

    /// Every slot carries its own logical gate.
    pub fn from_gates(num_qubits: usize, placed: &[(GateMatrix, Targets)]) -> Result<Self> {
        let gates = placed.iter().map(|(g, _)| *g).collect();
        let slots = (placed.iter().enumerate()).map(|(i, (_, t))| GateSlot { logical_id: i, targets: *t }).collect();
        Self::new(num_qubits, gates, slots)
    }

    fn validate(&self) -> Result<()> {
        for slot in &self.slots {
            if slot.logical_id >= self.gates.len() {
                return Err(Error::InvalidCircuit(format!(
                    "slot references logical gate {} of {}",
                    slot.logical_id,
                    self.gates.len()
                )));
            }
            slot.targets.validate(self.num_qubits)?;
        }
        for g in &self.gates {
            let dev = g.unitarity_deviation();
            if !(dev <= UNITARITY_TOL) {
                return Err(Error::NotUnitary(dev));
            }
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn slots(&self) -> &[GateSlot] {
        &self.slots
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn gates(&self) -> &[GateMatrix] {
        &self.gates
    }

    pub fn num_logical(&self) -> usize {
        self.gates.len()
    }

    pub fn topology(&self) -> Option<&BrickwallMeta> {
        self.topology.as_ref()
    }

    /// Same topology, new logical gates.
    pub fn with_gates(&self, gates: Vec<GateMatrix>) -> Result<Self> {
        if gates.len() != self.gates.len() {
            return Err(Error::DimensionMismatch { expected: self.gates.len(), found: gates.len() });
        }
        let c = Circuit { gates, ..self.clone() };
        c.validate()?;
        Ok(c)
    }

    /// Slot `i` as a placed gate.
    pub fn slot_gate(&self, i: usize) -> Gate {
        let s = self.slots[i];
        Gate::new(self.gates[s.logical_id], s.targets)
    }

    /// Slot indices per logical gate.
    pub fn slots_of_logical(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]; self.gates.len()];
        for (i, s) in self.slots.iter().enumerate() {
            out[s.logical_id].push(i);
        }
        out
    }

    pub fn apply(&self, state: &StateVector, direction: Direction) -> Result<StateVector> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch { expected: self.num_qubits, found: state.num_qubits() });
        }
        let mut cur = state.clone();
        let mut next = StateVector::zeros(self.num_qubits);
        let transposed: Vec<GateMatrix>;
        let (order, mats): (Box<dyn Iterator<Item = &GateSlot>>, &[GateMatrix]) = match direction {
            Direction::Forward => (Box::new(self.slots.iter()), &self.gates),
            Direction::BackwardTransposed => {
                transposed = self.gates.iter().map(|g| g.transpose()).collect();
                (Box::new(self.slots.iter().rev()), &transposed)
            }
        };
        for slot in order {
            kernels::apply_gate_into(&cur, &Gate::new(mats[slot.logical_id], slot.targets), &mut next)?;
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Sums per-slot derivatives into per-logical-gate derivatives.
    pub fn accumulate_shared(&self, per_slot: &[GateMatrix]) -> Result<Vec<GateMatrix>> {
        if per_slot.len() != self.slots.len() {
            return Err(Error::DimensionMismatch { expected: self.slots.len(), found: per_slot.len() });
        }
        let mut out = vec![GateMatrix::zeros(); self.gates.len()];
        for (slot, g) in self.slots.iter().zip(per_slot) {
            out[slot.logical_id] += g;
        }
        Ok(out)
    }

    /// Site shifts of the translation group acting on a periodic brick wall
    /// (including the identity shift 0).
    pub fn translation_shifts(&self) -> Result<Vec<usize>> {
        let meta = self.periodic_brickwall()?;
        Ok((0..self.num_qubits / meta.translation_period).map(|t| t * meta.translation_period).collect())
    }

    fn periodic_brickwall(&self) -> Result<&BrickwallMeta> {
        match &self.topology {
            Some(meta) if meta.periodic => Ok(meta),
            _ => Err(Error::TranslationUnsupported),
        }
    }

    /// Slot reached from `slot` by translating all sites by `2·tau`.
    fn translate_slot(&self, slot: usize, tau: usize) -> usize {
        let half = self.num_qubits / 2;
        let within = slot % half;
        slot - within + (within + tau) % half
    }

    /// Partition of all slot pairs `s < s'` into classes under simultaneous
    /// cyclic translation by multiples of the period.
    pub fn translation_classes(&self) -> Result<Vec<TranslationClass>> {
        self.translation_classes_with(RepresentativePolicy::Smallest)
    }

    pub fn translation_classes_with(&self, policy: RepresentativePolicy) -> Result<Vec<TranslationClass>> {
        let meta = self.periodic_brickwall()?;
        let group = self.num_qubits / meta.translation_period;
        let n = self.slots.len();
        let mut classes: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for s in 0..n {
            for t in s + 1..n {
                let orbit = (0..group).map(|tau| {
                    let (a, b) = (self.translate_slot(s, tau), self.translate_slot(t, tau));
                    (a.min(b), a.max(b))
                });
                let rep = match policy {
                    RepresentativePolicy::Smallest => orbit.min(),
                    RepresentativePolicy::Largest => orbit.max(),
                }
                .expect("group has the identity");
                *classes.entry(rep).or_default() += 1;
            }
        }
        Ok(classes
            .into_iter()
            .map(|(representative, multiplicity)| TranslationClass { representative, multiplicity })
            .collect())
    }
}

/// Bond list of brick-wall layer `r` (0-based).
pub fn brickwall_bonds(num_qubits: usize, layer: usize, periodic: bool) -> Vec<Targets> {
    let half = num_qubits / 2;
    if layer % 2 == 0 {
        (0..half).map(|b| Targets(2 * b, 2 * b + 1)).collect()
    } else {
        let count = if periodic { half } else { half.saturating_sub(1) };
        (0..count).map(|b| Targets(2 * b + 1, (2 * b + 2) % num_qubits)).collect()
    }
}

/// Sequentialized brick wall: layer 1's bonds in order, then layer 2's, …,
/// every slot of a layer sharing that layer's logical gate.
pub fn build_brickwall(
    num_qubits: usize,
    num_layers: usize,
    initial_gates: Vec<GateMatrix>,
    periodic: bool,
) -> Result<Circuit> {
    if num_qubits % 2 != 0 || num_qubits == 0 {
        return Err(Error::OddQubitCount(num_qubits));
    }
    if initial_gates.len() != num_layers {
        return Err(Error::LayerCountMismatch { layers: num_layers, gates: initial_gates.len() });
    }
    let mut slots = vec![];
    let mut layer_of_slot = vec![];
    for layer in 0..num_layers {
        for targets in brickwall_bonds(num_qubits, layer, periodic) {
            slots.push(GateSlot { logical_id: layer, targets });
            layer_of_slot.push(layer);
        }
    }
    let mut c = Circuit::new(num_qubits, initial_gates, slots)?;
    c.topology = Some(BrickwallMeta { num_layers, layer_of_slot, translation_period: 2, periodic });
    Ok(c)
}
