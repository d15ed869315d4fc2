//! JSON checkpoint of a circuit.
//!
//! ```json
//! { "num_qubits": 4, "layers": 2, "periodic": true,
//!   "gates": [ { "targets": [0, 1], "matrix": [[[1.0, 0.0], ...], ...], "layer": 0 }, ... ] }
//! ```
//!
//! One `gates` entry per slot in sequential order. `matrix` is the 4x4 gate
//! as rows of `[re, im]` pairs; `layer` is the logical gate the slot shares
//! (defaults to the slot index). Floats are written in shortest round-trip
//! form, so save/load is bit exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_brickwall, Circuit, GateSlot};
use crate::error::{Error, Result};
use crate::kernels::{GateMatrix, Targets, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub num_qubits: usize,
    pub layers: usize,
    pub periodic: bool,
    pub gates: Vec<CheckpointGate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointGate {
    pub targets: [usize; 2],
    pub matrix: [[[f64; 2]; 4]; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
}

fn matrix_to_pairs(g: &GateMatrix) -> [[[f64; 2]; 4]; 4] {
    let mut out = [[[0.0; 2]; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, z) in row.iter_mut().enumerate() {
            let v = g.get(i, j);
            *z = [v.re, v.im];
        }
    }
    out
}

fn pairs_to_matrix(m: &[[[f64; 2]; 4]; 4]) -> GateMatrix {
    GateMatrix::from_fn(|i, j| C64::new(m[i][j][0], m[i][j][1]))
}

impl Checkpoint {
    pub fn from_circuit(circuit: &Circuit) -> Self {
        let (layers, periodic) = match circuit.topology() {
            Some(meta) => (meta.num_layers, meta.periodic),
            None => (circuit.num_logical(), false),
        };
        let gates = (circuit.slots().iter())
            .map(|s| CheckpointGate {
                targets: [s.targets.0, s.targets.1],
                matrix: matrix_to_pairs(&circuit.gates()[s.logical_id]),
                layer: Some(s.logical_id),
            })
            .collect();
        Checkpoint { num_qubits: circuit.num_qubits(), layers, periodic, gates }
    }

    /// Rebuilds the circuit. Brick-wall metadata is restored when the slot
    /// layout matches `build_brickwall(num_qubits, layers, periodic)`.
    pub fn to_circuit(&self) -> Result<Circuit> {
        let mut logical: Vec<Option<GateMatrix>> = vec![];
        let mut slots = vec![];
        for (i, g) in self.gates.iter().enumerate() {
            let id = g.layer.unwrap_or(i);
            if id >= logical.len() {
                logical.resize(id + 1, None);
            }
            let m = pairs_to_matrix(&g.matrix);
            match &logical[id] {
                Some(prev) if *prev != m => {
                    return Err(Error::InvalidCircuit(format!(
                        "slot {i} disagrees with other slots of logical gate {id}"
                    )))
                }
                _ => logical[id] = Some(m),
            }
            slots.push(GateSlot { logical_id: id, targets: Targets(g.targets[0], g.targets[1]) });
        }
        let gates = (logical.into_iter().enumerate())
            .map(|(id, g)| g.ok_or_else(|| Error::InvalidCircuit(format!("logical gate {id} has no slot"))))
            .collect::<Result<Vec<_>>>()?;

        if self.num_qubits % 2 == 0 && gates.len() == self.layers {
            if let Ok(bw) = build_brickwall(self.num_qubits, self.layers, gates.clone(), self.periodic) {
                if bw.slots() == slots.as_slice() {
                    return Ok(bw);
                }
            }
        }
        Circuit::new(self.num_qubits, gates, slots)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
