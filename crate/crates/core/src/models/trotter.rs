use serde::{Deserialize, Serialize};

use super::{HamiltonianSpec, ModelKind};
use crate::circuit::{build_brickwall, Circuit, GateSlot};
use crate::error::{Error, Result};
use crate::kernels::{Gate, GateMatrix, Targets, C64};

/// `exp(−i t h_loc)` for `h_loc = −J (|01><10| + |10><01|) + U |11><11|`.
pub fn trotter_gate(j: f64, u: f64, t: f64) -> Gate {
    let (c, s) = ((j * t).cos(), (j * t).sin());
    let mut m = GateMatrix::zeros();
    m[(0, 0)] = C64::new(1.0, 0.0);
    m[(1, 1)] = C64::new(c, 0.0);
    m[(1, 2)] = C64::new(0.0, s);
    m[(2, 1)] = C64::new(0.0, s);
    m[(2, 2)] = C64::new(c, 0.0);
    m[(3, 3)] = C64::new(0.0, -t * u).exp();
    Gate::parity(m, Targets(0, 1)).expect("structural zeros")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrotterPlan {
    pub order: u32,
    pub steps: usize,
    pub total_time: f64,
}

/// One circuit layer: all bonds of a commuting term group evolved for `time`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrotterLayer {
    pub group: usize,
    pub time: f64,
}

impl TrotterPlan {
    /// Layer sequence for `num_groups` mutually non-commuting groups, with
    /// neighbouring layers of the same group merged.
    pub fn layers(&self, num_groups: usize) -> Result<Vec<TrotterLayer>> {
        if self.steps == 0 {
            return Err(Error::InvalidParameter("Trotter steps must be positive".into()));
        }
        let h = self.total_time / self.steps as f64;
        let mut raw = vec![];
        for _ in 0..self.steps {
            match self.order {
                1 => raw.extend((0..num_groups).map(|group| TrotterLayer { group, time: h })),
                2 => strang(num_groups, h, &mut raw),
                4 => {
                    let p = 1.0 / (4.0 - 4f64.powf(1.0 / 3.0));
                    for c in [p, p, 1.0 - 4.0 * p, p, p] {
                        strang(num_groups, c * h, &mut raw);
                    }
                }
                other => return Err(Error::UnsupportedOrder(other)),
            }
        }
        Ok(merge(raw))
    }
}

fn strang(num_groups: usize, h: f64, out: &mut Vec<TrotterLayer>) {
    let last = num_groups - 1;
    out.extend((0..last).map(|group| TrotterLayer { group, time: h / 2.0 }));
    out.push(TrotterLayer { group: last, time: h });
    out.extend((0..last).rev().map(|group| TrotterLayer { group, time: h / 2.0 }));
}

fn merge(layers: Vec<TrotterLayer>) -> Vec<TrotterLayer> {
    let mut out: Vec<TrotterLayer> = vec![];
    for l in layers {
        match out.last_mut() {
            Some(prev) if prev.group == l.group => prev.time += l.time,
            _ => out.push(l),
        }
    }
    out
}

/// Commuting term groups: even and odd bonds for the spinless chain; even
/// hopping, odd hopping (both spins) and on-site interaction for the spinful
/// chain. Returns the group bonds with their local `(J, U)` couplings.
fn term_groups(spec: &HamiltonianSpec) -> Result<Vec<Vec<(Targets, f64, f64)>>> {
    let l = spec.num_sites;
    if spec.periodic && l % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "even/odd bond splitting of a periodic chain needs an even number of sites, got {l}"
        )));
    }
    let num_groups = match spec.kind {
        ModelKind::SpinlessFh => 2,
        ModelKind::SpinfulFh => 3,
    };
    let mut groups: Vec<Vec<(Targets, f64, f64)>> = vec![vec![]; num_groups];
    for (sites, m) in spec.local_terms() {
        let hop = -m[(1, 2)].re;
        let nn = m[(3, 3)].re;
        let (a, b) = (sites.0 % l, sites.1 % l);
        let group = if a == b {
            // on-site interaction between the two spin chains
            2
        } else {
            // bond (j, j+1 mod l) has the parity of j
            let first = if (a + 1) % l == b { a } else { b };
            first % 2
        };
        groups[group].push((sites, hop, nn));
    }
    Ok(groups)
}

/// Trotter circuit for `spec` as a layered circuit with one shared logical
/// gate per layer. Spinless chains get brick-wall metadata.
pub fn build_trotter_circuit(spec: &HamiltonianSpec, plan: &TrotterPlan) -> Result<Circuit> {
    let groups = term_groups(spec)?;
    let layers: Vec<TrotterLayer> = plan.layers(groups.len())?;
    let layers: Vec<TrotterLayer> = {
        let kept = layers.into_iter().filter(|l| !groups[l.group].is_empty()).collect();
        merge(kept)
    };

    let mut gates = vec![];
    let mut slots = vec![];
    for (id, layer) in layers.iter().enumerate() {
        let bonds = &groups[layer.group];
        let (_, j, u) = bonds[0];
        if bonds.iter().any(|&(_, j2, u2)| j2 != j || u2 != u) {
            return Err(Error::InvalidParameter("couplings differ within a term group".into()));
        }
        gates.push(trotter_gate(j, u, layer.time).matrix);
        slots.extend(bonds.iter().map(|&(targets, _, _)| GateSlot { logical_id: id, targets }));
    }

    if spec.kind == ModelKind::SpinlessFh && spec.num_qubits % 2 == 0 {
        let alternating = layers.iter().enumerate().all(|(r, l)| l.group == r % 2);
        if alternating {
            let bw = build_brickwall(spec.num_qubits, layers.len(), gates.clone(), spec.periodic)?;
            if bw.slots() == slots.as_slice() {
                return Ok(bw);
            }
        }
    }
    Circuit::new(spec.num_qubits, gates, slots)
}
