//! Slice-level kernels on normalized targets (`lo < hi`).
//!
//! A register of `k` qubits is viewed as a degree-5 tensor with legs
//! `(i0, a, i2, b, i4)` of dimensions `(2^lo, 2, 2^(hi-lo-1), 2, 2^(k-hi-1))`,
//! where `a` and `b` are the target wires. Arrays of statevectors append the
//! logical index as the fastest-running dimension, which is folded into the
//! `i4` leg: every kernel below treats an arity-`m` array like a statevector
//! whose innermost leg is `m` times longer.
//!
//! No bounds are re-validated here; callers go through the checked wrappers in
//! the parent module or guarantee shapes themselves.

use super::C64;
use crate::kernels::GateMatrix;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug)]
pub struct Legs {
    /// dim of i0
    pub p: usize,
    /// dim of i2
    pub q: usize,
    /// dim of i4 (times arity for arrays)
    pub n: usize,
}

impl Legs {
    #[inline]
    pub fn new(num_qubits: usize, lo: usize, hi: usize, arity: usize) -> Legs {
        debug_assert!(lo < hi && hi < num_qubits);
        Legs { p: 1 << lo, q: 1 << (hi - lo - 1), n: (1 << (num_qubits - hi - 1)) * arity }
    }

    #[inline]
    fn stride_lo(&self) -> usize {
        2 * self.q * self.n
    }

    /// Offsets of the four target-bit combinations `(a, b)` for block `(i0, i2)`.
    #[inline]
    fn offsets(&self, i0: usize, i2: usize) -> [usize; 4] {
        let base = i0 * 2 * self.stride_lo() + i2 * 2 * self.n;
        let sl = self.stride_lo();
        [base, base + self.n, base + sl, base + sl + self.n]
    }
}

/// Loop nesting for the adjacent-wire kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LoopOrder {
    /// Gate-entry loops outside, contiguous environment leg innermost.
    Accumulate,
    /// Environment loops outside, unrolled 4x4 gate kernel innermost.
    #[default]
    Unrolled,
}

/// Gate on neighbouring wires `(lo, lo+1)`: ψ'[i0, r, i2] = Σ_c g[r][c] ψ[i0, c, i2].
pub fn apply_adjacent(
    g: &GateMatrix,
    lo: usize,
    num_qubits: usize,
    arity: usize,
    input: &[C64],
    out: &mut [C64],
    order: LoopOrder,
) {
    let p = 1usize << lo;
    let n = (1usize << (num_qubits - lo - 2)) * arity;
    debug_assert_eq!(input.len(), 4 * p * n);
    debug_assert_eq!(out.len(), input.len());
    let parity_sparse_gate = parity_sparse(g);
    let g = &g.0;
    match order {
        LoopOrder::Accumulate => {
            out.fill(ZERO);
            for i0 in 0..p {
                let base = i0 * 4 * n;
                for r in 0..4 {
                    let dst = base + r * n;
                    for c in 0..4 {
                        let gv = g[r * 4 + c];
                        let src = base + c * n;
                        let (o, x) = (&mut out[dst..dst + n], &input[src..src + n]);
                        for (o, x) in o.iter_mut().zip(x) {
                            *o += gv * x;
                        }
                    }
                }
            }
        }
        LoopOrder::Unrolled if parity_sparse_gate => adjacent_unrolled::<true>(g, n, input, out),
        LoopOrder::Unrolled => adjacent_unrolled::<false>(g, n, input, out),
    }
}

fn adjacent_unrolled<const PARITY: bool>(g: &[C64; 16], n: usize, input: &[C64], out: &mut [C64]) {
    for (blk_in, blk_out) in input.chunks_exact(4 * n).zip(out.chunks_exact_mut(4 * n)) {
        let (x0, rest) = blk_in.split_at(n);
        let (x1, rest) = rest.split_at(n);
        let (x2, x3) = rest.split_at(n);
        let (y0, rest) = blk_out.split_at_mut(n);
        let (y1, rest) = rest.split_at_mut(n);
        let (y2, y3) = rest.split_at_mut(n);
        for i in 0..n {
            let x = [x0[i], x1[i], x2[i], x3[i]];
            let y = mix::<PARITY>(g, &x);
            y0[i] = y[0];
            y1[i] = y[1];
            y2[i] = y[2];
            y3[i] = y[3];
        }
    }
}

#[inline(always)]
fn mix<const PARITY: bool>(g: &[C64; 16], x: &[C64; 4]) -> [C64; 4] {
    if PARITY {
        // skipping exact zeros leaves every sum unchanged
        return [
            g[0] * x[0] + g[3] * x[3],
            g[5] * x[1] + g[6] * x[2],
            g[9] * x[1] + g[10] * x[2],
            g[12] * x[0] + g[15] * x[3],
        ];
    }
    let mut y = [ZERO; 4];
    for r in 0..4 {
        let mut acc = ZERO;
        for c in 0..4 {
            acc += g[r * 4 + c] * x[c];
        }
        y[r] = acc;
    }
    y
}

/// Whether the parity-forbidden entries of `g` are exactly zero.
#[inline]
fn parity_sparse(g: &GateMatrix) -> bool {
    crate::kernels::PARITY_ZEROS.iter().all(|&e| g.0[e] == ZERO)
}

/// General five-leg gate application; environment leg `i4` innermost.
pub fn apply_general(g: &GateMatrix, legs: Legs, input: &[C64], out: &mut [C64]) {
    if parity_sparse(g) {
        general::<true>(&g.0, legs, input, out)
    } else {
        general::<false>(&g.0, legs, input, out)
    }
}

fn general<const PARITY: bool>(g: &[C64; 16], legs: Legs, input: &[C64], out: &mut [C64]) {
    let n = legs.n;
    for i0 in 0..legs.p {
        for i2 in 0..legs.q {
            let off = legs.offsets(i0, i2);
            for i4 in 0..n {
                let x = [input[off[0] + i4], input[off[1] + i4], input[off[2] + i4], input[off[3] + i4]];
                let y = mix::<PARITY>(g, &x);
                for s in 0..4 {
                    out[off[s] + i4] = y[s];
                }
            }
        }
    }
}

/// Dispatch to the adjacent or general path.
#[inline]
pub fn apply(g: &GateMatrix, lo: usize, hi: usize, num_qubits: usize, arity: usize, input: &[C64], out: &mut [C64]) {
    if hi == lo + 1 {
        apply_adjacent(g, lo, num_qubits, arity, input, out, LoopOrder::Unrolled);
    } else {
        apply_general(g, Legs::new(num_qubits, lo, hi, arity), input, out);
    }
}

/// D[r][c] = Σ_env bra[env, r] · ket[env, c] (bra not conjugated).
pub fn hole_contract(bra: &[C64], ket: &[C64], lo: usize, hi: usize, num_qubits: usize) -> GateMatrix {
    let legs = Legs::new(num_qubits, lo, hi, 1);
    let mut acc = [ZERO; 16];
    for i0 in 0..legs.p {
        for i2 in 0..legs.q {
            let off = legs.offsets(i0, i2);
            for i4 in 0..legs.n {
                let y = [bra[off[0] + i4], bra[off[1] + i4], bra[off[2] + i4], bra[off[3] + i4]];
                let x = [ket[off[0] + i4], ket[off[1] + i4], ket[off[2] + i4], ket[off[3] + i4]];
                for r in 0..4 {
                    for c in 0..4 {
                        acc[r * 4 + c] += y[r] * x[c];
                    }
                }
            }
        }
    }
    GateMatrix(acc)
}

/// Hole application restricted to the gate entries listed in `entries`.
/// Logical vector `a` of the output (for entry `e = 4r + c`) is
/// `|r><c|` applied to the target wires of `state`. `out` has arity
/// `entries.len()` and is fully overwritten.
pub fn hole_apply(state: &[C64], lo: usize, hi: usize, num_qubits: usize, entries: &[usize], out: &mut [C64]) {
    let arity = entries.len();
    let legs = Legs::new(num_qubits, lo, hi, 1);
    debug_assert_eq!(out.len(), state.len() * arity);
    for i0 in 0..legs.p {
        for i2 in 0..legs.q {
            let off = legs.offsets(i0, i2);
            for i4 in 0..legs.n {
                let x = [state[off[0] + i4], state[off[1] + i4], state[off[2] + i4], state[off[3] + i4]];
                for r in 0..4 {
                    let dst = (off[r] + i4) * arity;
                    let slot = &mut out[dst..dst + arity];
                    for (o, &e) in slot.iter_mut().zip(entries) {
                        *o = if e / 4 == r { x[e % 4] } else { ZERO };
                    }
                }
            }
        }
    }
}

/// Contract a bra with every logical vector of an array through the hole at
/// `(lo, hi)`, keeping only the gate entries in `cols`.
///
/// Accumulates column-major: `acc[j * arity + a] += hole_contract(bra, array[a])[cols[j]]`,
/// so the innermost loop runs over the contiguous logical index.
#[allow(clippy::too_many_arguments)]
pub fn hole_contract_array_acc(
    bra: &[C64],
    array: &[C64],
    arity: usize,
    lo: usize,
    hi: usize,
    num_qubits: usize,
    cols: &[usize],
    acc: &mut [C64],
) {
    let legs = Legs::new(num_qubits, lo, hi, 1);
    debug_assert_eq!(acc.len(), arity * cols.len());
    for i0 in 0..legs.p {
        for i2 in 0..legs.q {
            let off = legs.offsets(i0, i2);
            for i4 in 0..legs.n {
                for (j, &e) in cols.iter().enumerate() {
                    let y = bra[off[e / 4] + i4];
                    let src = (off[e % 4] + i4) * arity;
                    let x = &array[src..src + arity];
                    let dst = &mut acc[j * arity..(j + 1) * arity];
                    for (d, x) in dst.iter_mut().zip(x) {
                        *d += y * x;
                    }
                }
            }
        }
    }
}
