//! Matrix-free evaluation of `f(G) = −Re Tr[U†C(G)] = −Re Σ_j <j|U†C(G)|j>`,
//! its gradient, Hessian blocks and Hessian-vector products.
//!
//! Every summand is computed from two cached passes. The forward pass stores
//! `ψ_0 = |j>`, `ψ_ℓ = G_ℓ ψ_{ℓ−1}`. The backward pass starts from
//! `φ_0 = conj(U|j>)` and stores `φ_m = G_{n−m+1}ᵀ φ_{m−1}`, so that the
//! summand equals `φ_{n−ℓ} · G_ℓ ψ_{ℓ−1}` (no conjugation) for every slot `ℓ`.
//! Derivatives are holomorphic derivatives of `f̃ = Tr[U†C(G)]`; see
//! [`crate::manifold`] for the conversion to real gradients.

mod blocks;
mod parallel;

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::kernels::{raw, GateMatrix, StateVector, ALL_ENTRIES, C64, PARITY_ENTRIES, WIRE_SWAP};
use crate::manifold::{self, CMat, GateParametrization};
use crate::models::TargetUnitary;

pub use blocks::HessianBlocks;
pub use parallel::{chunk_ranges, parallel_reduce, REDUCTION_CHUNKS};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    pub workers: usize,
    /// Restrict derivatives to the eight parity-allowed gate entries.
    pub parity: bool,
    /// Compute only one slot pair per translation class of the Hessian.
    pub dedup: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { workers: 1, parity: false, dedup: false }
    }
}

impl EvalOptions {
    pub fn parametrization(&self) -> GateParametrization {
        if self.parity {
            GateParametrization::Parity
        } else {
            GateParametrization::Full
        }
    }
}

/// Work counters accumulated over all summands.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PassCounters {
    pub summands: u64,
    pub oracle_calls: u64,
    /// Single-statevector gate applications.
    pub gate_applications: u64,
    pub hole_contractions: u64,
    pub hole_applications: u64,
    /// Gate applications to statevector arrays.
    pub array_applications: u64,
    /// Slot pairs contracted for the Hessian.
    pub pair_contractions: u64,
    /// Slot pairs accounted for, i.e. contractions weighted by class size.
    pub pair_weight: u64,
}

impl PassCounters {
    fn add(&mut self, o: &PassCounters) {
        self.summands += o.summands;
        self.oracle_calls += o.oracle_calls;
        self.gate_applications += o.gate_applications;
        self.hole_contractions += o.hole_contractions;
        self.hole_applications += o.hole_applications;
        self.array_applications += o.array_applications;
        self.pair_contractions += o.pair_contractions;
        self.pair_weight += o.pair_weight;
    }
}

#[derive(Clone, Debug)]
pub struct ObjectiveReport {
    pub value: f64,
    /// `Tr[U†C(G)]`; `value = −Re trace`.
    pub trace: C64,
    /// `‖C − U‖_F²` summed directly over basis states.
    pub error_sq: f64,
    /// `∂f̃/∂G_ℓ` per logical gate.
    pub holomorphic_gradient: Vec<GateMatrix>,
    /// Projected gradient per manifold component.
    pub riemannian_gradient: Vec<CMat>,
    pub hessian: Option<HessianBlocks>,
    pub wall_time: Duration,
    pub counters: PassCounters,
}

impl ObjectiveReport {
    /// `−conj(∂f̃/∂G_ℓ)` per logical gate.
    pub fn euclidean_gradient(&self) -> Vec<GateMatrix> {
        self.holomorphic_gradient.iter().map(|d| d.conj().scale(C64::new(-1.0, 0.0))).collect()
    }

    pub fn riemannian_gradient_norm(&self) -> f64 {
        self.riemannian_gradient.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt()
    }
}

/// `‖C − U‖_F² = 2·2^k + 2f`.
pub fn frobenius_error_sq(num_qubits: usize, value: f64) -> f64 {
    2.0 * (1u64 << num_qubits) as f64 + 2.0 * value
}

/// `‖C − U‖_F`, clamped at zero against rounding.
pub fn frobenius_error(num_qubits: usize, value: f64) -> f64 {
    frobenius_error_sq(num_qubits, value).max(0.0).sqrt()
}

/// Intermediate states of one summand.
#[derive(Clone, Debug, PartialEq)]
pub struct PassCache {
    /// `ψ_0 … ψ_n`.
    pub forward_states: Vec<StateVector>,
    /// `φ_0 … φ_n`.
    pub backward_states: Vec<StateVector>,
}

/// Per-slot data on normalized (ascending) targets.
struct SlotPlan {
    logical: usize,
    lo: usize,
    hi: usize,
    swapped: bool,
    g: GateMatrix,
    gt: GateMatrix,
    /// Hessian entries expressed on the normalized wire order.
    entries: Vec<usize>,
}

struct Context<'a> {
    k: usize,
    dim: usize,
    n_logical: usize,
    slots: Vec<SlotPlan>,
    entries: &'static [usize],
    oracle: &'a dyn TargetUnitary,
}

impl<'a> Context<'a> {
    fn new(circuit: &Circuit, oracle: &'a dyn TargetUnitary, parity: bool) -> Result<Self> {
        let k = circuit.num_qubits();
        if oracle.num_qubits() != k {
            return Err(Error::DimensionMismatch { expected: k, found: oracle.num_qubits() });
        }
        if parity {
            if let Some(g) = circuit.gates().iter().find(|g| !g.is_parity_sparse()) {
                return Err(Error::NotParitySparse(g.off_parity_magnitude()));
            }
        }
        let entries: &'static [usize] = if parity { &PARITY_ENTRIES } else { &ALL_ENTRIES };
        let slots = (0..circuit.num_slots())
            .map(|i| {
                let s = circuit.slots()[i];
                let (lo, hi, swapped) = s.targets.normalized();
                let m = circuit.gates()[s.logical_id];
                let g = if swapped { m.wire_swap() } else { m };
                SlotPlan {
                    logical: s.logical_id,
                    lo,
                    hi,
                    swapped,
                    g,
                    gt: g.transpose(),
                    entries: entries.iter().map(|&e| if swapped { WIRE_SWAP[e] } else { e }).collect(),
                }
            })
            .collect();
        Ok(Context { k, dim: 1 << k, n_logical: circuit.num_logical(), slots, entries, oracle })
    }

    fn n(&self) -> usize {
        self.slots.len()
    }

    fn check_bound(&self, value: f64) -> Result<f64> {
        if !value.is_finite() {
            return Err(Error::NonFinite("objective value"));
        }
        let bound = -(self.dim as f64);
        if value < bound * (1.0 + 1e-12) - 1e-12 {
            return Err(Error::BoundViolation { value, bound });
        }
        Ok(value)
    }
}

/// Per-worker scratch buffers.
struct Workspace {
    fwd: Vec<Vec<C64>>,
    bwd: Vec<Vec<C64>>,
    array: Vec<C64>,
    array_next: Vec<C64>,
    pair: Vec<C64>,
    dot_a: Vec<C64>,
    dot_b: Vec<C64>,
    dot_c: Vec<C64>,
}

impl Workspace {
    fn new(ctx: &Context, arrays: bool) -> Self {
        let n = ctx.n();
        let arity = if arrays { ctx.entries.len() } else { 0 };
        Workspace {
            fwd: vec![vec![ZERO; ctx.dim]; n + 1],
            bwd: vec![vec![ZERO; ctx.dim]; n + 1],
            array: vec![ZERO; ctx.dim * arity],
            array_next: vec![ZERO; ctx.dim * arity],
            pair: vec![ZERO; arity * arity],
            dot_a: vec![],
            dot_b: vec![],
            dot_c: vec![],
        }
    }
}

/// Both passes for basis state `j`; returns `<j|U†C|j>` and `‖C|j> − U|j>‖²`.
fn passes(ctx: &Context, ws: &mut Workspace, j: usize, counters: &mut PassCounters) -> Result<(C64, f64)> {
    let (k, n) = (ctx.k, ctx.n());
    ws.fwd[0].fill(ZERO);
    ws.fwd[0][j] = C64::new(1.0, 0.0);
    for s in 0..n {
        let (done, rest) = ws.fwd.split_at_mut(s + 1);
        let sl = &ctx.slots[s];
        raw::apply(&sl.g, sl.lo, sl.hi, k, 1, &done[s], &mut rest[0]);
    }
    let u = ctx.oracle.apply(&StateVector::basis(k, j)?)?;
    if u.num_qubits() != k {
        return Err(Error::Oracle(format!("oracle returned a {}-qubit state", u.num_qubits())));
    }
    for (b, x) in ws.bwd[0].iter_mut().zip(u.amplitudes()) {
        *b = x.conj();
    }
    for m in 1..=n {
        let (done, rest) = ws.bwd.split_at_mut(m);
        let sl = &ctx.slots[n - m];
        raw::apply(&sl.gt, sl.lo, sl.hi, k, 1, &done[m - 1], &mut rest[0]);
    }
    counters.summands += 1;
    counters.oracle_calls += 1;
    counters.gate_applications += 2 * n as u64;
    let mut value = ZERO;
    let mut err = 0.0;
    for (a, b) in ws.bwd[0].iter().zip(&ws.fwd[n]) {
        value += a * b;
        err += (b - a.conj()).norm_sqr();
    }
    Ok((value, err))
}

/// Holomorphic derivative of one summand with respect to slot `s`.
fn slot_derivative(ctx: &Context, ws: &Workspace, s: usize) -> GateMatrix {
    let sl = &ctx.slots[s];
    let d = raw::hole_contract(&ws.bwd[ctx.n() - 1 - s], &ws.fwd[s], sl.lo, sl.hi, ctx.k);
    if sl.swapped {
        d.wire_swap()
    } else {
        d
    }
}

/// Hessian contributions of one summand. `schedule[s]` lists the partner
/// slots `s' > s` (ascending) with their weights.
fn hessian_summand(
    ctx: &Context,
    ws: &mut Workspace,
    schedule: &[Vec<(usize, u64)>],
    blocks: &mut HessianBlocks,
    counters: &mut PassCounters,
) {
    let (k, n) = (ctx.k, ctx.n());
    let arity = ctx.entries.len();
    for s in 0..n {
        let partners = &schedule[s];
        if partners.is_empty() {
            continue;
        }
        let sl = &ctx.slots[s];
        raw::hole_apply(&ws.fwd[s], sl.lo, sl.hi, k, &sl.entries, &mut ws.array);
        counters.hole_applications += 1;
        let mut p = s + 1;
        for &(s2, weight) in partners {
            while p < s2 {
                let g = &ctx.slots[p];
                raw::apply(&g.g, g.lo, g.hi, k, arity, &ws.array, &mut ws.array_next);
                std::mem::swap(&mut ws.array, &mut ws.array_next);
                counters.array_applications += 1;
                p += 1;
            }
            let sl2 = &ctx.slots[s2];
            ws.pair.fill(ZERO);
            raw::hole_contract_array_acc(
                &ws.bwd[n - 1 - s2],
                &ws.array,
                arity,
                sl2.lo,
                sl2.hi,
                k,
                &sl2.entries,
                &mut ws.pair,
            );
            blocks.add_pair(sl.logical, sl2.logical, &ws.pair, weight as f64);
            counters.pair_contractions += 1;
            counters.pair_weight += weight;
        }
    }
}

/// All slot pairs, or one representative per translation class.
fn pair_schedule(circuit: &Circuit, dedup: bool) -> Result<Vec<Vec<(usize, u64)>>> {
    let n = circuit.num_slots();
    let mut schedule = vec![vec![]; n];
    if dedup {
        for class in circuit.translation_classes()? {
            let (a, b) = class.representative;
            schedule[a].push((b, class.multiplicity as u64));
        }
        for partners in &mut schedule {
            partners.sort_unstable();
        }
    } else {
        for (s, partners) in schedule.iter_mut().enumerate() {
            partners.extend((s + 1..n).map(|s2| (s2, 1)));
        }
    }
    Ok(schedule)
}

/// `f(G)` summed over all basis states.
pub fn target_value(circuit: &Circuit, oracle: &dyn TargetUnitary) -> Result<f64> {
    target_value_with(circuit, oracle, 1)
}

pub fn target_value_with(circuit: &Circuit, oracle: &dyn TargetUnitary, workers: usize) -> Result<f64> {
    Ok(value_report(circuit, oracle, workers)?.value)
}

/// Objective value together with the directly summed squared error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValueReport {
    pub value: f64,
    pub trace: C64,
    /// `Σ_j ‖C|j> − U|j>‖²`, equal to `2·2^k + 2f` but free of cancellation.
    pub error_sq: f64,
}

pub fn value_report(circuit: &Circuit, oracle: &dyn TargetUnitary, workers: usize) -> Result<ValueReport> {
    let ctx = Context::new(circuit, oracle, false)?;
    let (trace, error_sq) = parallel_reduce(
        ctx.dim,
        workers,
        || Workspace::new(&ctx, false),
        || (ZERO, 0.0),
        |ws, acc, j| {
            let (v, e) = passes(&ctx, ws, j, &mut PassCounters::default())?;
            acc.0 += v;
            acc.1 += e;
            Ok(())
        },
        |a, b| {
            a.0 += b.0;
            a.1 += b.1;
        },
    )?;
    Ok(ValueReport { value: ctx.check_bound(-trace.re)?, trace, error_sq })
}

/// One summand `<j|U†C|j>` with its per-slot holomorphic derivatives.
#[derive(Clone, Debug)]
pub struct SummandGradient {
    pub value: C64,
    pub per_slot: Vec<GateMatrix>,
    pub counters: PassCounters,
}

pub fn summand_gradient(j: usize, circuit: &Circuit, oracle: &dyn TargetUnitary) -> Result<SummandGradient> {
    let ctx = Context::new(circuit, oracle, false)?;
    if j >= ctx.dim {
        return Err(Error::BasisIndexOutOfRange { index: j, dim: ctx.dim });
    }
    let mut ws = Workspace::new(&ctx, false);
    let mut counters = PassCounters::default();
    let (value, _) = passes(&ctx, &mut ws, j, &mut counters)?;
    let per_slot = (0..ctx.n()).map(|s| slot_derivative(&ctx, &ws, s)).collect();
    counters.hole_contractions += ctx.n() as u64;
    Ok(SummandGradient { value, per_slot, counters })
}

/// Forward and backward caches of summand `j`.
pub fn pass_cache(j: usize, circuit: &Circuit, oracle: &dyn TargetUnitary) -> Result<PassCache> {
    let ctx = Context::new(circuit, oracle, false)?;
    if j >= ctx.dim {
        return Err(Error::BasisIndexOutOfRange { index: j, dim: ctx.dim });
    }
    let mut ws = Workspace::new(&ctx, false);
    passes(&ctx, &mut ws, j, &mut PassCounters::default())?;
    let to_states =
        |v: Vec<Vec<C64>>| v.into_iter().map(|a| StateVector::from_amplitudes(ctx.k, a)).collect::<Result<Vec<_>>>();
    Ok(PassCache { forward_states: to_states(ws.fwd)?, backward_states: to_states(ws.bwd)? })
}

struct Partial {
    trace: C64,
    error_sq: f64,
    grad: Vec<GateMatrix>,
    hessian: Option<HessianBlocks>,
    counters: PassCounters,
}

/// Value, gradient and (optionally) Hessian blocks in one sweep over the
/// basis states.
pub fn evaluate(
    circuit: &Circuit,
    oracle: &dyn TargetUnitary,
    opts: EvalOptions,
    with_hessian: bool,
) -> Result<ObjectiveReport> {
    let start = Instant::now();
    let ctx = Context::new(circuit, oracle, opts.parity)?;
    let schedule = if with_hessian { Some(pair_schedule(circuit, opts.dedup)?) } else { None };
    let n = ctx.n();
    let total = parallel_reduce(
        ctx.dim,
        opts.workers,
        || Workspace::new(&ctx, with_hessian),
        || Partial {
            trace: ZERO,
            error_sq: 0.0,
            grad: vec![GateMatrix::zeros(); ctx.n_logical],
            hessian: with_hessian.then(|| HessianBlocks::zeros(ctx.n_logical, ctx.entries)),
            counters: PassCounters::default(),
        },
        |ws, acc, j| {
            let (v, e) = passes(&ctx, ws, j, &mut acc.counters)?;
            acc.trace += v;
            acc.error_sq += e;
            for s in 0..n {
                acc.grad[ctx.slots[s].logical] += &slot_derivative(&ctx, ws, s);
            }
            acc.counters.hole_contractions += n as u64;
            if let (Some(schedule), Some(blocks)) = (&schedule, &mut acc.hessian) {
                hessian_summand(&ctx, ws, schedule, blocks, &mut acc.counters);
            }
            Ok(())
        },
        |a, b| {
            a.trace += b.trace;
            a.error_sq += b.error_sq;
            for (x, y) in a.grad.iter_mut().zip(&b.grad) {
                *x += y;
            }
            if let (Some(x), Some(y)) = (&mut a.hessian, &b.hessian) {
                x.add_assign(y);
            }
            a.counters.add(&b.counters);
        },
    )?;
    let value = ctx.check_bound(-total.trace.re)?;
    let riemannian_gradient = riemannian_gradient(circuit, &total.grad, opts.parametrization())?;
    Ok(ObjectiveReport {
        value,
        trace: total.trace,
        error_sq: total.error_sq,
        holomorphic_gradient: total.grad,
        riemannian_gradient,
        hessian: total.hessian,
        wall_time: start.elapsed(),
        counters: total.counters,
    })
}

/// Projected gradient per manifold component from holomorphic derivatives.
pub fn riemannian_gradient(
    circuit: &Circuit,
    holomorphic: &[GateMatrix],
    param: GateParametrization,
) -> Result<Vec<CMat>> {
    let points = param.split(circuit.gates())?;
    let egrad = param.gather(&holomorphic.iter().map(|d| d.conj().scale(C64::new(-1.0, 0.0))).collect::<Vec<_>>());
    Ok(points.iter().zip(&egrad).map(|(v, g)| manifold::project(v, g)).collect())
}

/// Value and Riemannian gradient.
pub fn full_gradient(circuit: &Circuit, oracle: &dyn TargetUnitary, opts: EvalOptions) -> Result<ObjectiveReport> {
    evaluate(circuit, oracle, opts, false)
}

/// Holomorphic Hessian blocks `H̃` summed over all basis states.
pub fn full_hessian(
    circuit: &Circuit,
    oracle: &dyn TargetUnitary,
    use_translation_dedup: bool,
    parity_mode: bool,
) -> Result<HessianBlocks> {
    let opts = EvalOptions { workers: 1, parity: parity_mode, dedup: use_translation_dedup };
    Ok(evaluate(circuit, oracle, opts, true)?.hessian.expect("requested"))
}

/// `H̃ z` without forming the Hessian: forward-mode differentiation of the
/// gradient passes along `z`, `O(n)` gate applications per basis state.
/// Returns per-logical holomorphic matrices (all sixteen entries).
pub fn hessian_vector_product(
    circuit: &Circuit,
    oracle: &dyn TargetUnitary,
    z: &[GateMatrix],
    workers: usize,
) -> Result<Vec<GateMatrix>> {
    Ok(hessian_vector_product_counted(circuit, oracle, z, workers)?.0)
}

pub fn hessian_vector_product_counted(
    circuit: &Circuit,
    oracle: &dyn TargetUnitary,
    z: &[GateMatrix],
    workers: usize,
) -> Result<(Vec<GateMatrix>, PassCounters)> {
    let ctx = Context::new(circuit, oracle, false)?;
    if z.len() != ctx.n_logical {
        return Err(Error::ShapeMismatch(format!(
            "{} direction matrices for {} logical gates",
            z.len(),
            ctx.n_logical
        )));
    }
    // per-slot direction on normalized wires, and its transpose
    let zs: Vec<(GateMatrix, GateMatrix)> = (ctx.slots.iter())
        .map(|sl| {
            let m = if sl.swapped { z[sl.logical].wire_swap() } else { z[sl.logical] };
            (m, m.transpose())
        })
        .collect();
    let n = ctx.n();
    let (k, dim) = (ctx.k, ctx.dim);
    let (out, counters) = parallel_reduce(
        dim,
        workers,
        || {
            let mut ws = Workspace::new(&ctx, false);
            ws.dot_a = vec![ZERO; dim];
            ws.dot_b = vec![ZERO; dim];
            ws.dot_c = vec![ZERO; dim];
            ws
        },
        || (vec![GateMatrix::zeros(); ctx.n_logical], PassCounters::default()),
        |ws, (out, counters), j| {
            passes(&ctx, ws, j, counters)?;
            let add = |out: &mut Vec<GateMatrix>, s: usize, d: GateMatrix| {
                let sl = &ctx.slots[s];
                out[sl.logical] += &(if sl.swapped { d.wire_swap() } else { d });
            };
            // forward: ψ̇_ℓ = G_ℓ ψ̇_{ℓ−1} + Z_ℓ ψ_{ℓ−1}
            ws.dot_a.fill(ZERO);
            for s in 0..n {
                let sl = &ctx.slots[s];
                if s > 0 {
                    add(out, s, raw::hole_contract(&ws.bwd[n - 1 - s], &ws.dot_a, sl.lo, sl.hi, k));
                    counters.hole_contractions += 1;
                }
                if s + 1 < n {
                    raw::apply(&sl.g, sl.lo, sl.hi, k, 1, &ws.dot_a, &mut ws.dot_b);
                    raw::apply(&zs[s].0, sl.lo, sl.hi, k, 1, &ws.fwd[s], &mut ws.dot_c);
                    for ((a, b), c) in ws.dot_a.iter_mut().zip(&ws.dot_b).zip(&ws.dot_c) {
                        *a = b + c;
                    }
                    counters.gate_applications += 2;
                }
            }
            // backward: φ̇_i = G_{n−i+1}ᵀ φ̇_{i−1} + Z_{n−i+1}ᵀ φ_{i−1}
            ws.dot_a.fill(ZERO);
            for s in (0..n).rev() {
                let sl = &ctx.slots[s];
                if s + 1 < n {
                    add(out, s, raw::hole_contract(&ws.dot_a, &ws.fwd[s], sl.lo, sl.hi, k));
                    counters.hole_contractions += 1;
                }
                if s > 0 {
                    raw::apply(&sl.gt, sl.lo, sl.hi, k, 1, &ws.dot_a, &mut ws.dot_b);
                    raw::apply(&zs[s].1, sl.lo, sl.hi, k, 1, &ws.bwd[n - 1 - s], &mut ws.dot_c);
                    for ((a, b), c) in ws.dot_a.iter_mut().zip(&ws.dot_b).zip(&ws.dot_c) {
                        *a = b + c;
                    }
                    counters.gate_applications += 2;
                }
            }
            Ok(())
        },
        |a, b| {
            for (x, y) in a.0.iter_mut().zip(&b.0) {
                *x += y;
            }
            a.1.add(&b.1);
        },
    )?;
    Ok((out, counters))
}
