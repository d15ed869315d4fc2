//! Verification suites comparing the matrix-free kernels and derivatives
//! against dense and finite-difference references.

use rand::Rng;
use serde::Serialize;

use crate::circuit::{Circuit, GateSlot};
use crate::dense::{self, CMatrix};
use crate::error::{Error, Result};
use crate::kernels::{apply_gate, hole_apply, hole_contract, Gate, GateMatrix, StateVector, Targets, C64};
use crate::manifold::{self, inner_raw};
use crate::models::{build_spinless_fh, build_trotter_circuit, DenseOracle, TrotterPlan};
use crate::objective::{self, full_gradient, full_hessian, hessian_vector_product, target_value, EvalOptions};
use crate::optimizer::{LocalModel, ProductTangent};
use crate::random::{gaussian_gate, gaussian_matrix, haar_gate, haar_unitary, rng, SeededRng};

/// Largest register the checks accept; the dense references grow as `4^k`.
pub const MAX_CHECK_QUBITS: usize = 6;

pub const KERNEL_ATOL: f64 = 1e-13;
pub const GRADIENT_RTOL: f64 = 1e-6;
pub const GRADIENT_STEP: f64 = 1e-5;
pub const OPTIMUM_GRADIENT_TOL: f64 = 1e-8;
pub const SECOND_DIFFERENCE_ATOL: f64 = 1e-7;
pub const SELF_ADJOINT_TOL: f64 = 1e-8;
pub const HVP_RTOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: &str, max_error: f64, tolerance: f64) -> Self {
        CheckOutcome { name: name.into(), max_error, tolerance, passed: max_error <= tolerance }
    }
}

fn check_size(k: usize, min: usize) -> Result<()> {
    if k < min || k > MAX_CHECK_QUBITS {
        return Err(Error::InvalidParameter(format!("checks need {min} <= qubits <= {MAX_CHECK_QUBITS}, got {k}")));
    }
    Ok(())
}

fn all_target_pairs(k: usize) -> Vec<Targets> {
    (0..k).flat_map(|a| (0..k).filter(move |&b| b != a).map(move |b| Targets(a, b))).collect()
}

fn random_targets(k: usize, r: &mut SeededRng) -> Targets {
    loop {
        let (a, b) = (r.random_range(0..k), r.random_range(0..k));
        if a != b {
            return Targets(a, b);
        }
    }
}

/// Haar-random gates on random target pairs, one logical gate per slot.
pub fn random_circuit(k: usize, slots: usize, seed: u64) -> Result<Circuit> {
    let mut r = rng(seed);
    let placed: Vec<_> = (0..slots).map(|_| (haar_gate(&mut r), random_targets(k, &mut r))).collect();
    Circuit::from_gates(k, &placed)
}

pub fn random_target(k: usize, seed: u64) -> Result<DenseOracle> {
    DenseOracle::from_matrix(k, haar_unitary(1 << k, &mut rng(seed)))
}

/// `apply_gate`, `hole_contract` and `hole_apply` against Kronecker and
/// brute-force environment references, over every target pair and every
/// basis input.
pub fn kernel_checks(k: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    check_size(k, 2)?;
    let mut r = rng(seed);
    let dim = 1 << k;
    let (mut apply_err, mut contract_err, mut hole_err) = (0.0f64, 0.0f64, 0.0f64);
    for t in all_target_pairs(k) {
        let g = gaussian_gate(&mut r);
        let dense_g = dense::embed_gate(&g, t, k);
        let units: Vec<CMatrix> = (0..16).map(|e| dense::embed_gate(&dense::matrix_unit(e), t, k)).collect();
        for j in 0..dim {
            let ket = StateVector::basis(k, j)?;
            let out = apply_gate(&ket, &Gate::new(g, t))?;
            let expected = dense::dense_to_state(k, &dense_g.column(j).into_owned());
            apply_err = apply_err.max(out.max_abs_diff(&expected));

            let arr = hole_apply(&ket, t)?;
            for (e, unit) in units.iter().enumerate() {
                let col = dense::dense_to_state(k, &unit.column(j).into_owned());
                hole_err = hole_err.max(arr.logical(e).max_abs_diff(&col));
            }
            for i in 0..dim {
                let bra = StateVector::basis(k, i)?;
                let d = hole_contract(&bra, &ket, t)?;
                contract_err = contract_err.max(d.max_abs_diff(&dense::hole_environment(&bra, &ket, t)));
            }
        }
    }
    Ok(vec![
        CheckOutcome::new("apply_gate vs kronecker", apply_err, KERNEL_ATOL),
        CheckOutcome::new("hole_contract vs brute-force environment", contract_err, KERNEL_ATOL),
        CheckOutcome::new("hole_apply vs matrix units", hole_err, KERNEL_ATOL),
    ])
}

fn retract_all(circuit: &Circuit, dirs: &[CMatrix], t: f64) -> Result<Circuit> {
    let gates = (circuit.gates().iter().zip(dirs))
        .map(|(g, x)| {
            let v = manifold::gate_to_cmat(g);
            Ok(manifold::cmat_to_gate(&manifold::polar_factor(&(v + x * C64::new(t, 0.0)))?))
        })
        .collect::<Result<Vec<_>>>()?;
    circuit.with_gates(gates)
}

/// Riemannian gradient against central differences along polar retractions,
/// and the gradient norm at an exactly representable optimum.
pub fn gradient_checks(k: usize, slots: usize, seed: u64, directions: usize) -> Result<Vec<CheckOutcome>> {
    check_size(k, 2)?;
    let circuit = random_circuit(k, slots, seed)?;
    let oracle = random_target(k, seed.wrapping_add(1))?;
    let report = full_gradient(&circuit, &oracle, EvalOptions::default())?;
    let mut r = rng(seed.wrapping_add(2));
    let mut worst = 0.0f64;
    for _ in 0..directions {
        let dirs: Vec<CMatrix> = (circuit.gates().iter())
            .map(|g| manifold::project(&manifold::gate_to_cmat(g), &gaussian_matrix(4, &mut r)))
            .collect();
        let h = GRADIENT_STEP;
        let fp = target_value(&retract_all(&circuit, &dirs, h)?, &oracle)?;
        let fm = target_value(&retract_all(&circuit, &dirs, -h)?, &oracle)?;
        let fd = (fp - fm) / (2.0 * h);
        let analytic: f64 = report.riemannian_gradient.iter().zip(&dirs).map(|(g, x)| inner_raw(g, x)).sum();
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(1e-3));
    }

    let spec = build_spinless_fh(4, 0.0, 2.0, true)?;
    let plan = TrotterPlan { order: 1, steps: 1, total_time: 0.6 };
    let exact = build_trotter_circuit(&spec, &plan)?;
    let exact_oracle = DenseOracle::from_hamiltonian(&spec, 0.6)?;
    let optimum = full_gradient(&exact, &exact_oracle, EvalOptions::default())?.riemannian_gradient_norm();
    Ok(vec![
        CheckOutcome::new("gradient vs central differences (relative)", worst, GRADIENT_RTOL),
        CheckOutcome::new("gradient norm at J=0 optimum", optimum, OPTIMUM_GRADIENT_TOL),
    ])
}

/// `Tr[U†C]` for arbitrary gate matrices, by dense products.
fn dense_trace(k: usize, slots: &[GateSlot], gates: &[GateMatrix], u: &CMatrix) -> C64 {
    let dim = 1 << k;
    let mut c = CMatrix::identity(dim, dim);
    for s in slots {
        c = dense::embed_gate(&gates[s.logical_id], s.targets, k) * c;
    }
    (u.adjoint() * c).trace()
}

/// Holomorphic Hessian blocks against mixed second differences on two-qubit
/// circuits with two distinct gates and with one shared gate.
pub fn hessian_second_difference_check(seed: u64) -> Result<CheckOutcome> {
    let oracle = random_target(2, seed)?;
    let mut r = rng(seed.wrapping_add(1));
    let two = Circuit::from_gates(2, &[(haar_gate(&mut r), Targets(0, 1)), (haar_gate(&mut r), Targets(1, 0))])?;
    let shared = Circuit::new(
        2,
        vec![haar_gate(&mut r)],
        vec![GateSlot { logical_id: 0, targets: Targets(0, 1) }, GateSlot { logical_id: 0, targets: Targets(1, 0) }],
    )?;
    let h = 1e-3;
    let mut worst = 0.0f64;
    for circuit in [two, shared] {
        let hess = full_hessian(&circuit, &oracle, false, false)?;
        for la in 0..circuit.num_logical() {
            for lb in la..circuit.num_logical() {
                let block = hess.block(la, lb).unwrap_or_else(|| CMatrix::zeros(16, 16));
                for ea in 0..16 {
                    for eb in 0..16 {
                        let eval = |sa: f64, sb: f64| {
                            let mut gates = circuit.gates().to_vec();
                            gates[la].0[ea] += C64::new(sa * h, 0.0);
                            gates[lb].0[eb] += C64::new(sb * h, 0.0);
                            dense_trace(2, circuit.slots(), &gates, oracle.matrix())
                        };
                        let fd =
                            (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * h * h);
                        worst = worst.max((block[(ea, eb)] - fd).norm());
                    }
                }
            }
        }
    }
    Ok(CheckOutcome::new("hessian blocks vs second differences (k=2)", worst, SECOND_DIFFERENCE_ATOL))
}

/// Second-difference comparison, self-adjointness of the Riemannian Hessian
/// and vanishing single-gate diagonal blocks.
pub fn hessian_checks(k: usize, slots: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    check_size(k, 2)?;
    let mut out = vec![hessian_second_difference_check(seed)?];
    let circuit = random_circuit(k, slots, seed.wrapping_add(10))?;
    let oracle = random_target(k, seed.wrapping_add(11))?;
    let model = LocalModel::new(&circuit, &oracle, EvalOptions::default(), false)?;
    let mut r = rng(seed.wrapping_add(12));
    let mut tangent = || {
        ProductTangent(
            model.points().iter().map(|v| manifold::project(v, &gaussian_matrix(v.nrows(), &mut r))).collect(),
        )
    };
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let (x, y) = (tangent(), tangent());
        let a = x.inner(&model.hessian_apply(&y)?);
        let b = model.hessian_apply(&x)?.inner(&y);
        worst = worst.max((a - b).abs() / (1.0 + a.abs()));
    }
    out.push(CheckOutcome::new("riemannian hessian self-adjointness", worst, SELF_ADJOINT_TOL));

    let hess = full_hessian(&circuit, &oracle, false, false)?;
    let diag = (0..circuit.num_logical())
        .map(|l| hess.block(l, l).map_or(0.0, |b| b.iter().map(|z| z.norm()).fold(0.0, f64::max)))
        .fold(0.0, f64::max);
    out.push(CheckOutcome::new("single-gate diagonal blocks vanish", diag, 0.0));
    Ok(out)
}

/// Hessian-vector products against the assembled blocks.
pub fn hvp_checks(k: usize, slots: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    check_size(k, 2)?;
    let circuit = random_circuit(k, slots, seed)?;
    let oracle = random_target(k, seed.wrapping_add(1))?;
    let hess = full_hessian(&circuit, &oracle, false, false)?;
    let mut r = rng(seed.wrapping_add(2));
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let z: Vec<GateMatrix> = (0..circuit.num_logical()).map(|_| gaussian_gate(&mut r)).collect();
        let hvp = hessian_vector_product(&circuit, &oracle, &z, 1)?;
        let expected = hess.apply(&z)?;
        let num: f64 =
            hvp.iter().zip(&expected).map(|(a, b)| a.add(&b.scale(C64::new(-1.0, 0.0))).norm().powi(2)).sum();
        let den: f64 = expected.iter().map(|b| b.norm().powi(2)).sum();
        worst = worst.max((num / den).sqrt());
    }
    Ok(vec![CheckOutcome::new("hvp vs assembled hessian (relative)", worst, HVP_RTOL)])
}

/// `2·2^k + 2f` against the dense Frobenius distance.
pub fn trace_identity_check(k: usize, slots: usize, seed: u64) -> Result<CheckOutcome> {
    check_size(k, 1)?;
    let circuit = random_circuit(k, slots, seed)?;
    let oracle = random_target(k, seed.wrapping_add(1))?;
    let f = target_value(&circuit, &oracle)?;
    let dense_err = dense::frobenius_distance_sq(&dense::circuit_unitary(&circuit), oracle.matrix());
    let rel = (objective::frobenius_error_sq(k, f) - dense_err).abs() / dense_err;
    Ok(CheckOutcome::new("2*2^k + 2f vs dense frobenius distance (relative)", rel, 1e-10))
}
