use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::circuit::build_brickwall;
use crate::kernels::PARITY_ZEROS;
use crate::models::{build_spinless_fh, build_trotter_circuit, DenseOracle, TrotterPlan};
use crate::objective::target_value;
use crate::random::{gaussian_matrix, haar_gate, haar_parity_gate, haar_unitary, rng};

/// Real vector view of a product tangent (re, im interleaved per entry).
fn flatten(x: &ProductTangent) -> Vec<f64> {
    x.0.iter().flat_map(|m| m.iter().flat_map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect()
}

fn unflatten(v: &[f64], shape: &ProductTangent) -> ProductTangent {
    let mut it = v.chunks(2);
    ProductTangent(
        (shape.0.iter())
            .map(|m| {
                CMat::from_iterator(
                    m.nrows(),
                    m.ncols(),
                    (0..m.len()).map(|_| {
                        let c = it.next().unwrap();
                        C64::new(c[0], c[1])
                    }),
                )
            })
            .collect(),
    )
}

fn random_tangent(comps: usize, m: usize, seed: u64) -> ProductTangent {
    let mut r = rng(seed);
    ProductTangent((0..comps).map(|_| gaussian_matrix(m, &mut r)).collect())
}

/// Operator `x ↦ A x` on the flattened real representation.
fn matrix_operator(a: DMatrix<f64>, shape: ProductTangent) -> impl FnMut(&ProductTangent) -> Result<ProductTangent> {
    move |x| {
        let v = DMatrix::from_column_slice(a.ncols(), 1, &flatten(x));
        Ok(unflatten((&a * v).as_slice(), &shape))
    }
}

#[test]
fn identity_operator_gives_newton_step() {
    let g = random_tangent(3, 2, 1);
    let mut op = |x: &ProductTangent| Ok(x.clone());
    let res = truncated_cg(&mut op, &g, 1e6, &TcgParams::default()).unwrap();
    let mut diff = res.step.clone();
    diff.axpy(1.0, &g);
    assert!(diff.norm() < 1e-12 * g.norm());
    assert_eq!(res.stop, TcgStop::Residual);
    assert_eq!(res.inner_iters, 1);
}

#[test]
fn negative_definite_operator_steps_to_boundary() {
    for seed in 0..10 {
        let g = random_tangent(2, 4, seed);
        let n = g.real_len();
        let b = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3 + seed as usize) % 11) as f64 * 0.1);
        let a = -(b.transpose() * &b + DMatrix::identity(n, n));
        let mut op = matrix_operator(a, g.clone());
        let radius = 0.37;
        let res = truncated_cg(&mut op, &g, radius, &TcgParams::default()).unwrap();
        assert_eq!(res.stop, TcgStop::NegativeCurvature);
        assert!((res.step.norm() - radius).abs() < 1e-12);
    }
}

#[test]
fn zero_gradient_returns_zero_step() {
    let g = ProductTangent::zeros_like(&random_tangent(2, 2, 0));
    let mut op = |_: &ProductTangent| -> Result<ProductTangent> { panic!("operator must not be called") };
    let res = truncated_cg(&mut op, &g, 1.0, &TcgParams::default()).unwrap();
    assert_eq!(res.stop, TcgStop::ZeroGradient);
    assert_eq!(res.step.norm(), 0.0);
}

#[test]
fn non_finite_operator_output_is_an_error() {
    let g = random_tangent(1, 2, 3);
    let mut op = |x: &ProductTangent| Ok(x.scaled(f64::NAN));
    assert!(matches!(truncated_cg(&mut op, &g, 1.0, &TcgParams::default()), Err(Error::NonFinite(_))));
}

#[test]
fn model_decrease_dominates_cauchy_point() {
    let mut r = rng(77);
    for case in 0..50 {
        let g = random_tangent(2, 2, 1000 + case);
        let n = g.real_len();
        let b = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
        let shift = r.random_range(-1.0..2.0);
        let a = b.transpose() * &b * 0.2 + DMatrix::identity(n, n) * shift;
        let radius = r.random_range(0.05..5.0);
        let gv = DMatrix::from_column_slice(n, 1, &flatten(&g));
        let gnorm = g.norm();
        let ghg = (gv.transpose() * &a * &gv)[(0, 0)];
        let tau = if ghg <= 0.0 { radius / gnorm } else { (gnorm * gnorm / ghg).min(radius / gnorm) };
        let cauchy = -tau * gnorm * gnorm + 0.5 * tau * tau * ghg;

        let mut op = matrix_operator(a.clone(), g.clone());
        let res = truncated_cg(&mut op, &g, radius, &TcgParams::default()).unwrap();
        let sv = DMatrix::from_column_slice(n, 1, &flatten(&res.step));
        let model = (gv.transpose() * &sv)[(0, 0)] + 0.5 * (sv.transpose() * &a * &sv)[(0, 0)];
        assert!(res.step.norm() <= radius * (1.0 + 1e-12));
        assert!(model <= cauchy + 1e-12 * cauchy.abs().max(1.0), "case {case}: {model} > {cauchy}");
        assert!((model - res.model_change(&g)).abs() < 1e-10 * model.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn steps_stay_inside_the_region(seed in 0u64..10_000, radius in 1e-3f64..10.0, shift in -2.0f64..2.0) {
        let g = random_tangent(1, 2, seed);
        let n = g.real_len();
        let mut r = rng(seed ^ 0x55);
        let b = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
        let a = (&b + b.transpose()) * 0.5 + DMatrix::identity(n, n) * shift;
        let mut op = matrix_operator(a, g.clone());
        let res = truncated_cg(&mut op, &g, radius, &TcgParams::default()).unwrap();
        prop_assert!(res.step.norm() <= radius * (1.0 + 1e-12));
        prop_assert!(res.model_change(&g) <= 0.0);
    }
}

#[test]
fn params_validate_and_default() {
    let p = TrustRegionParams::default();
    p.validate().unwrap();
    let (r0, rmax) = p.radii(9);
    assert!((r0 - 0.12).abs() < 1e-15);
    assert!((rmax - 12.0).abs() < 1e-12);
    let bad = TrustRegionParams { accept_threshold: 0.3, ..TrustRegionParams::default() };
    assert!(bad.validate().is_err());
    let bad = TrustRegionParams { initial_radius: Some(-1.0), ..TrustRegionParams::default() };
    assert!(bad.validate().is_err());
    let parsed: TrustRegionParams = serde_json::from_str(r#"{"max_iterations": 5, "tcg": {"kappa": 0.2}}"#).unwrap();
    assert_eq!(parsed.max_iterations, 5);
    assert_eq!(parsed.tcg.kappa, 0.2);
    assert_eq!(parsed.tcg.theta, 1.0);
    assert!(serde_json::from_str::<TrustRegionParams>(r#"{"max_iteration": 5}"#).is_err());
}

fn small_problem(seed: u64) -> (Circuit, DenseOracle) {
    let mut r = rng(seed);
    let placed = [(0, 1), (1, 2), (2, 0), (0, 1)].map(|(a, b)| (haar_gate(&mut r), crate::kernels::Targets(a, b)));
    let mut circuit = Circuit::from_gates(3, &placed).unwrap();
    // share the first gate between slots 0 and 3
    let slots: Vec<_> = circuit
        .slots()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut s = *s;
            s.logical_id = if i == 3 { 0 } else { i };
            s
        })
        .collect();
    circuit = Circuit::new(3, circuit.gates()[..3].to_vec(), slots).unwrap();
    (circuit, DenseOracle::from_matrix(3, haar_unitary(8, &mut r)).unwrap())
}

fn spinless_problem(l: usize, layers: usize, seed: u64) -> (Circuit, DenseOracle) {
    let spec = build_spinless_fh(l, 1.0, 4.0, true).unwrap();
    let mut r = rng(seed);
    let gates = (0..layers).map(|_| haar_parity_gate(&mut r)).collect();
    (build_brickwall(l, layers, gates, true).unwrap(), DenseOracle::from_hamiltonian(&spec, 0.3).unwrap())
}

fn tangent_at(model: &LocalModel, seed: u64) -> ProductTangent {
    let mut r = rng(seed);
    ProductTangent(model.points().iter().map(|v| manifold::project(v, &gaussian_matrix(v.nrows(), &mut r))).collect())
}

#[test]
fn riemannian_hessian_is_self_adjoint() {
    let (c1, o1) = small_problem(3);
    let (c2, o2) = spinless_problem(4, 3, 4);
    let cases: [(&Circuit, &DenseOracle, EvalOptions, bool); 4] = [
        (&c1, &o1, EvalOptions::default(), false),
        (&c1, &o1, EvalOptions::default(), true),
        (&c2, &o2, EvalOptions { parity: true, ..EvalOptions::default() }, false),
        (&c2, &o2, EvalOptions { parity: true, ..EvalOptions::default() }, true),
    ];
    for (i, (c, o, opts, hvp)) in cases.into_iter().enumerate() {
        let model = LocalModel::new(c, o, opts, hvp).unwrap();
        for seed in 0..3 {
            let x = tangent_at(&model, 10 * i as u64 + seed);
            let y = tangent_at(&model, 100 + 10 * i as u64 + seed);
            let hx = model.hessian_apply(&x).unwrap();
            let hy = model.hessian_apply(&y).unwrap();
            let (a, b) = (x.inner(&hy), hx.inner(&y));
            assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "case {i}: {a} vs {b}");
        }
    }
}

#[test]
fn hessian_quadratic_form_matches_second_difference_along_retraction() {
    let (c1, o1) = small_problem(5);
    let (c2, o2) = spinless_problem(4, 2, 6);
    for (c, o, opts) in
        [(&c1, &o1, EvalOptions::default()), (&c2, &o2, EvalOptions { parity: true, ..EvalOptions::default() })]
    {
        let model = LocalModel::new(c, o, opts, false).unwrap();
        let f0 = target_value(c, o).unwrap();
        for seed in 0..4 {
            let x = tangent_at(&model, seed);
            let h = 1e-4;
            let f = |t: f64| target_value(&c.with_gates(model.retract(&x.scaled(t)).unwrap()).unwrap(), o).unwrap();
            let second = (f(h) - 2.0 * f0 + f(-h)) / (h * h);
            let first = (f(h) - f(-h)) / (2.0 * h);
            let quad = x.inner(&model.hessian_apply(&x).unwrap());
            let lin = x.inner(&model.gradient());
            assert!((second - quad).abs() < 1e-5 * (1.0 + quad.abs()), "{second} vs {quad}");
            assert!((first - lin).abs() < 1e-6 * (1.0 + lin.abs()), "{first} vs {lin}");
        }
    }
}

#[test]
fn exact_optimum_terminates_immediately() {
    let spec = build_spinless_fh(4, 0.0, 1.5, true).unwrap();
    let plan = TrotterPlan { order: 2, steps: 1, total_time: 0.4 };
    let circuit = build_trotter_circuit(&spec, &plan).unwrap();
    let oracle = DenseOracle::from_hamiltonian(&spec, 0.4).unwrap();
    let res = trust_region_optimize(&circuit, &oracle, &TrustRegionParams::default(), EvalOptions::default()).unwrap();
    assert_eq!(res.stop_reason, StopReason::GradientTolerance);
    assert!(res.iterations <= 1);
    assert!(res.trace.records.last().unwrap().grad_norm < 1e-10);
}

fn check_run(res: &OptimizationResult, parity: bool) {
    let values = res.trace.accepted_values();
    assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
    for r in &res.trace.records[1..] {
        if r.accepted {
            assert!(r.rho > 0.1);
        }
    }
    for g in res.circuit.gates() {
        assert!(manifold::unitarity_deviation(&manifold::gate_to_cmat(g)) < 1e-10);
        if parity {
            assert!(PARITY_ZEROS.iter().all(|&e| g.0[e] == C64::new(0.0, 0.0)));
        }
    }
    assert!(res.trace.final_error().unwrap() < res.trace.initial_error().unwrap());
}

#[test]
fn optimization_decreases_error_on_small_problems() {
    let params = TrustRegionParams { max_iterations: 15, ..TrustRegionParams::default() };
    let (c, o) = small_problem(9);
    let res = trust_region_optimize(&c, &o, &params, EvalOptions::default()).unwrap();
    check_run(&res, false);
    let (c, o) = spinless_problem(4, 3, 10);
    let res = trust_region_optimize(&c, &o, &params, EvalOptions { parity: true, ..EvalOptions::default() }).unwrap();
    check_run(&res, true);
    let reported = res.trace.final_error().unwrap();
    let direct = crate::dense::frobenius_distance_sq(&crate::dense::circuit_unitary(&res.circuit), o.matrix()).sqrt();
    assert!((reported - direct).abs() < 1e-10);
}

#[test]
fn dedup_and_products_reproduce_the_iterates() {
    let params = TrustRegionParams { max_iterations: 6, ..TrustRegionParams::default() };
    let (c, o) = spinless_problem(6, 3, 12);
    let opts = |dedup| EvalOptions { workers: 1, parity: true, dedup };
    let base = trust_region_optimize(&c, &o, &params, opts(false)).unwrap();
    let dedup = trust_region_optimize(&c, &o, &params, opts(true)).unwrap();
    let hvp =
        trust_region_optimize(&c, &o, &TrustRegionParams { use_hvp: true, ..params.clone() }, opts(false)).unwrap();
    for other in [&dedup, &hvp] {
        assert_eq!(base.trace.records.len(), other.trace.records.len());
        for (a, b) in base.trace.records.iter().zip(&other.trace.records) {
            assert_eq!(a.accepted, b.accepted);
            assert!((a.f - b.f).abs() < 1e-10);
            assert!((a.step_norm - b.step_norm).abs() < 1e-10);
        }
        for (a, b) in base.circuit.gates().iter().zip(other.circuit.gates()) {
            assert!(a.max_abs_diff(b) < 1e-10);
        }
    }
}

#[test]
fn trace_csv_round_trip() {
    let (c, o) = small_problem(13);
    let params = TrustRegionParams { max_iterations: 3, ..TrustRegionParams::default() };
    let res = trust_region_optimize(&c, &o, &params, EvalOptions::default()).unwrap();
    let mut buf = vec![];
    res.trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("iter,f,error_frobenius,grad_norm,radius,rho,inner_iters,accepted,seconds,step_norm\n"));
    let back = OptimizationTrace::read_csv(&buf[..]).unwrap();
    assert_eq!(back.records.len(), res.trace.records.len());
    assert!(back.records[0].rho.is_nan());
    for (a, b) in back.records.iter().zip(&res.trace.records).skip(1) {
        assert_eq!(a, b);
    }
}
