//! Riemannian trust-region minimization of the circuit objective over the
//! product of unitary groups carrying the logical gates.
//!
//! Each outer iteration evaluates value, gradient and Hessian once at the
//! current point, solves the trust-region subproblem by truncated CG and
//! retracts every gate component with the polar decomposition.

mod tcg;

use std::io;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::kernels::{GateMatrix, C64};
use crate::manifold::{self, CMat, GateParametrization};
use crate::models::TargetUnitary;
use crate::objective::{self, EvalOptions, HessianBlocks};

pub use tcg::{truncated_cg, ProductTangent, TcgParams, TcgResult, TcgStop};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrustRegionParams {
    /// Defaults to `0.01·√(16n)` for `n` logical gates.
    pub initial_radius: Option<f64>,
    /// Defaults to 100 times the initial radius.
    pub max_radius: Option<f64>,
    pub accept_threshold: f64,
    pub shrink_threshold: f64,
    pub shrink_factor: f64,
    pub expand_threshold: f64,
    pub expand_factor: f64,
    pub max_iterations: usize,
    pub gradient_norm_tolerance: f64,
    /// The run stalls once the radius drops below this.
    pub min_radius: f64,
    pub tcg: TcgParams,
    /// Apply the Hessian by forward-over-reverse products instead of
    /// assembling its blocks.
    pub use_hvp: bool,
}

impl Default for TrustRegionParams {
    fn default() -> Self {
        TrustRegionParams {
            initial_radius: None,
            max_radius: None,
            accept_threshold: 0.1,
            shrink_threshold: 0.25,
            shrink_factor: 0.25,
            expand_threshold: 0.75,
            expand_factor: 2.0,
            max_iterations: 200,
            gradient_norm_tolerance: 1e-10,
            min_radius: 1e-14,
            tcg: TcgParams::default(),
            use_hvp: false,
        }
    }
}

impl TrustRegionParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let (a, s, e) = (self.accept_threshold, self.shrink_threshold, self.expand_threshold);
        if !(0.0 < a && a < s && s < e && e < 1.0) {
            return bad(format!("thresholds must satisfy 0 < {a} < {s} < {e} < 1"));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return bad(format!("shrink_factor {} not in (0, 1)", self.shrink_factor));
        }
        if !(self.expand_factor > 1.0 && self.expand_factor.is_finite()) {
            return bad(format!("expand_factor {} must exceed 1", self.expand_factor));
        }
        for (name, r) in [("initial_radius", self.initial_radius), ("max_radius", self.max_radius)] {
            if let Some(r) = r {
                if !(r > 0.0 && r.is_finite()) {
                    return bad(format!("{name} {r} must be positive"));
                }
            }
        }
        if let (Some(r0), Some(rmax)) = (self.initial_radius, self.max_radius) {
            if r0 > rmax {
                return bad(format!("initial_radius {r0} exceeds max_radius {rmax}"));
            }
        }
        if !(self.min_radius > 0.0) {
            return bad(format!("min_radius {} must be positive", self.min_radius));
        }
        if !(self.gradient_norm_tolerance >= 0.0) {
            return bad(format!("gradient_norm_tolerance {}", self.gradient_norm_tolerance));
        }
        if !(self.tcg.kappa > 0.0 && self.tcg.kappa < 1.0) || !(self.tcg.theta > 0.0) {
            return bad(format!("tcg kappa {} / theta {}", self.tcg.kappa, self.tcg.theta));
        }
        if self.tcg.max_inner == Some(0) {
            return bad("tcg max_inner must be positive".into());
        }
        Ok(())
    }

    /// `(initial, max)` radius for `n_logical` gates.
    pub fn radii(&self, n_logical: usize) -> (f64, f64) {
        let r0 = self.initial_radius.unwrap_or(0.01 * ((16 * n_logical.max(1)) as f64).sqrt());
        (r0, self.max_radius.unwrap_or(100.0 * r0))
    }
}

/// Source of Hessian applications at a fixed point.
enum HessianSource<'a> {
    Blocks(HessianBlocks),
    Products { circuit: &'a Circuit, oracle: &'a dyn TargetUnitary, workers: usize },
}

/// Gradient and Hessian of the objective at one point of the product
/// manifold, in the component layout of a [`GateParametrization`].
pub struct LocalModel<'a> {
    param: GateParametrization,
    points: Vec<CMat>,
    egrad: Vec<CMat>,
    pub report: objective::ObjectiveReport,
    hessian: HessianSource<'a>,
}

impl<'a> LocalModel<'a> {
    pub fn new(circuit: &'a Circuit, oracle: &'a dyn TargetUnitary, opts: EvalOptions, use_hvp: bool) -> Result<Self> {
        let param = opts.parametrization();
        let mut report = objective::evaluate(circuit, oracle, opts, !use_hvp)?;
        let hessian = match report.hessian.take() {
            Some(b) => HessianSource::Blocks(b),
            None => HessianSource::Products { circuit, oracle, workers: opts.workers },
        };
        let points = param.split(circuit.gates())?;
        let egrad = param.gather(&report.euclidean_gradient());
        Ok(LocalModel { param, points, egrad, report, hessian })
    }

    pub fn parametrization(&self) -> GateParametrization {
        self.param
    }

    pub fn points(&self) -> &[CMat] {
        &self.points
    }

    pub fn gradient(&self) -> ProductTangent {
        ProductTangent(self.report.riemannian_gradient.clone())
    }

    /// Riemannian Hessian applied to a tangent vector.
    pub fn hessian_apply(&self, x: &ProductTangent) -> Result<ProductTangent> {
        if x.0.len() != self.points.len() {
            return Err(Error::DimensionMismatch { expected: self.points.len(), found: x.0.len() });
        }
        let z = self.param.scatter(&x.0);
        let hz = match &self.hessian {
            HessianSource::Blocks(b) => b.apply(&z)?,
            HessianSource::Products { circuit, oracle, workers } => {
                objective::hessian_vector_product(circuit, *oracle, &z, *workers)?
            }
        };
        let minus = C64::new(-1.0, 0.0);
        let dir: Vec<GateMatrix> = hz.iter().map(|h| h.conj().scale(minus)).collect();
        let egrad_dir = self.param.gather(&dir);
        let out = (0..self.points.len())
            .map(|c| manifold::riemannian_hessian_apply(&self.points[c], &self.egrad[c], &egrad_dir[c], &x.0[c]))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductTangent(out))
    }

    /// Retracts every component along `step` and reassembles the gates.
    pub fn retract(&self, step: &ProductTangent) -> Result<Vec<GateMatrix>> {
        let comps = (self.points.iter().zip(&step.0))
            .map(|(v, x)| manifold::polar_factor(&(v + x)))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.param.scatter(&comps))
    }
}

/// One row of the optimization trace, describing the state after the
/// iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub f: f64,
    pub error_frobenius: f64,
    pub grad_norm: f64,
    pub radius: f64,
    pub rho: f64,
    pub inner_iters: usize,
    pub accepted: bool,
    pub seconds: f64,
    pub step_norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizationTrace {
    pub records: Vec<IterationRecord>,
}

impl OptimizationTrace {
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let records = r.deserialize().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_error)?;
        Ok(OptimizationTrace { records })
    }

    pub fn initial_error(&self) -> Option<f64> {
        self.records.first().map(|r| r.error_frobenius)
    }

    pub fn final_error(&self) -> Option<f64> {
        self.records.last().map(|r| r.error_frobenius)
    }

    /// `f` after each accepted step, starting with the initial value.
    pub fn accepted_values(&self) -> Vec<f64> {
        self.records.iter().filter(|r| r.accepted).map(|r| r.f).collect()
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    RadiusUnderflow,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub circuit: Circuit,
    pub trace: OptimizationTrace,
    pub stop_reason: StopReason,
    pub iterations: usize,
}

/// `f = −2^k + ‖C − U‖_F² / 2`, evaluated from the directly summed error so
/// that differences between nearby iterates keep their precision.
fn stable_value(num_qubits: usize, error_sq: f64) -> f64 {
    -((1u64 << num_qubits) as f64) + 0.5 * error_sq
}

pub fn trust_region_optimize(
    circuit: &Circuit,
    oracle: &dyn TargetUnitary,
    params: &TrustRegionParams,
    opts: EvalOptions,
) -> Result<OptimizationResult> {
    trust_region_optimize_with(circuit, oracle, params, opts, |_| {})
}

/// As [`trust_region_optimize`], calling `observe` on every trace record.
pub fn trust_region_optimize_with(
    circuit: &Circuit,
    oracle: &dyn TargetUnitary,
    params: &TrustRegionParams,
    opts: EvalOptions,
    mut observe: impl FnMut(&IterationRecord),
) -> Result<OptimizationResult> {
    params.validate()?;
    let start = Instant::now();
    let k = circuit.num_qubits();
    let (mut radius, max_radius) = params.radii(circuit.num_logical());
    let mut current = circuit.clone();
    let mut records = vec![];
    let mut push = |r: IterationRecord, records: &mut Vec<IterationRecord>| {
        observe(&r);
        records.push(r);
    };

    let mut model = LocalModel::new(&current, oracle, opts, params.use_hvp)?;
    let mut error_sq = model.report.error_sq;
    let mut grad = model.gradient();
    let mut grad_norm = grad.norm();
    push(
        IterationRecord {
            iter: 0,
            f: stable_value(k, error_sq),
            error_frobenius: error_sq.sqrt(),
            grad_norm,
            radius,
            rho: f64::NAN,
            inner_iters: 0,
            accepted: true,
            seconds: start.elapsed().as_secs_f64(),
            step_norm: 0.0,
        },
        &mut records,
    );

    let mut iter = 0;
    let stop_reason = loop {
        if grad_norm <= params.gradient_norm_tolerance {
            break StopReason::GradientTolerance;
        }
        if iter >= params.max_iterations {
            break StopReason::MaxIterations;
        }
        if radius < params.min_radius {
            break StopReason::RadiusUnderflow;
        }
        iter += 1;

        let sub = truncated_cg(&mut |x| model.hessian_apply(x), &grad, radius, &params.tcg)?;
        let predicted = -sub.model_change(&grad);
        let step_norm = sub.step.norm();
        let on_boundary = matches!(sub.stop, TcgStop::NegativeCurvature | TcgStop::ExceededRadius);

        let candidate = current.with_gates(model.retract(&sub.step)?)?;
        let cand = objective::value_report(&candidate, oracle, opts.workers)?;
        let actual = 0.5 * (error_sq - cand.error_sq);
        let rho = if predicted > 0.0 { actual / predicted } else { f64::NEG_INFINITY };

        if rho < params.shrink_threshold {
            radius *= params.shrink_factor;
        } else if rho > params.expand_threshold && on_boundary {
            radius = (radius * params.expand_factor).min(max_radius);
        }
        let accepted = rho > params.accept_threshold;
        if accepted {
            drop(model);
            current = candidate;
            model = LocalModel::new(&current, oracle, opts, params.use_hvp)?;
            error_sq = model.report.error_sq;
            grad = model.gradient();
            grad_norm = grad.norm();
        }
        push(
            IterationRecord {
                iter,
                f: stable_value(k, error_sq),
                error_frobenius: error_sq.sqrt(),
                grad_norm,
                radius,
                rho,
                inner_iters: sub.inner_iters,
                accepted,
                seconds: start.elapsed().as_secs_f64(),
                step_norm,
            },
            &mut records,
        );
    };
    Ok(OptimizationResult { circuit: current, trace: OptimizationTrace { records }, stop_reason, iterations: iter })
}

#[cfg(test)]
mod tests;
