use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rqco::circuit::Checkpoint;
use rqco::models::make_oracle;
use rqco::objective::EvalOptions;
use rqco::optimizer::{trust_region_optimize_with, StopReason};
use serde::Serialize;

use crate::config::{ExecutionConfig, ModelConfig, RunConfig};
use crate::error::CliError;

/// Version of the trace.csv and summary.json layouts.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub parity: Option<bool>,
    pub dedup: Option<bool>,
    pub verbose: bool,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub execution: ExecutionConfig,
    pub use_hvp: bool,
    pub num_qubits: usize,
    pub num_slots: usize,
    pub num_layers: usize,
    pub initial_f: f64,
    pub final_f: f64,
    pub initial_error: f64,
    pub final_error: f64,
    pub error_reduction: f64,
    pub final_grad_norm: f64,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub stop_reason: StopReason,
    pub converged_at_start: bool,
    pub wall_time_seconds: f64,
}

pub fn run(config_path: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(w) = overrides.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        config.execution.workers = w;
    }
    if let Some(p) = overrides.parity {
        config.execution.parity_mode = p;
    }
    if let Some(d) = overrides.dedup {
        config.execution.translation_dedup = d;
    }
    let out_dir = overrides.out.clone().unwrap_or_else(|| config.output.dir.clone());
    let summary = optimize(&config, overrides.seed, &out_dir, overrides.verbose)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

/// Runs one optimization and writes trace.csv, gates.json and summary.json
/// into `out_dir`.
pub fn optimize(config: &RunConfig, seed: Option<u64>, out_dir: &Path, verbose: bool) -> Result<Summary, CliError> {
    let start = Instant::now();
    let spec = config.hamiltonian()?;
    let circuit = config.initial_circuit(&spec, seed)?;
    let oracle = make_oracle(&spec, config.model.t, config.model.oracle)?;
    let exec = config.execution;
    let opts = EvalOptions { workers: exec.workers, parity: exec.parity_mode, dedup: exec.translation_dedup };
    fs::create_dir_all(out_dir)?;
    // rows are flushed as they arrive so that long runs can be followed
    let mut trace = csv::Writer::from_path(out_dir.join("trace.csv"))?;
    let mut write_error = None;
    let result = trust_region_optimize_with(&circuit, oracle.as_ref(), &config.optimizer, opts, |r| {
        if write_error.is_none() {
            write_error = trace.serialize(r).and_then(|_| Ok(trace.flush()?)).err();
        }
        if verbose {
            eprintln!(
                "iter {:4}  f {:.12e}  err {:.6e}  grad {:.3e}  radius {:.3e}  rho {:.4}  inner {:3}  {}",
                r.iter,
                r.f,
                r.error_frobenius,
                r.grad_norm,
                r.radius,
                r.rho,
                r.inner_iters,
                if r.accepted { "accept" } else { "reject" }
            );
        }
    })?;

    if let Some(e) = write_error {
        return Err(e.into());
    }
    Checkpoint::from_circuit(&result.circuit).save(out_dir.join("gates.json"))?;

    let records = &result.trace.records;
    let (first, last) = (&records[0], &records[records.len() - 1]);
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        model: config.model.clone(),
        execution: exec,
        use_hvp: config.optimizer.use_hvp,
        num_qubits: circuit.num_qubits(),
        num_slots: circuit.num_slots(),
        num_layers: circuit.num_logical(),
        initial_f: first.f,
        final_f: last.f,
        initial_error: first.error_frobenius,
        final_error: last.error_frobenius,
        error_reduction: first.error_frobenius / last.error_frobenius,
        final_grad_norm: last.grad_norm,
        iterations: result.iterations,
        accepted_steps: records[1..].iter().filter(|r| r.accepted).count(),
        stop_reason: result.stop_reason,
        converged_at_start: result.iterations == 0 && result.stop_reason == StopReason::GradientTolerance,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}
