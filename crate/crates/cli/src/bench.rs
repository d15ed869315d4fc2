use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rqco::circuit::{build_brickwall, Circuit};
use rqco::kernels::{apply_gate, Gate, Targets};
use rqco::models::CircuitOracle;
use rqco::objective::{evaluate, summand_gradient, EvalOptions};
use rqco::random::{haar_gate, haar_parity_gate, random_state, rng};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::BenchKind;

pub const BENCH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub struct Settings {
    pub qubits: Vec<usize>,
    pub layers: Vec<usize>,
    pub workers: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub parity: bool,
    pub dedup: bool,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub schema_version: u32,
    pub kind: String,
    pub qubits: usize,
    pub layers: usize,
    pub slots: usize,
    pub workers: usize,
    pub repeats: usize,
    pub median_seconds: f64,
    /// Gradient bench: one summand, and that time scaled by `2^k`.
    pub per_summand_seconds: Option<f64>,
    pub extrapolated_seconds: Option<f64>,
    /// Scaling bench: time with one worker over this time.
    pub speedup: Option<f64>,
    pub bit_identical: Option<bool>,
    /// Hessian bench counters and their agreement with the class sizes.
    pub pair_contractions: Option<u64>,
    pub pair_weight: Option<u64>,
    pub counter_check: Option<bool>,
}

impl BenchRow {
    fn new(
        kind: &str,
        qubits: usize,
        layers: usize,
        slots: usize,
        workers: usize,
        repeats: usize,
        median: f64,
    ) -> Self {
        BenchRow {
            schema_version: BENCH_SCHEMA_VERSION,
            kind: kind.into(),
            qubits,
            layers,
            slots,
            workers,
            repeats,
            median_seconds: median,
            per_summand_seconds: None,
            extrapolated_seconds: None,
            speedup: None,
            bit_identical: None,
            pair_contractions: None,
            pair_weight: None,
            counter_check: None,
        }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median wall time of `repeats` calls; returns the last result too.
fn time<T>(repeats: usize, mut f: impl FnMut() -> Result<T, CliError>) -> Result<(f64, T), CliError> {
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats.max(1) {
        let s = Instant::now();
        last = Some(f()?);
        times.push(s.elapsed().as_secs_f64());
    }
    Ok((median(times), last.expect("at least one repeat")))
}

/// Random periodic brick wall and an independent random brick-wall target.
fn instance(k: usize, layers: usize, seed: u64, parity: bool) -> Result<(Circuit, CircuitOracle), CliError> {
    let mut r = rng(seed);
    let mut gates =
        |n| -> Vec<_> { (0..n).map(|_| if parity { haar_parity_gate(&mut r) } else { haar_gate(&mut r) }).collect() };
    let circuit = build_brickwall(k, layers, gates(layers), true)?;
    let target = build_brickwall(k, layers, gates(layers), true)?;
    Ok((circuit, CircuitOracle::new(target)))
}

pub fn run(kind: BenchKind, s: &Settings) -> Result<(), CliError> {
    if s.qubits.iter().any(|&k| !(2..=24).contains(&k) || k % 2 == 1) {
        return Err(CliError::Usage("--qubits must be even and between 2 and 24".into()));
    }
    if s.layers.contains(&0) || s.workers.contains(&0) {
        return Err(CliError::Usage("--layers and --workers must be positive".into()));
    }
    let rows = match kind {
        BenchKind::Kernels => bench_kernels(s)?,
        BenchKind::Gradient => bench_gradient(s)?,
        BenchKind::Hessian => bench_hessian(s)?,
        BenchKind::Scaling => bench_scaling(s)?,
    };
    fs::create_dir_all(&s.out)?;
    let mut w = csv::Writer::from_path(s.out.join("bench.csv"))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    for row in &rows {
        println!("{}", serde_json::to_string(row)?);
    }
    Ok(())
}

fn bench_kernels(s: &Settings) -> Result<Vec<BenchRow>, CliError> {
    let mut rows = vec![];
    for &k in &s.qubits {
        let mut r = rng(s.seed);
        let psi = random_state(k, &mut r);
        for (name, targets) in [("kernels_adjacent", Targets(k / 2 - 1, k / 2)), ("kernels_general", Targets(0, k - 1))]
        {
            let gate = Gate::new(haar_gate(&mut r), targets);
            let (t, _) = time(s.repeats, || Ok(apply_gate(&psi, &gate)?))?;
            rows.push(BenchRow::new(name, k, 1, 1, 1, s.repeats, t));
        }
    }
    Ok(rows)
}

fn bench_gradient(s: &Settings) -> Result<Vec<BenchRow>, CliError> {
    let mut rows = vec![];
    for &k in &s.qubits {
        for &layers in &s.layers {
            let (circuit, oracle) = instance(k, layers, s.seed, s.parity)?;
            let (per_summand, _) = time(s.repeats, || Ok(summand_gradient(0, &circuit, &oracle)?))?;
            let opts = EvalOptions { workers: s.workers[0], parity: s.parity, dedup: false };
            let (full, _) = time(s.repeats, || Ok(evaluate(&circuit, &oracle, opts, false)?))?;
            let mut row = BenchRow::new("gradient", k, layers, circuit.num_slots(), opts.workers, s.repeats, full);
            row.per_summand_seconds = Some(per_summand);
            row.extrapolated_seconds = Some(per_summand * (1u64 << k) as f64);
            rows.push(row);
        }
    }
    Ok(rows)
}

fn bench_hessian(s: &Settings) -> Result<Vec<BenchRow>, CliError> {
    let mut rows = vec![];
    for &k in &s.qubits {
        for &layers in &s.layers {
            let (circuit, oracle) = instance(k, layers, s.seed, s.parity)?;
            let opts = EvalOptions { workers: s.workers[0], parity: s.parity, dedup: s.dedup };
            let (t, report) = time(s.repeats, || Ok(evaluate(&circuit, &oracle, opts, true)?))?;
            let c = report.counters;
            let n = circuit.num_slots() as u64;
            let dim = 1u64 << k;
            let expected_contractions =
                if s.dedup { dim * circuit.translation_classes()?.len() as u64 } else { dim * n * (n - 1) / 2 };
            let mut row = BenchRow::new("hessian", k, layers, circuit.num_slots(), opts.workers, s.repeats, t);
            row.pair_contractions = Some(c.pair_contractions);
            row.pair_weight = Some(c.pair_weight);
            row.counter_check =
                Some(c.pair_contractions == expected_contractions && c.pair_weight == dim * n * (n - 1) / 2);
            rows.push(row);
        }
    }
    Ok(rows)
}

fn bench_scaling(s: &Settings) -> Result<Vec<BenchRow>, CliError> {
    let mut rows = vec![];
    for &k in &s.qubits {
        for &layers in &s.layers {
            let (circuit, oracle) = instance(k, layers, s.seed, s.parity)?;
            let mut base: Option<(f64, f64, Vec<u64>)> = None;
            let mut prev_speedup = 0.0;
            for &workers in &s.workers {
                let opts = EvalOptions { workers, parity: s.parity, dedup: false };
                let (t, report) = time(s.repeats, || Ok(evaluate(&circuit, &oracle, opts, false)?))?;
                let bits: Vec<u64> = (report.holomorphic_gradient.iter())
                    .flat_map(|g| g.0.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]))
                    .chain([report.value.to_bits()])
                    .collect();
                let (t1, _, ref_bits) = base.get_or_insert((t, report.value, bits.clone()));
                let speedup = *t1 / t;
                if speedup < prev_speedup {
                    eprintln!(
                        "warning: speedup decreased to {speedup:.2} at {workers} workers (k={k}, layers={layers})"
                    );
                }
                prev_speedup = speedup;
                let mut row = BenchRow::new("scaling", k, layers, circuit.num_slots(), workers, s.repeats, t);
                row.speedup = Some(speedup);
                row.bit_identical = Some(*ref_bits == bits);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}
