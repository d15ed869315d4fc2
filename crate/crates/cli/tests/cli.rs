use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn rqco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rqco")).args(args).env_remove("RQCO_WORKERS").output().expect("binary runs")
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// Parsed trace rows as string maps keyed by header.
fn read_trace(p: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(p).unwrap();
    r.deserialize().map(|row| row.unwrap()).collect()
}

fn num(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

const J0: &str = r#"{
  "model": { "model": "spinless_fh", "L": 4, "J": 0.0, "U": 1.5, "periodic": true, "t": 0.4 },
  "circuit": { "init": { "trotter": { "order": 2, "steps": 1 } } }
}"#;

#[test]
fn exact_start_reports_convergence_at_start() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "j0.json", J0);
    let out = dir.path().join("out");
    let o = rqco(&["optimize", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["converged_at_start"], Value::Bool(true));
    assert_eq!(summary["stop_reason"], "gradient_tolerance");
    assert!(summary["final_error"].as_f64().unwrap() < 1e-10);
    assert!(out.join("gates.json").exists());
    let stdout: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stdout, summary);
}

#[test]
fn malformed_config_exits_2_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let bad = J0.replace(r#""t": 0.4"#, r#""t": 0.4, "time": 1"#);
    let config = write_config(dir.path(), "bad.json", &bad);
    let o = rqco(&["optimize", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert_eq!(err["error"]["key"], "model.time");

    let config = write_config(dir.path(), "broken.json", "{ not json");
    assert_eq!(rqco(&["optimize", "--config", config.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(rqco(&["optimize", "--config", "/nonexistent/config.json"]).status.code(), Some(2));
}

#[test]
fn sample_config_reproduces_committed_pilot_trace() {
    let root = repo_root();
    let dir = tempfile::tempdir().unwrap();
    let o = rqco(&[
        "optimize",
        "--config",
        root.join("configs/spinless_l6.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let committed = read_trace(&root.join("configs/pilot/spinless_l6/trace.csv"));
    let fresh = read_trace(&dir.path().join("trace.csv"));
    // rows before the gradient reaches rounding level are reproducible
    for (a, b) in committed.iter().zip(&fresh).take(4) {
        assert_eq!(a["accepted"], b["accepted"]);
        for key in ["f", "error_frobenius", "radius"] {
            assert!((num(a, key) - num(b, key)).abs() <= 1e-10 * num(a, key).abs().max(1.0), "{key}");
        }
    }
    let (a, b) = (committed.last().unwrap(), fresh.last().unwrap());
    assert!((num(a, "error_frobenius") - num(b, "error_frobenius")).abs() < 1e-10);
    let summary = read_json(&root.join("configs/pilot/spinless_l6/summary.json"));
    let fresh_summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["stop_reason"], fresh_summary["stop_reason"]);
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let root = repo_root();
    let config = root.join("configs/spinless_l6.json");
    let mut traces = vec![];
    for w in ["1", "3"] {
        let out = dir.path().join(w);
        let o =
            rqco(&["optimize", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", w]);
        assert!(o.status.success());
        traces.push(read_trace(&out.join("trace.csv")));
    }
    assert_eq!(traces[0].len(), traces[1].len());
    for (a, b) in traces[0].iter().zip(&traces[1]) {
        for key in ["f", "error_frobenius", "grad_norm", "radius", "rho", "inner_iters", "accepted", "step_norm"] {
            assert_eq!(a[key], b[key], "{key}");
        }
    }
    let g1 = fs::read_to_string(dir.path().join("1/gates.json")).unwrap();
    let g3 = fs::read_to_string(dir.path().join("3/gates.json")).unwrap();
    assert_eq!(g1, g3);
}

#[test]
fn flags_override_the_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
      "model": { "model": "spinless_fh", "L": 4, "t": 0.3 },
      "circuit": { "layers": 2, "init": { "random": { "seed": 5 } } },
      "optimizer": { "max_iterations": 3 }
    }"#;
    let config = write_config(dir.path(), "rand.json", body);
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["optimize", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = rqco(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        read_json(&out.join("summary.json"))
    };
    let a = run("a", &[]);
    let b = run("b", &["--seed", "5"]);
    let c = run("c", &["--seed", "6"]);
    let d = run("d", &["--parity", "on", "--dedup", "on"]);
    assert_eq!(a["initial_error"], b["initial_error"]);
    assert_ne!(a["initial_error"], c["initial_error"]);
    assert_eq!(d["execution"]["parity_mode"], true);
    assert_eq!(d["execution"]["translation_dedup"], true);
    assert_eq!(a["num_layers"], 2);

    // restart from the written checkpoint
    let resume = format!(
        r#"{{ "model": {{ "model": "spinless_fh", "L": 4, "t": 0.3 }},
             "circuit": {{ "init": {{ "file": "{}" }} }},
             "optimizer": {{ "max_iterations": 0 }} }}"#,
        dir.path().join("a/gates.json").display()
    );
    let config = write_config(dir.path(), "resume.json", &resume);
    let out = dir.path().join("resume");
    let o = rqco(&["optimize", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("summary.json"));
    assert!((r["initial_error"].as_f64().unwrap() - a["final_error"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn check_suites_pass_and_limits_are_enforced() {
    for kind in ["gradient", "hessian", "hvp", "kernels"] {
        let o = rqco(&["check", "--kind", kind]);
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(o.status.success(), "{kind}: {stdout}");
        assert!(stdout.lines().all(|l| l.starts_with("PASS")), "{stdout}");
    }
    let o = rqco(&["check", "--kind", "gradient", "--qubits", "4", "--slots", "6"]);
    assert!(o.status.success());
    let o = rqco(&["check", "--kind", "kernels", "--qubits", "7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_writes_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = rqco(&[
        "bench",
        "--kind",
        "hessian",
        "--qubits",
        "4,6",
        "--layers",
        "3",
        "--repeats",
        "1",
        "--dedup",
        "on",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_trace(&dir.path().join("bench.csv"));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r["schema_version"], "1");
        assert_eq!(r["counter_check"], "true");
    }

    let o = rqco(&[
        "bench",
        "--kind",
        "scaling",
        "--qubits",
        "6",
        "--layers",
        "3",
        "--workers",
        "1,2",
        "--repeats",
        "1",
        "--out",
        out,
    ]);
    assert!(o.status.success());
    let rows = read_trace(&dir.path().join("bench.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["bit_identical"] == "true"));
    assert_eq!(num(&rows[0], "speedup"), 1.0);

    let o = rqco(&["bench", "--kind", "gradient", "--qubits", "4", "--layers", "2,4", "--repeats", "3", "--out", out]);
    assert!(o.status.success());
    let rows = read_trace(&dir.path().join("bench.csv"));
    for r in &rows {
        let per = num(r, "per_summand_seconds");
        assert!((num(r, "extrapolated_seconds") - 16.0 * per).abs() <= 1e-12 * per.max(1e-300) * 16.0);
    }

    let o = rqco(&["bench", "--kind", "kernels", "--qubits", "4", "--repeats", "2", "--out", out]);
    assert!(o.status.success());
    assert_eq!(read_trace(&dir.path().join("bench.csv")).len(), 2);

    let o = rqco(&["bench", "--kind", "kernels", "--qubits", "5", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
}
