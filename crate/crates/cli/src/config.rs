//! Run configuration.
//!
//! ```json
//! {
//!   "model": { "model": "spinless_fh", "L": 6, "J": 1.0, "U": 4.0, "periodic": true, "t": 0.25, "oracle": "dense" },
//!   "circuit": { "init": { "trotter": { "order": 2, "steps": 1 } } },
//!   "optimizer": { "max_iterations": 100 },
//!   "execution": { "workers": 1, "parity_mode": true, "translation_dedup": true },
//!   "output": { "dir": "out" }
//! }
//! ```

use std::path::{Path, PathBuf};

use rqco::circuit::{build_brickwall, Checkpoint, Circuit};
use rqco::models::{
    build_spinful_fh, build_spinless_fh, build_trotter_circuit, HamiltonianSpec, ModelKind, OracleMethod, TrotterPlan,
};
use rqco::optimizer::TrustRegionParams;
use rqco::random::{haar_gate, haar_parity_gate, rng};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub circuit: CircuitConfig,
    #[serde(default)]
    pub optimizer: TrustRegionParams,
    #[serde(default)]
    pub execution: ExecutionConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "J", default = "default_j")]
    pub j: f64,
    #[serde(rename = "U", default = "default_u")]
    pub u: f64,
    #[serde(default = "default_true")]
    pub periodic: bool,
    pub t: f64,
    #[serde(default)]
    pub oracle: OracleMethod,
}

fn default_j() -> f64 {
    1.0
}

fn default_u() -> f64 {
    4.0
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    /// Expected number of logical layers; required for random starts.
    #[serde(default)]
    pub layers: Option<usize>,
    pub init: InitConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum InitConfig {
    Trotter { order: u32, steps: usize },
    File(PathBuf),
    Random { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExecutionConfig {
    pub workers: usize,
    pub parity_mode: bool,
    pub translation_dedup: bool,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        ExecutionConfig { workers: 1, parity_mode: false, translation_dedup: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    /// Parses and validates; unknown keys are rejected with their path.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().to_string();
            let key = unknown_key(&message).map(|k| match path.as_str() {
                "." => k,
                p if p == k || p.ends_with(&format!(".{k}")) => p.to_string(),
                p => format!("{p}.{k}"),
            });
            CliError::Config { message, path: Some(key.unwrap_or(path)) }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config { message: format!("cannot read {}: {e}", path.display()), path: None })?;
        let mut config = Self::from_json(&text)?;
        // relative checkpoint paths are resolved against the config file
        if let InitConfig::File(p) = &mut config.circuit.init {
            if p.is_relative() {
                if let Some(parent) = path.parent() {
                    *p = parent.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |path: &str, message: String| Err(CliError::Config { message, path: Some(path.into()) });
        if self.model.sites < 2 {
            return invalid("model.L", format!("need at least 2 sites, got {}", self.model.sites));
        }
        if !self.model.t.is_finite() {
            return invalid("model.t", "time must be finite".into());
        }
        if !self.model.j.is_finite() || !self.model.u.is_finite() {
            return invalid("model", "couplings must be finite".into());
        }
        if let InitConfig::Trotter { order, steps } = self.circuit.init {
            if ![1, 2, 4].contains(&order) {
                return invalid("circuit.init.trotter.order", format!("unsupported order {order}"));
            }
            if steps == 0 {
                return invalid("circuit.init.trotter.steps", "steps must be positive".into());
            }
        }
        if matches!(self.circuit.init, InitConfig::Random { .. }) && self.circuit.layers.is_none() {
            return invalid("circuit.layers", "random initialization needs a layer count".into());
        }
        if self.execution.workers == 0 {
            return invalid("execution.workers", "workers must be positive".into());
        }
        self.optimizer
            .validate()
            .map_err(|e| CliError::Config { message: e.to_string(), path: Some("optimizer".into()) })
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianSpec, CliError> {
        let m = &self.model;
        Ok(match m.model {
            ModelKind::SpinlessFh => build_spinless_fh(m.sites, m.j, m.u, m.periodic)?,
            ModelKind::SpinfulFh => build_spinful_fh(m.sites, m.j, m.u, m.periodic)?,
        })
    }

    /// Initial circuit; `seed` overrides the configured random seed.
    pub fn initial_circuit(&self, spec: &HamiltonianSpec, seed: Option<u64>) -> Result<Circuit, CliError> {
        let circuit = match &self.circuit.init {
            InitConfig::Trotter { order, steps } => {
                build_trotter_circuit(spec, &TrotterPlan { order: *order, steps: *steps, total_time: self.model.t })?
            }
            InitConfig::File(path) => Checkpoint::load(path)?.to_circuit()?,
            InitConfig::Random { seed: configured } => {
                let layers = self.circuit.layers.unwrap_or_default();
                let mut r = rng(seed.unwrap_or(*configured));
                let gates = (0..layers)
                    .map(|_| if self.execution.parity_mode { haar_parity_gate(&mut r) } else { haar_gate(&mut r) })
                    .collect();
                build_brickwall(spec.num_qubits, layers, gates, self.model.periodic)?
            }
        };
        if circuit.num_qubits() != spec.num_qubits {
            return Err(CliError::Config {
                message: format!("circuit has {} qubits, model has {}", circuit.num_qubits(), spec.num_qubits),
                path: Some("circuit".into()),
            });
        }
        if let Some(layers) = self.circuit.layers {
            if circuit.num_logical() != layers {
                return Err(CliError::Config {
                    message: format!("initial circuit has {} layers, config expects {layers}", circuit.num_logical()),
                    path: Some("circuit.layers".into()),
                });
            }
        }
        Ok(circuit)
    }
}

/// The key named in a serde "unknown field `x`" message.
fn unknown_key(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "model": { "model": "spinless_fh", "L": 6, "t": 0.25 },
        "circuit": { "init": { "trotter": { "order": 2, "steps": 1 } } }
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(SAMPLE).unwrap();
        assert_eq!(c.model.j, 1.0);
        assert_eq!(c.model.u, 4.0);
        assert!(c.model.periodic);
        assert_eq!(c.model.oracle, OracleMethod::Dense);
        assert_eq!(c.execution, ExecutionConfig::default());
        let spec = c.hamiltonian().unwrap();
        assert_eq!(c.initial_circuit(&spec, None).unwrap().num_logical(), 3);
    }

    #[test]
    fn unknown_keys_are_named_with_their_path() {
        let text = SAMPLE.replace(r#""L": 6"#, r#""L": 6, "sites": 6"#);
        match RunConfig::from_json(&text) {
            Err(CliError::Config { path, .. }) => assert_eq!(path.as_deref(), Some("model.sites")),
            other => panic!("{other:?}"),
        }
        let text = SAMPLE.replace(r#""model": {"#, r#""extra": 1, "model": {"#);
        match RunConfig::from_json(&text) {
            Err(CliError::Config { path, .. }) => assert_eq!(path.as_deref(), Some("extra")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors_are_config_errors() {
        let text = SAMPLE.replace(r#""order": 2"#, r#""order": 3"#);
        assert!(matches!(RunConfig::from_json(&text), Err(CliError::Config { .. })));
        let text = SAMPLE
            .replace(r#""init": { "trotter": { "order": 2, "steps": 1 } }"#, r#""init": { "random": { "seed": 1 } }"#);
        assert!(matches!(RunConfig::from_json(&text), Err(CliError::Config { .. })));
    }
}
