//! Experiment configuration: a versioned JSON schema with unknown fields
//! rejected at every level.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qla_disorder::ModelConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Disorder keys; each overrides `model.disorder.key` for one run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keys: Option<Vec<u64>>,
    /// Qubit cap for dense encodings and gadget matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_qubits: Option<usize>,
}

/// Energies either listed or as an evenly spaced inclusive grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

/// Optional simulated amplitude estimation of each reported element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Qae {
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    Rdm {
        beta: f64,
        mu: f64,
        epsilon: f64,
        /// Columns to report; all of `D` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sites: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        qae: Option<Qae>,
    },
    Ldos {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omegas: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_grid: Option<Grid>,
        eta: f64,
        mu: f64,
        epsilon: f64,
        /// Sites to report; every site when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sites: Option<Vec<usize>>,
    },
    MomentumLdos {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omegas: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_grid: Option<Grid>,
        eta: f64,
        mu: f64,
        epsilon: f64,
    },
    Greens {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omegas: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_grid: Option<Grid>,
        eta: f64,
        mu: f64,
        epsilon: f64,
        /// Columns of `ηG` to report.
        sites: Vec<usize>,
    },
    Conductivity {
        beta: f64,
        mu: f64,
        eta: f64,
        epsilon: f64,
        /// Velocity axes `(a, b)` of `σ^{ab}`.
        axes: [usize; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes: Option<usize>,
        /// Hutchinson probe count `K`; exact traces when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
    },
    BqpCheck {
        /// Gate-list file, relative to the config file.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        circuit: Option<PathBuf>,
        /// Random circuit drawn from each key instead of a file.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        random: Option<RandomCircuit>,
    },
    Benchmark {
        dimension: usize,
        extent: usize,
        degrees: Vec<usize>,
        #[serde(default = "default_reps")]
        reps: usize,
    },
    VerifyEncoding {
        /// Largest power checked in the projection identity.
        #[serde(default = "default_max_power")]
        max_power: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomCircuit {
    pub qubits: usize,
    pub gates: usize,
    #[serde(default)]
    pub input: String,
}

fn default_reps() -> usize {
    5
}

fn default_max_power() -> usize {
    8
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Rdm { .. } => "rdm",
            Task::Ldos { .. } => "ldos",
            Task::MomentumLdos { .. } => "momentum-ldos",
            Task::Greens { .. } => "greens",
            Task::Conductivity { .. } => "conductivity",
            Task::BqpCheck { .. } => "bqp-check",
            Task::Benchmark { .. } => "benchmark",
            Task::VerifyEncoding { .. } => "verify-encoding",
        }
    }

    /// Whether the output depends on the disorder key.
    pub fn is_keyed(&self) -> bool {
        match self {
            Task::Benchmark { .. } => false,
            Task::BqpCheck { random, .. } => random.is_some(),
            _ => true,
        }
    }
}

pub fn energies(omegas: &Option<Vec<f64>>, grid: &Option<Grid>) -> Result<Vec<f64>> {
    match (omegas, grid) {
        (Some(w), None) => Ok(w.clone()),
        (None, Some(g)) => Ok(g.points()),
        _ => bail!("task.omegas and task.omega_grid: exactly one must be given"),
    }
}

impl ExperimentConfig {
    /// Parses and validates; serde diagnostics carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("field `{path}`: {}", e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg =
            Self::from_json(&text).with_context(|| format!("invalid config {}", path.display()))?;
        if let Task::BqpCheck {
            circuit: Some(c), ..
        } = &mut cfg.task
        {
            if c.is_relative() {
                if let Some(dir) = path.parent() {
                    *c = dir.join(&*c);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        self.model.lattice.validate().context("model.lattice")?;
        self.model
            .disorder
            .validate(&self.model.lattice)
            .context("model.disorder")?;
        match &self.task {
            Task::Ldos {
                omegas, omega_grid, ..
            }
            | Task::MomentumLdos {
                omegas, omega_grid, ..
            }
            | Task::Greens {
                omegas, omega_grid, ..
            } => {
                energies(omegas, omega_grid)?;
            }
            Task::BqpCheck { circuit, random } if circuit.is_some() == random.is_some() => {
                bail!("task.circuit and task.random: exactly one must be given");
            }
            _ => {}
        }
        if let Some(keys) = &self.keys {
            if keys.is_empty() {
                bail!("keys: the list is empty");
            }
        }
        Ok(())
    }

    /// Keys in run order: the explicit list, else the model's own key.
    pub fn resolved_keys(&self) -> Vec<u64> {
        self.keys
            .clone()
            .unwrap_or_else(|| vec![self.model.disorder.key])
    }

    /// SHA-256 of the compact serialization with object keys sorted, so
    /// the hash can be recomputed from the manifest's copy of the config.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_vec(&value).expect("value serializes");
        let digest = Sha256::digest(&canonical);
        format!("sha256:{}", hex(&digest))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses `1,2,5..8` (half-open ranges) into a key list.
pub fn parse_keys(text: &str) -> Result<Vec<u64>> {
    let mut keys = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (
                a.parse().with_context(|| format!("bad key {a:?}"))?,
                b.parse().with_context(|| format!("bad key {b:?}"))?,
            );
            if a >= b {
                bail!("empty key range {part}");
            }
            keys.extend(a..b);
        } else {
            keys.push(part.parse().with_context(|| format!("bad key {part:?}"))?);
        }
    }
    if keys.is_empty() {
        bail!("no keys in {text:?}");
    }
    Ok(keys)
}
