//! Per-key execution, output files and the run manifest.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{hex, ExperimentConfig, SCHEMA_VERSION};
use crate::tasks;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    /// Ran to completion but a verification exceeded its tolerance.
    CheckFailed,
    Failed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Entry {
    pub key: Option<u64>,
    pub status: RunStatus,
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub cli_version: String,
    pub library_version: String,
    pub keyed_hash_id: String,
    pub config_hash: String,
    pub task: String,
    pub config: ExperimentConfig,
    pub entries: Vec<Entry>,
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Runs every key in parallel; a failing key is recorded, not fatal.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    let mut resolved = cfg.clone();
    resolved.output_dir = None;
    let keyed = cfg.task.is_keyed();
    resolved.keys = keyed.then(|| cfg.resolved_keys());
    let cap = resolved.cap_qubits.unwrap_or(14);
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let jobs: Vec<Option<u64>> = match &resolved.keys {
        Some(keys) => keys.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let name = resolved.task.name();
    let entries: Vec<Entry> = jobs
        .par_iter()
        .map(|&key| {
            let file = match key {
                Some(k) => format!("{name}-key{k}.csv"),
                None => format!("{name}.csv"),
            };
            let mut model = resolved.model.clone();
            if let Some(k) = key {
                model.disorder.key = k;
            }
            let outcome = catch_unwind(AssertUnwindSafe(|| {
                tasks::run(&resolved.task, &model, key, cap)
            }))
            .unwrap_or_else(|p| Err(anyhow::anyhow!("panicked: {}", panic_message(p))));
            let written = outcome.and_then(|out| {
                let path = dir.join(&file);
                std::fs::write(&path, &out.csv)
                    .with_context(|| format!("writing {}", path.display()))?;
                Ok(out)
            });
            match written {
                Ok(out) => Entry {
                    key,
                    status: if out.passed {
                        RunStatus::Ok
                    } else {
                        RunStatus::CheckFailed
                    },
                    sha256: Some(hex(&Sha256::digest(out.csv.as_bytes()))),
                    file,
                    summary: Some(out.summary),
                    error: None,
                },
                Err(e) => Entry {
                    key,
                    status: RunStatus::Failed,
                    file,
                    sha256: None,
                    summary: None,
                    error: Some(format!("{e:#}")),
                },
            }
        })
        .collect();

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        cli_version: env!("CARGO_PKG_VERSION").into(),
        library_version: qla_disorder::VERSION.into(),
        keyed_hash_id: qla_disorder::KEYED_HASH_ID.into(),
        config_hash: resolved.hash(),
        task: name.into(),
        config: resolved,
        entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
