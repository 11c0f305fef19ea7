mod config;
mod manifest;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qla_disorder::{Boundary, DisorderSpec, GateCircuit, LatticeSpec, ModelConfig};

use config::{parse_keys, ExperimentConfig, Task, SCHEMA_VERSION};
use manifest::{run_experiment, RunStatus};

const DEFAULT_CAP_QUBITS: usize = 14;
const DEFAULT_OUT: &str = "qla-out";

#[derive(Parser)]
#[command(
    name = "qla-disorder",
    version,
    about = "Disordered-lattice observables via simulated block encodings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Disorder keys, e.g. `1,2,10..20`; overrides the config.
    #[arg(long, global = true)]
    keys: Option<String>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest register materialized as an explicit matrix.
    #[arg(long, global = true)]
    cap_qubits: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Check the block encoding of a config's model, or of built-in samples.
    Verify {
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        max_power: usize,
    },
    /// Light-cone scaling of the classical Chebyshev baseline.
    Bench {
        #[arg(long, default_value_t = 2)]
        dimension: usize,
        #[arg(long, default_value_t = 128)]
        extent: usize,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        degrees: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
    /// Decide a gate-list circuit through the clock-Hamiltonian LDOS.
    BqpCheck { circuit: PathBuf },
}

/// Config problems exit with 2, failed keys or checks with 1.
enum Failure {
    Config(anyhow::Error),
    Partial,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Partial) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let keys = cli.keys.as_deref().map(parse_keys).transpose()?;
    let configs = match cli.command {
        Command::Run { config } => vec![ExperimentConfig::load(&config)?],
        Command::Verify { config, max_power } => {
            let task = Task::VerifyEncoding { max_power };
            match config {
                Some(path) => {
                    let mut cfg = ExperimentConfig::load(&path)?;
                    if !matches!(cfg.task, Task::VerifyEncoding { .. }) {
                        cfg.task = task;
                    }
                    vec![cfg]
                }
                None => builtin_samples()
                    .into_iter()
                    .map(|(name, model)| {
                        let mut cfg = experiment(model, task.clone());
                        cfg.output_dir = Some(PathBuf::from(name));
                        cfg
                    })
                    .collect(),
            }
        }
        Command::Bench {
            dimension,
            extent,
            degrees,
            reps,
        } => {
            let model = ModelConfig {
                lattice: LatticeSpec::new(&vec![extent; dimension], Boundary::Periodic),
                disorder: DisorderSpec::clean(1.0, 0.0),
            };
            vec![experiment(
                model,
                Task::Benchmark {
                    dimension,
                    extent,
                    degrees,
                    reps,
                },
            )]
        }
        Command::BqpCheck { circuit } => {
            let text = std::fs::read_to_string(&circuit)
                .with_context(|| format!("reading {}", circuit.display()))?;
            let c = GateCircuit::parse(&text)
                .with_context(|| format!("circuit {}", circuit.display()))?;
            let cap = cli.cap_qubits.unwrap_or(DEFAULT_CAP_QUBITS);
            let d = tasks::bqp_decision(&c, cap)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&d).context("serializing the decision")?
            );
            return Ok(());
        }
    };
    let mut partial = false;
    let many = configs.len() > 1;
    for mut cfg in configs {
        if let Some(k) = &keys {
            cfg.keys = Some(k.clone());
        }
        if let Some(c) = cli.cap_qubits {
            cfg.cap_qubits = Some(c);
        }
        cfg.cap_qubits.get_or_insert(DEFAULT_CAP_QUBITS);
        let sub = cfg.output_dir.take();
        let base = cli
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let dir = match (many, sub) {
            (true, Some(s)) => base.join(s),
            (false, Some(s)) if cli.out.is_none() => s,
            _ => base,
        };
        partial |= report(&run_experiment(&cfg, &dir)?, &dir);
    }
    if partial {
        Err(Failure::Partial)
    } else {
        Ok(())
    }
}

fn experiment(model: ModelConfig, task: Task) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        model,
        task,
        output_dir: None,
        keys: None,
        cap_qubits: None,
    }
}

/// Prints one line per entry; true when any entry failed.
fn report(m: &manifest::Manifest, dir: &Path) -> bool {
    let mut failed = false;
    for entry in &m.entries {
        let key = entry
            .key
            .map(|k| format!("key {k}"))
            .unwrap_or_else(|| "-".into());
        match entry.status {
            RunStatus::Ok => println!(
                "{} {key}: ok -> {}",
                m.task,
                dir.join(&entry.file).display()
            ),
            RunStatus::CheckFailed => {
                failed = true;
                println!(
                    "{} {key}: check failed -> {}",
                    m.task,
                    dir.join(&entry.file).display()
                )
            }
            RunStatus::Failed => {
                failed = true;
                println!(
                    "{} {key}: FAILED: {}",
                    m.task,
                    entry.error.as_deref().unwrap_or("unknown error")
                )
            }
        }
        if let Some(s) = &entry.summary {
            println!("  {s}");
        }
    }
    failed
}

/// Small instances of each disorder family for `verify` without a config.
fn builtin_samples() -> Vec<(&'static str, ModelConfig)> {
    let chain = LatticeSpec::new(&[16], Boundary::Periodic);
    let square = LatticeSpec::new(&[4, 4], Boundary::Periodic);
    let coarse = |mut s: DisorderSpec| {
        s.bits = 4;
        s
    };
    let alloy = DisorderSpec::binary_alloy(
        0.4,
        [[-1.0, -0.5], [-0.5, -1.5]],
        [[0.2, 0.3], [0.3, 0.1]],
        1,
    );
    vec![
        (
            "alloy-chain16",
            ModelConfig {
                lattice: chain,
                disorder: coarse(alloy),
            },
        ),
        (
            "structural-square4x4",
            ModelConfig {
                lattice: square.clone(),
                disorder: coarse(DisorderSpec::structural(-1.0, 0.5, 0.2, 6, 2)),
            },
        ),
        (
            "magnetic-square4x4",
            ModelConfig {
                lattice: square,
                disorder: coarse(DisorderSpec::magnetic(-1.0, 0.0, 4, 3)),
            },
        ),
    ]
}
