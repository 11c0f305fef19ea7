//! Task runners. Each produces one CSV body and a small JSON summary.

use std::fmt::Write as _;

use anyhow::{bail, ensure, Context, Result};
use qla_disorder::baseline::benchmark_lightcone_scaling;
use qla_disorder::bqp::Decision;
use qla_disorder::encoding::verify_plus_projection;
use qla_disorder::estimation::amplitude_estimate;
use qla_disorder::linalg::{max_abs_diff, C64};
use qla_disorder::observables::{
    kubo_bastin_conductivity, ldos_momentum, ldos_sweep, one_rdm, one_rdm_column,
    retarded_greens_column, KuboOptions, TraceMode,
};
use qla_disorder::{
    assemble_full_encoding, clock_construction, extract_block, keyed_random, ldos_decision,
    DisorderedLattice, EncodingOptions, GateCircuit, ModelConfig, RandomnessMode,
};
use serde_json::{json, Value};

use crate::config::{energies, Qae, Task};

/// Deviation allowed in the encoding checks.
pub const VERIFY_TOLERANCE: f64 = 1e-10;

pub struct Output {
    pub csv: String,
    pub summary: Value,
    /// False when a verification check exceeded its tolerance.
    pub passed: bool,
}

struct Csv(String);

impl Csv {
    fn new(task: &str, key: Option<u64>) -> Self {
        let mut s = format!("# task: {task}\n");
        if let Some(k) = key {
            writeln!(s, "# key: {k}").unwrap();
        }
        Csv(s)
    }

    fn meta(&mut self, name: &str, value: impl std::fmt::Display) {
        writeln!(self.0, "# {name}: {value}").unwrap();
    }

    fn header(&mut self, cols: &[&str]) {
        writeln!(self.0, "{}", cols.join(",")).unwrap();
    }

    fn row(&mut self, fields: &[String]) {
        writeln!(self.0, "{}", fields.join(",")).unwrap();
    }
}

fn e(x: f64) -> String {
    format!("{x:e}")
}

fn build(model: &ModelConfig) -> Result<DisorderedLattice> {
    Ok(model.build()?)
}

fn check_sites(sites: &[usize], n: usize) -> Result<()> {
    if let Some(&bad) = sites.iter().find(|&&i| i >= n) {
        bail!("site {bad} is outside the lattice of {n} sites");
    }
    Ok(())
}

/// Noise key for one estimated element, distinct per element and per model key.
fn element_key(key: u64, element: u64) -> u64 {
    keyed_random(RandomnessMode::KeyedHash, key, element, 64)
}

pub fn run(
    task: &Task,
    model: &ModelConfig,
    key: Option<u64>,
    cap_qubits: usize,
) -> Result<Output> {
    let mut csv = Csv::new(task.name(), key);
    let mut passed = true;
    let summary = match task {
        Task::Rdm {
            beta,
            mu,
            epsilon,
            sites,
            qae,
        } => rdm(&mut csv, model, *beta, *mu, *epsilon, sites, qae)?,
        Task::Ldos {
            omegas,
            omega_grid,
            eta,
            mu,
            epsilon,
            sites,
        } => {
            let lattice = build(model)?;
            let h = lattice.hopping();
            let n = h.dim();
            let sites = sites.clone().unwrap_or_else(|| (0..n).collect());
            check_sites(&sites, n)?;
            let ws = energies(omegas, omega_grid)?;
            csv.meta("alpha", e(h.alpha));
            csv.meta("eta", e(*eta));
            csv.meta("mu", e(*mu));
            csv.header(&["omega", "site", "ldos", "budget"]);
            let rows = ldos_sweep(&h, &ws, &sites, *eta, *mu, *epsilon)?;
            let mut worst = 0.0f64;
            for (w, i, l) in &rows {
                worst = worst.max(l.budget);
                csv.row(&[e(*w), i.to_string(), e(l.value), e(l.budget)]);
            }
            json!({"rows": rows.len(), "max_budget": worst})
        }
        Task::MomentumLdos {
            omegas,
            omega_grid,
            eta,
            mu,
            epsilon,
        } => {
            let lattice = build(model)?;
            let h = lattice.hopping();
            let extents = &model.lattice.extents;
            csv.meta("alpha", e(h.alpha));
            csv.meta("extents", format!("{extents:?}"));
            csv.header(&["omega", "k", "ldos", "budget"]);
            let ws = energies(omegas, omega_grid)?;
            let mut worst = 0.0f64;
            for w in &ws {
                let m = ldos_momentum(&h, extents, *w, *eta, *mu, *epsilon)?;
                worst = worst.max(m.budget);
                for (k, v) in m.value.iter().enumerate() {
                    csv.row(&[e(*w), k.to_string(), e(*v), e(m.budget)]);
                }
            }
            json!({"rows": ws.len() * h.dim(), "max_budget": worst})
        }
        Task::Greens {
            omegas,
            omega_grid,
            eta,
            mu,
            epsilon,
            sites,
        } => {
            let lattice = build(model)?;
            let h = lattice.hopping();
            let n = h.dim();
            check_sites(sites, n)?;
            csv.meta("alpha", e(h.alpha));
            csv.meta("scaling", "values are eta * G");
            csv.header(&["omega", "i", "j", "re", "im", "budget"]);
            let ws = energies(omegas, omega_grid)?;
            let mut worst = 0.0f64;
            for w in &ws {
                for &j in sites {
                    let col = retarded_greens_column(&h, *w, *eta, *mu, *epsilon, j)?;
                    worst = worst.max(col.budget);
                    for (i, g) in col.value.iter().enumerate() {
                        csv.row(&[
                            e(*w),
                            i.to_string(),
                            j.to_string(),
                            e(g.re),
                            e(g.im),
                            e(col.budget),
                        ]);
                    }
                }
            }
            json!({"rows": ws.len() * sites.len() * n, "max_budget": worst})
        }
        Task::Conductivity {
            beta,
            mu,
            eta,
            epsilon,
            axes,
            nodes,
            samples,
        } => {
            let lattice = build(model)?;
            let h = lattice.hopping();
            let va = lattice.velocity(axes[0])?;
            let vb = lattice.velocity(axes[1])?;
            let trace = match samples {
                Some(s) => TraceMode::Hutchinson {
                    samples: *s,
                    key: model.disorder.key,
                },
                None => TraceMode::Exact,
            };
            let opts = KuboOptions {
                beta: *beta,
                mu: *mu,
                eta: *eta,
                eps: *epsilon,
                nodes: *nodes,
                trace,
            };
            let vol = model.lattice.cell_volume();
            let r = kubo_bastin_conductivity(&h, &va, &vb, vol, &opts)?;
            csv.meta("axes", format!("{} {}", axes[0], axes[1]));
            csv.meta("sigma_re", e(r.sigma[0]));
            csv.meta("sigma_im", e(r.sigma[1]));
            csv.meta("budget", e(r.budget));
            csv.meta("window", format!("{} {}", e(r.window[0]), e(r.window[1])));
            csv.meta("greens_degree", r.greens_degree);
            csv.header(&["energy", "weight", "fermi", "re", "im", "polynomial_bound"]);
            for node in &r.node_values {
                csv.row(&[
                    e(node.energy),
                    e(node.weight),
                    e(node.fermi),
                    e(node.value[0]),
                    e(node.value[1]),
                    e(node.polynomial_bound),
                ]);
            }
            json!({
                "sigma": r.sigma,
                "budget": r.budget,
                "polynomial_bound": r.polynomial_bound,
                "quadrature_estimate": r.quadrature_estimate,
                "stochastic_bound": r.stochastic_bound,
                "nodes": r.nodes,
            })
        }
        Task::BqpCheck { circuit, random } => {
            let c = match (circuit, random) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading circuit {}", path.display()))?;
                    GateCircuit::parse(&text)
                        .with_context(|| format!("circuit {}", path.display()))?
                }
                (None, Some(r)) => {
                    let input = parse_bits(&r.input)?;
                    GateCircuit::random(r.qubits, r.gates, input, key.unwrap_or(0))?
                }
                (None, None) => bail!("no circuit given"),
            };
            let d = bqp_decision(&c, cap_qubits)?;
            bqp_csv(&mut csv, &d);
            serde_json::to_value(&d)?
        }
        Task::Benchmark {
            dimension,
            extent,
            degrees,
            reps,
        } => {
            let t = benchmark_lightcone_scaling(*dimension, *extent, degrees, *reps)?;
            csv = Csv(t.to_csv(&[("task".into(), task.name().into())]));
            json!({"exponent": t.exponent, "degrees": t.rows.len(), "warnings": t.warnings})
        }
        Task::VerifyEncoding { max_power } => {
            let (summary, ok) = verify_encoding(&mut csv, model, *max_power, cap_qubits)?;
            passed = ok;
            summary
        }
    };
    Ok(Output {
        csv: csv.0,
        summary,
        passed,
    })
}

fn rdm(
    csv: &mut Csv,
    model: &ModelConfig,
    beta: f64,
    mu: f64,
    eps: f64,
    sites: &Option<Vec<usize>>,
    qae: &Option<Qae>,
) -> Result<Value> {
    let lattice = build(model)?;
    let h = lattice.hopping();
    let n = h.dim();
    let columns: Vec<(usize, Vec<C64>, f64)> = match sites {
        None => {
            let (d, exp) = one_rdm(&h, beta, mu, eps)?;
            (0..n)
                .map(|j| (j, d.column(j).iter().copied().collect(), exp.epsilon_cert))
                .collect()
        }
        Some(s) => {
            check_sites(s, n)?;
            s.iter()
                .map(|&j| {
                    let c = one_rdm_column(&h, beta, mu, eps, j)?;
                    Ok((j, c.value, c.budget))
                })
                .collect::<Result<_>>()?
        }
    };
    csv.meta("alpha", e(h.alpha));
    csv.meta("beta", e(beta));
    csv.meta("mu", e(mu));
    let mut cols = vec!["i", "j", "re", "im", "budget"];
    if qae.is_some() {
        cols.extend(["est_re", "est_im", "est_epsilon", "queries"]);
    }
    csv.header(&cols);
    let key = model.disorder.key;
    let mut worst = 0.0f64;
    for (j, col, budget) in &columns {
        worst = worst.max(*budget);
        for (i, v) in col.iter().enumerate() {
            let mut row = vec![i.to_string(), j.to_string(), e(v.re), e(v.im), e(*budget)];
            if let Some(q) = qae {
                let est = amplitude_estimate(
                    *v,
                    q.epsilon,
                    q.delta,
                    element_key(key, (i * n + j) as u64),
                )?;
                row.extend([
                    e(est.value[0]),
                    e(est.value[1]),
                    e(est.epsilon),
                    est.queries.unwrap_or(0).to_string(),
                ]);
            }
            csv.row(&row);
        }
    }
    Ok(json!({"columns": columns.len(), "max_budget": worst}))
}

fn parse_bits(text: &str) -> Result<Vec<bool>> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => bail!("input bits must be 0 or 1, got {c:?}"),
        })
        .collect()
}

/// Clock construction and decision, refused above the qubit cap.
pub fn bqp_decision(c: &GateCircuit, cap_qubits: usize) -> Result<Decision> {
    // Clock register of ⌈log2(2T+1)⌉ qubits on top of the work register.
    let clock_states = 2 * c.gates.len() + 1;
    let clock_qubits = usize::BITS as usize - (clock_states - 1).leading_zeros() as usize;
    let total = c.qubits + clock_qubits;
    ensure!(
        total <= cap_qubits,
        "clock construction needs {total} qubits, above the cap of {cap_qubits}"
    );
    let k = clock_construction(c)?;
    Ok(ldos_decision(&k, c)?)
}

fn bqp_csv(csv: &mut Csv, d: &Decision) {
    csv.header(&[
        "verdict",
        "index",
        "value",
        "margin",
        "yes_threshold",
        "no_threshold",
        "output_probability",
    ]);
    let verdict = serde_json::to_value(d.verdict).unwrap();
    csv.row(&[
        verdict.as_str().unwrap_or_default().to_string(),
        d.index.to_string(),
        e(d.value),
        e(d.margin),
        e(d.yes_threshold),
        e(d.no_threshold),
        e(d.output_probability),
    ]);
}

/// Block deviation, unitarity and the `|+⟩` projection identity.
fn verify_encoding(
    csv: &mut Csv,
    model: &ModelConfig,
    max_power: usize,
    cap_qubits: usize,
) -> Result<(Value, bool)> {
    let lattice = build(model)?;
    let n = lattice.num_sites();
    let options = EncodingOptions {
        dense_qubits: EncodingOptions::default().dense_qubits.min(cap_qubits),
        ..EncodingOptions::default()
    };
    let be = assemble_full_encoding(&lattice, &options)?;
    let block = extract_block(&be)?;
    let block_dev = max_abs_diff(&block, &lattice.projected_doubled_hopping().to_dense());
    let unitarity = be.unitarity_defect(cap_qubits)?;
    csv.meta("sites", n);
    csv.meta("qubits", be.total_qubits());
    csv.meta("alpha", e(be.alpha));
    csv.header(&["check", "power", "deviation", "tolerance", "pass"]);
    let mut ok = true;
    let mut record = |csv: &mut Csv, name: &str, power: String, dev: f64| {
        let pass = dev <= VERIFY_TOLERANCE;
        ok &= pass;
        csv.row(&[
            name.into(),
            power,
            e(dev),
            e(VERIFY_TOLERANCE),
            pass.to_string(),
        ]);
    };
    record(csv, "block", String::new(), block_dev);
    record(csv, "unitarity", String::new(), unitarity);
    let cap_sites = 1usize << cap_qubits.min(usize::BITS as usize - 2);
    let mut projection = 0.0f64;
    for d in 0..=max_power {
        let dev = verify_plus_projection(&lattice, d, cap_sites)?;
        projection = projection.max(dev);
        record(csv, "projection", d.to_string(), dev);
    }
    let summary = json!({
        "qubits": be.total_qubits(),
        "block_deviation": block_dev,
        "unitarity_defect": unitarity,
        "projection_deviation": projection,
        "tolerance": VERIFY_TOLERANCE,
    });
    Ok((summary, ok))
}
