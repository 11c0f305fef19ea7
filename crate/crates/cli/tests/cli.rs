use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qla_disorder::observables::ldos_site;
use qla_disorder::ModelConfig;
use serde_json::Value;
use sha2::{Digest, Sha256};

const MODEL: &str = r#"{
    "lattice": {"extents": [64], "boundary": "periodic"},
    "disorder": {
        "kind": "binary-alloy", "p": 0.3,
        "hopping": [[-1.0, -0.5], [-0.5, -1.5]],
        "onsite": [-0.5, 0.5]
    }
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qla-disorder"))
}

fn config(dir: &Path, name: &str, task: &str, extra: &str) -> PathBuf {
    let path = dir.join(name);
    let text = format!(
        "{{\n  \"schema_version\": 1,\n  \"model\": {MODEL},\n  \"task\": {task}{extra}\n}}\n"
    );
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

const LDOS: &str = r#"{"kind": "ldos", "omega_grid": {"start": -1.0, "stop": 1.0, "count": 3},
    "eta": 0.1, "mu": 0.0, "epsilon": 1e-8, "sites": [0, 9]}"#;

#[test]
fn ldos_over_three_keys_writes_three_csvs_and_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "ldos.json", LDOS, "");
    let out = tmp.path().join("out");
    let o = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--keys",
        "1,2,3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "ldos-key1.csv",
            "ldos-key2.csv",
            "ldos-key3.csv",
            "manifest.json"
        ]
    );

    let m = manifest(&out);
    assert_eq!(m["config"]["keys"], serde_json::json!([1, 2, 3]));
    assert_eq!(m["keyed_hash_id"], qla_disorder::KEYED_HASH_ID);
    assert_eq!(m["library_version"], qla_disorder::VERSION);
    let canonical = serde_json::to_vec(&m["config"]).unwrap();
    let hash = format!("sha256:{}", hex(&Sha256::digest(&canonical)));
    assert_eq!(m["config_hash"], hash);
    for entry in m["entries"].as_array().unwrap() {
        assert_eq!(entry["status"], "ok");
        let bytes = fs::read(out.join(entry["file"].as_str().unwrap())).unwrap();
        assert_eq!(entry["sha256"], hex(&Sha256::digest(&bytes)));
    }

    // Values agree with the library evaluated independently of the CLI.
    let model: ModelConfig = ModelConfig::from_json(MODEL).unwrap();
    for key in [1u64, 2, 3] {
        let mut mk = model.clone();
        mk.disorder.key = key;
        let h = mk.build().unwrap().hopping();
        let rows = csv_rows(&out.join(format!("ldos-key{key}.csv")));
        assert_eq!(rows.len(), 6);
        for r in rows {
            let (w, i): (f64, usize) = (r[0].parse().unwrap(), r[1].parse().unwrap());
            let want = ldos_site(&h, w, 0.1, 0.0, 1e-8, i).unwrap();
            assert_eq!(r[2].parse::<f64>().unwrap(), want.value);
        }
    }
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "ldos.json", LDOS, ",\n  \"keys\": [4, 5, 6]");
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "4")] {
        let out = tmp.path().join(name);
        let o = run(&[
            "run",
            cfg.to_str().unwrap(),
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        outputs.push(out);
    }
    for file in [
        "ldos-key4.csv",
        "ldos-key5.csv",
        "ldos-key6.csv",
        "manifest.json",
    ] {
        assert_eq!(
            fs::read(outputs[0].join(file)).unwrap(),
            fs::read(outputs[1].join(file)).unwrap(),
            "{file}"
        );
    }
    assert_ne!(
        fs::read(outputs[0].join("ldos-key4.csv")).unwrap(),
        fs::read(outputs[0].join("ldos-key5.csv")).unwrap()
    );
}

#[test]
fn verify_encoding_on_sixteen_sites() {
    let tmp = tempfile::tempdir().unwrap();
    let model = MODEL.replace("[64]", "[16]");
    let path = tmp.path().join("verify.json");
    fs::write(
        &path,
        format!(
            r#"{{"schema_version": 1, "model": {model}, "task": {{"kind": "verify-encoding", "max_power": 4}}}}"#
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = run(&[
        "run",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let m = manifest(&out);
    let s = &m["entries"][0]["summary"];
    assert!(s["block_deviation"].as_f64().unwrap() <= 1e-10);
    assert!(s["unitarity_defect"].as_f64().unwrap() <= 1e-10);
    assert!(s["projection_deviation"].as_f64().unwrap() <= 1e-10);
    let rows = csv_rows(&out.join("verify-encoding-key0.csv"));
    assert_eq!(rows.len(), 2 + 5);
    assert!(rows.iter().all(|r| r[4] == "true"));
}

#[test]
fn verify_without_config_checks_builtin_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify",
        "--max-power",
        "2",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.matches(": ok ->").count(), 3, "{stdout}");
}

#[test]
fn unknown_field_is_rejected_with_its_location() {
    let tmp = tempfile::tempdir().unwrap();
    let task = LDOS.replace("\"eta\"", "\"etta\"");
    let cfg = config(tmp.path(), "bad.json", &task, "");
    let out = tmp.path().join("out");
    let o = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("unknown field `etta`"), "{err}");
    assert!(
        err.contains("field `task`") && err.contains("at line "),
        "{err}"
    );
    assert!(!out.exists());

    let top = config(tmp.path(), "top.json", LDOS, ",\n  \"seed\": 3");
    let o = run(&["run", top.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("unknown field `seed`"));
}

#[test]
fn invalid_lattice_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("odd.json");
    fs::write(&path, MODEL.replace("[64]", "[48]")).unwrap();
    let text = format!(
        r#"{{"schema_version": 1, "model": {}, "task": {LDOS}}}"#,
        fs::read_to_string(&path).unwrap()
    );
    fs::write(&path, text).unwrap();
    let o = run(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("model.lattice"));
}

#[test]
fn failing_keys_are_reported_without_aborting() {
    let tmp = tempfile::tempdir().unwrap();
    let task = r#"{"kind": "bqp-check", "random": {"qubits": 2, "gates": 3}}"#;
    let cfg = config(tmp.path(), "bqp.json", task, "");
    let out = tmp.path().join("out");
    let o = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--keys",
        "0..3",
        "--cap-qubits",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let m = manifest(&out);
    let entries = m["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    for (k, e) in entries.iter().enumerate() {
        assert_eq!(e["key"], k as u64);
        assert_eq!(e["status"], "failed");
        assert!(e["error"].as_str().unwrap().contains("above the cap"));
    }
    assert_eq!(
        String::from_utf8(o.stdout)
            .unwrap()
            .matches("FAILED")
            .count(),
        3
    );

    let o = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--keys",
        "0..3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&out.join("bqp-check-key2.csv"));
    assert!(["yes", "no", "promise-violated"].contains(&rows[0][0].as_str()));
}

#[test]
fn bqp_check_verb_decides_a_circuit_file() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("not.txt");
    fs::write(&path, "qubits 1\nX 0\n").unwrap();
    let o = run(&["bqp-check", path.to_str().unwrap()]);
    assert!(o.status.success());
    let d: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(d["verdict"], "yes");
    assert_eq!(d["output_probability"], 1.0);

    fs::write(&path, "qubits 1\nX 4\n").unwrap();
    let o = run(&["bqp-check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_writes_the_scaling_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "bench",
        "--dimension",
        "1",
        "--extent",
        "64",
        "--degrees",
        "4,8,16",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&tmp.path().join("benchmark.csv"));
    let touched: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(touched, ["9", "17", "33"]);
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
