//! The binary end to end: exit codes, report layout, determinism and CSV.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qcausal::causality::ProbeRow;
use qcausal::cli::emit_csv;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qcausal"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(experiment: &str, config: &Path, out: &Path) -> Output {
    bin()
        .args([experiment, "--config"])
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn strip_wall_time(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time_s");
    v
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn missing_config_exits_1_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let o = run("sample-haar", &missing, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.json"), "{}", stderr(&o));
}

#[test]
fn malformed_config_exits_1_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        "{\n  \"seed\": 1,\n  \"dims\": [2, 2,\n}",
    );
    let o = run("sample-haar", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let cfg = write(
        dir.path(),
        "unknown.json",
        r#"{"seed": 1, "dims": [2, 2], "n_samples": 2, "colour": 3}"#,
    );
    let o = run("sample-haar", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));

    let cfg = write(
        dir.path(),
        "noseed.json",
        r#"{"dims": [2, 2], "n_samples": 2}"#,
    );
    let o = run("sample-haar", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
}

#[test]
fn invalid_values_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "dims.json",
        r#"{"seed": 1, "dims": [1, 2], "n_samples": 2}"#,
    );
    assert_eq!(run("sample-haar", &cfg, dir.path()).status.code(), Some(1));
    let cfg = write(
        dir.path(),
        "geom.json",
        r#"{"seed": 1, "lattice": {"n_sites": 64, "n_steps": 10}, "region": [{"t": 9, "x": 3}]}"#,
    );
    let o = run("lattice-sorkin", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("K_out"), "{}", stderr(&o));
    let o = bin()
        .args(["no-such-experiment", "--config", "x.json"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin().arg("sample-haar").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn assertion_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // the product arm with a strict tolerance still passes ...
    let cfg = write(
        dir.path(),
        "local.json",
        r#"{"seed": 3, "dims": [2, 2], "n_samples": 20, "arm": "local"}"#,
    );
    assert_eq!(run("sample-haar", &cfg, dir.path()).status.code(), Some(0));
    // ... but asking for product verdicts with a tolerance no Haar sample meets fails
    let cfg = write(
        dir.path(),
        "strict.json",
        r#"{"seed": 3, "dims": [2, 2], "n_samples": 20, "arm": "local", "tol": 1e-30}"#,
    );
    let o = run("sample-haar", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let report = read_json(&dir.path().join("sample-haar.json"));
    assert_eq!(report["passed"], Value::Bool(false));
    assert_eq!(report["assertions"][0]["name"], "all_product");
    // perturbation spread demanded tighter than rounding allows
    let cfg = write(
        dir.path(),
        "tight.json",
        r#"{"seed": 0, "dims": [2, 2], "rel_tol": -1.0}"#,
    );
    assert_eq!(run("perturb-ball", &cfg, dir.path()).status.code(), Some(2));
}

#[test]
fn every_experiment_runs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        (
            "check-causal",
            r#"{"seed": 11, "dims": [2, 2], "channel": {"name": "cnot"}, "n_scenarios": 4}"#,
        ),
        (
            "sample-haar",
            r#"{"seed": 11, "dims": [2, 2], "n_samples": 50}"#,
        ),
        (
            "nearest-product",
            r#"{"seed": 11, "dims": [2, 3], "n_samples": 5}"#,
        ),
        ("perturb-ball", r#"{"seed": 11, "dims": [2, 2]}"#),
        (
            "lattice-sorkin",
            r#"{"seed": 11, "lattice": {"n_sites": 64, "n_steps": 32},
                "region": [{"t": 16, "x": 26}, {"t": 16, "x": 30}, {"t": 16, "x": 34}]}"#,
        ),
    ];
    for (name, text) in configs {
        let cfg = write(dir.path(), &format!("{name}.cfg.json"), text);
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        let oa = run(name, &cfg, &a);
        let ob = run(name, &cfg, &b);
        assert_eq!(oa.status.code(), Some(0), "{name}: {}", stderr(&oa));
        assert_eq!(ob.status.code(), Some(0));
        let ra = read_json(&a.join(format!("{name}.json")));
        let rb = read_json(&b.join(format!("{name}.json")));
        assert_eq!(ra["schema_version"], 1);
        assert_eq!(ra["experiment"], name);
        assert_eq!(ra["config"]["seed"], 11);
        assert!(ra["wall_time_s"].as_f64().unwrap() >= 0.0);
        assert_eq!(strip_wall_time(ra), strip_wall_time(rb), "{name}");
        let ca = a.join(format!("{name}.csv"));
        if ca.exists() {
            let cb = b.join(format!("{name}.csv"));
            assert_eq!(std::fs::read(&ca).unwrap(), std::fs::read(&cb).unwrap());
        }
    }
}

#[test]
fn lattice_report_carries_identity_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "l.json",
        r#"{"experiment": "lattice-sorkin", "seed": 0, "lattice": {"n_sites": 64, "n_steps": 32},
            "region": [{"t": 16, "x": 26}, {"t": 16, "x": 30}, {"t": 16, "x": 34}], "lambdas": [0.0, 1.0]}"#,
    );
    assert_eq!(
        run("lattice-sorkin", &cfg, dir.path()).status.code(),
        Some(0)
    );
    let r = read_json(&dir.path().join("lattice-sorkin.json"));
    let res = &r["results"];
    let dfg = res["delta_fg"].as_f64().unwrap();
    let dfh = res["delta_fh"].as_f64().unwrap();
    let d = res["derivative"].as_f64().unwrap();
    assert!(dfg != 0.0 && dfh != 0.0);
    assert!((d + 2.0 * dfg * dfh).abs() < 1e-12);
    assert_eq!(res["identity_holds"], Value::Bool(true));
    let csv = std::fs::read_to_string(dir.path().join("lattice-sorkin.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "lambda,scalar,coeff_f,coeff_g");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn check_causal_reads_channel_files() {
    let dir = tempfile::tempdir().unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // Hadamard on site 0 as a single Kraus operator
    let chan = format!(
        r#"{{"dims": [2, 2], "kraus": [[[{h},0],[0,0],[{h},0],[0,0], [0,0],[{h},0],[0,0],[{h},0],
             [{h},0],[0,0],[-{h},0],[0,0], [0,0],[{h},0],[0,0],[-{h},0]]]}}"#
    );
    let cf = write(dir.path(), "had.json", &chan);
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(
            r#"{{"seed": 2, "channel_file": {:?}, "n_scenarios": 3}}"#,
            cf.display().to_string()
        ),
    );
    let o = run("check-causal", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read_json(&dir.path().join("check-causal.json"));
    assert_eq!(r["results"]["causal_unitary"], Value::Bool(true));
    assert_eq!(r["results"]["causal_by_defect"], Value::Bool(true));

    let cfg = write(
        dir.path(),
        "gone.json",
        r#"{"seed": 2, "channel_file": "/definitely/missing.json"}"#,
    );
    let o = run("check-causal", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/definitely/missing.json"));
}

#[test]
fn haar_csv_has_one_line_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "h.json",
        r#"{"seed": 5, "dims": [2, 2], "n_samples": 1000}"#,
    );
    assert_eq!(run("sample-haar", &cfg, dir.path()).status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("sample-haar.csv")).unwrap();
    assert_eq!(text.lines().count(), 1001);
    assert_eq!(
        text.lines().next().unwrap(),
        "sample_id,second_schmidt,product_distance,seed"
    );
}

#[test]
fn csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let rows: Vec<ProbeRow> = (0..200)
        .map(|k| {
            let x = (k as f64 + 0.1).sqrt() * std::f64::consts::PI;
            ProbeRow {
                epsilon: 10f64.powi(-(k % 17)) / 3.0,
                defect: x.exp() * 1e-300,
                choi_distance: -x / 7.0,
            }
        })
        .collect();
    emit_csv(&rows, &path).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let back: Vec<ProbeRow> = reader.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(back, rows);
    // the printed digits alone recover each value
    for line in std::fs::read_to_string(&path).unwrap().lines().skip(1) {
        for field in line.split(',') {
            let v: f64 = field.parse().unwrap();
            assert_eq!(format!("{:.16e}", v).parse::<f64>().unwrap(), v);
        }
    }
}
