use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mcvd::runner::csvio::sha256_hex;
use mcvd::runner::read_manifest;

fn mcvd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcvd"))
        .args(args)
        .env("MCVD_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

#[test]
fn itr_table_has_the_known_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("itr");
    let o = mcvd(&["run", "fig8-itr", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_rows(&out.join("itr.csv"));
    assert_eq!(header, ["half_life", "degradation_rate", "t", "itr"]);
    let row = rows
        .iter()
        .find(|r| r[0] == "inf" && (r[2].parse::<f64>().unwrap() - 0.2).abs() < 1e-12)
        .expect("row at t = 0.2");
    assert!((row[3].parse::<f64>().unwrap() - 0.5222).abs() < 5e-4);
    for r in &rows {
        for v in &r[1..] {
            assert!(v.parse::<f64>().unwrap().is_finite());
        }
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut sums = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = mcvd(&[
            "run",
            "fig1-hitmap",
            "--set",
            "n_tx=2000",
            "--set",
            "horizon=0.05",
            "--seed",
            "17",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m = read_manifest(&out).unwrap();
        assert_eq!(m.experiment, "fig1-hitmap");
        assert_eq!(m.config["seed"], "17");
        assert_eq!(m.config["n_tx"], "2000");
        for rec in &m.outputs {
            let bytes = fs::read(out.join(&rec.file)).unwrap();
            assert_eq!(sha256_hex(&bytes), rec.sha256);
            assert!(!bytes.contains(&b'\r'));
        }
        sums.push(m.outputs);
    }
    assert_eq!(sums[0], sums[1]);
}

#[test]
fn custom_run_writes_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("op.cfg");
    fs::write(
        &cfg,
        "# operating point\nexperiment = custom\nhalf_life = 0.016\nthreshold = 13\n",
    )
    .unwrap();
    let out = dir.path().join("custom");
    let o = mcvd(&[
        "run",
        "custom",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_rows(&out.join("custom.csv"));
    let get = |k: &str| {
        rows.iter()
            .find(|r| r[0] == k)
            .map(|r| r[1].parse::<f64>().unwrap())
            .unwrap()
    };
    assert!(get("ber") < 1e-3);
    assert!((10.0..=20.0).contains(&get("tau_star")));
    assert!(get("pe") >= get("ber"));
    assert!(get("capacity_bits") <= 1.0);
}

#[test]
fn geometry_violation_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcvd(&[
        "run",
        "custom",
        "--set",
        "tx_center_distance=9",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("x").exists());
}

#[test]
fn unknown_key_and_experiment_are_rejected() {
    assert_eq!(mcvd(&["run", "custom", "--set", "nonsense=1"]).status.code(), Some(2));
    assert_eq!(mcvd(&["run", "fig99"]).status.code(), Some(2));
}

#[test]
fn validate_reports_errors_and_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "experiment = fig9-ber\nhalf_life = -1\n").unwrap();
    let o = mcvd(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("error"));

    let coarse = dir.path().join("coarse.cfg");
    fs::write(&coarse, "experiment = fig1-hitmap\nstep_dt = 1e-1\nhorizon = 1\n").unwrap();
    let o = mcvd(&["validate", coarse.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("warning") && text.contains("fig1-hitmap: ok"));
}

#[test]
fn list_names_every_experiment() {
    let o = mcvd(&["list"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["fig1-hitmap", "fig4-pe-vs-tau", "fig11-capacity-distance", "custom"] {
        assert!(text.contains(name));
    }
}
