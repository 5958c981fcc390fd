use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn twistlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("TWISTLAB_THREADS", "2")
        .output()
        .expect("spawn twistlab")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn column(dir: &Path, file: &str, name: &str) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(dir.join(file)).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].parse().unwrap()).collect()
}

#[test]
fn nabla_matches_closed_form_on_l2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = twistlab(&["nabla", "--space", "lp:2", "--centralizer", "kp", "--n", "2,4,8,16"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let nabla = column(tmp.path(), "nabla.csv", "nabla");
    let closed = column(tmp.path(), "nabla.csv", "closed_form");
    for (k, n) in [2.0f64, 4.0, 8.0, 16.0].into_iter().enumerate() {
        let expected = 0.5 * n.sqrt() * n.ln();
        assert!((closed[k] - expected).abs() < 1e-12 * expected);
        assert!((nabla[k] - expected).abs() < 1e-9 * expected, "n={n}: {}", nabla[k]);
    }
    let rep = report(tmp.path());
    assert_eq!(rep["command"], "nabla");
    assert!(rep["version"].is_string());
    assert_eq!(rep["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(rep["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn decompose_residuals_are_small() {
    let tmp = tempfile::tempdir().unwrap();
    let out = twistlab(&["decompose", "--couple", "l1,linf", "--theta", "0.5"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let values = column(tmp.path(), "decompose.csv", "value_residual");
    let derivs = column(tmp.path(), "decompose.csv", "derivation_residual");
    assert!(!values.is_empty());
    assert!(values.iter().all(|r| *r < 1e-6), "{values:?}");
    assert!(derivs.iter().all(|r| *r < 1e-6), "{derivs:?}");
}

#[test]
fn schreier_big_m_is_n() {
    let tmp = tempfile::tempdir().unwrap();
    let out = twistlab(&["params", "--space", "schreier", "--n", "1..10"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = column(tmp.path(), "params.csv", "M");
    assert_eq!(m.len(), 10);
    for (k, v) in m.iter().enumerate() {
        assert!((v - (k + 1) as f64).abs() < 1e-9, "n={}: {v}", k + 1);
    }
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"space": "lp:1", "n": "2..3", "seed": 4}"#).unwrap();
    let out_dir = tmp.path().join("out");
    let out = twistlab(&["nabla", "--config", cfg.to_str().unwrap(), "--space", "lp:2"], &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&out_dir);
    assert_eq!(rep["settings"]["space"], "lp:2");
    assert_eq!(rep["settings"]["seed"], 4);
    assert_eq!(column(&out_dir, "nabla.csv", "n"), vec![2.0, 3.0]);
}

#[test]
fn invalid_config_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, r#"{"spaec": "lp:2"}"#).unwrap();
    let out = twistlab(&["nabla", "--config", cfg.to_str().unwrap()], &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = twistlab(&["nabla", "--space", "nonsense"], &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["nabla", "--space", "lorentz:2,1", "--n", "4,24", "--samples", "500", "--seed", "7"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(twistlab(&args, &a).status.success());
    assert!(twistlab(&args, &b).status.success());
    let mut ra = report(&a);
    let mut rb = report(&b);
    ra["settings"]["out"] = Value::Null;
    rb["settings"]["out"] = Value::Null;
    assert_eq!(ra["rows"], rb["rows"]);
    assert_eq!(ra, rb);
    assert_eq!(ra["rows"][1]["evaluation"], "monte_carlo");
}

#[test]
fn plot_flag_writes_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let out = twistlab(&["params", "--space", "lp:1.5", "--n", "1..4", "--plot"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(tmp.path().join("params.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn suite_runs_selected_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let out = twistlab(&["suite", "--only", "6"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 1);
}

#[test]
fn psi_brackets_kalton_peck_on_l2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = twistlab(&["psi", "--space", "lp:2", "--n", "8", "--budget", "2", "--max-iters", "200"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(tmp.path());
    assert_eq!(rep["regime"], "two_sided");
    assert_eq!(rep["track"]["track"], "kalton_peck");
    assert_eq!(rep["rows"][0]["bracket_ok"], true);
    assert!(rep["rows"][0]["upper"].as_f64().unwrap() > 0.0);
}

#[test]
fn block_spaces_size_themselves() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["distance", "--space", "blocks:1.5:4,4,4", "--centralizer", "block:1,3,0.5", "--n", "2,3"];
    let out = twistlab(&args, tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let est = column(tmp.path(), "distance.csv", "estimate");
    assert!(est.iter().all(|d| d.abs() < 1e-8), "{est:?}");
    assert_eq!(report(tmp.path())["regime"], "one_sided");
}
