//! End-to-end contracts of the `witten-lab` binary: outputs, exit codes, error text.

use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_witten-lab"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("run witten-lab");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn spectrum_writes_k_rows_per_degree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, err) = run(&[
        "spectrum",
        "--model",
        "circle",
        "--n",
        "512",
        "--field",
        "cos-theta",
        "--t",
        "0.5",
        "--k",
        "5",
        "--out",
        out,
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("spectrum_p0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("degree,t,index,lambda,t_lambda,residual")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[2], i as f64);
        assert!((row[4] - 0.5 * row[3]).abs() <= 1e-12 * (1.0 + row[3]));
    }
    assert!(rows.windows(2).all(|w| w[0][3] <= w[1][3]));
    let meta = json(&dir.path().join("spectrum.json"));
    assert_eq!(meta["tool"], "witten-lab");
    assert_eq!(meta["config"]["solver"]["k"], 5);
}

#[test]
fn halved_oracle_mode_halves_the_limits() {
    let dir = tempfile::tempdir().unwrap();
    let mut limits = Vec::new();
    for mode in ["standard", "paper"] {
        let out = dir.path().join(mode);
        let (code, err) = run(&[
            "flow",
            "--model",
            "circle",
            "--n",
            "512",
            "--field",
            "cos-theta",
            "--t-grid",
            "geom:1:0.1:4",
            "--k",
            "3",
            "--oracle-mode",
            mode,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        let flow = json(&out.join("flow.json"));
        assert_eq!(flow["oracle_mode"], mode);
        assert_eq!(flow["schedule"].as_array().unwrap().len(), 4);
        let values: Vec<f64> = flow["oracle"]["0"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        limits.push(values);
    }
    assert_eq!(limits[0], vec![0.0, 2.0, 2.0]);
    assert_eq!(limits[1], vec![0.0, 1.0, 1.0]);
}

#[test]
fn missing_field_parameter_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(&[
        "spectrum",
        "--model",
        "circle",
        "--field",
        "tilted",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("eps"), "{err}");
}

#[test]
fn k_at_least_the_dimension_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(&[
        "spectrum",
        "--model",
        "circle",
        "--n",
        "64",
        "--k",
        "64",
        "--t",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("solver.k"), "{err}");
}

#[test]
fn unreadable_mesh_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.off");
    let model = format!("mesh:{}", missing.display());
    let (code, err) = run(&[
        "morse-check",
        "--model",
        &model,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("absent.off"), "{err}");
}

#[test]
fn malformed_mesh_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.off");
    std::fs::write(&path, "OFF\n3 1 0\n0 0 0\n1 0 0\n").unwrap();
    let model = format!("mesh:{}", path.display());
    let (code, _) = run(&[
        "morse-check",
        "--model",
        &model,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn unknown_config_key_is_rejected_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let ini = dir.path().join("run.ini");
    std::fs::write(&ini, "[model]\nkind = circle\n\n[solver]\nwidth = 3\n").unwrap();
    let (code, err) = run(&[
        "spectrum",
        "--config",
        ini.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("solver.width") && err.contains('5'), "{err}");
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let ini = dir.path().join("run.ini");
    std::fs::write(
        &ini,
        "[model]\nkind = circle\nn = 256\n\n[schedule]\nt = 0.5\n\n[solver]\nk = 4\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let (code, err) = run(&[
        "spectrum",
        "--config",
        ini.to_str().unwrap(),
        "--k",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let meta = json(&out.join("spectrum.json"));
    assert_eq!(meta["config"]["model"]["n"], 256);
    assert_eq!(meta["config"]["solver"]["k"], 3);
}

#[test]
fn morse_check_on_the_octahedron_is_tight() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(&[
        "morse-check",
        "--model",
        "octahedron",
        "--field",
        "height",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let report = json(&dir.path().join("morse.json"));
    assert_eq!(report["pass"], true);
    assert_eq!(report["slacks"], serde_json::json!([0.0, 0.0, 0.0]));
}

#[test]
fn foliation_inequalities_hold_on_the_diagonal_slope() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(&[
        "foliation",
        "--slope",
        "1/1",
        "--n-leaf",
        "128",
        "--n-trans",
        "16",
        "--t-grid",
        "geom:1:0.1:4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let report = json(&dir.path().join("foliation.json"));
    assert_eq!(report["pass"], true);
    assert_eq!(report["euler_equality"], true);
    assert!(dir.path().join("trace_p1.dat").exists());
}

#[test]
fn non_coprime_slope_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(&[
        "foliation",
        "--slope",
        "2/2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn overflow_guard_exits_numerically_and_names_the_leaf() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(&[
        "foliation",
        "--slope",
        "1/1",
        "--n-leaf",
        "128",
        "--n-trans",
        "16",
        "--t",
        "0.00001",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    assert!(err.contains("leaf") && err.contains("overflow"), "{err}");
}

#[test]
fn flow_with_every_point_skipped_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(&[
        "flow",
        "--model",
        "circle",
        "--n",
        "64",
        "--t",
        "0.0001",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    assert!(err.contains("skipped"), "{err}");
}
