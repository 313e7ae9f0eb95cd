use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chiral-casimir"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn status(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const REFERENCE: &str = r#"{"molecule": {"omega_x": 0.99e-4, "omega_y": 1e-4, "omega_z": 1.013e-4,
    "curly_c": 0.01, "curly_b": [0, 0, 0.01]}}"#;

#[test]
fn shipped_configs_validate() {
    for name in ["reference.json", "fock_fixed.json", "si_sweep.json"] {
        let o = bin().args(["validate", "--config"]).arg(configs().join(name)).output().unwrap();
        assert_eq!(status(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let echoed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(echoed["quadrature"]["eps_ladder"].is_array());
    }
}

#[test]
fn config_errors_exit_2_with_code() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"molecule": {"omega_x": -1, "omega_y": 1e-4, "omega_z": 1e-4}}"#, "cli.RangeError"),
        (r#"{"molecule": {"omega_x": 1e-4, "omega_y": 1e-4, "omega_z": 1e-4, "omegaz": 1}}"#, "cli.UnknownField"),
        ("{not json", "cli.ParseError"),
    ];
    for (i, (text, code)) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("bad{i}.json"), text);
        let o = bin().args(["compute", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(status(&o), 2);
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(code), "{err}");
    }
    let o = bin().args(["validate", "--config"]).arg(write(dir.path(), "u.json", cases[1].0)).output().unwrap();
    assert!(String::from_utf8_lossy(&o.stderr).contains("`omegaz`"));
}

#[test]
fn non_convergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"molecule": {"omega_x": 0.99e-4, "omega_y": 1e-4, "omega_z": 1.013e-4, "curly_c": 0.01, "curly_b": [0, 0, 0.01]},
            "quadrature": {"max_panels": 2}}"#,
    );
    let o = bin().args(["compute", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(status(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("semiclassical.QuadratureNotConverged"));
}

#[test]
fn b0_sweep_gives_header_plus_five_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", REFERENCE);
    let o = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--param", "b0", "--from", "0", "--to", "2e-5", "--steps", "5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("results.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let values: Vec<f64> = rows.iter().map(|r| r[col("value")].parse().unwrap()).collect();
    for (v, want) in values.iter().zip([0.0, 5e-6, 1e-5, 1.5e-5, 2e-5]) {
        assert!((v - want).abs() <= 1e-20, "{values:?}");
    }
    // every row carries its settings
    for r in &rows {
        assert_eq!(&r[col("n_max")], "10");
        assert_eq!(&r[col("n_steps")], "10000");
        assert!(r[col("eps_ladder")].contains(';'));
        assert_eq!(&r[col("ledger_residual")], "0e0");
    }
    // P is linear in B0 along the sweep
    let pz: Vec<f64> = rows.iter().map(|r| r[col("p_total_z")].parse().unwrap()).collect();
    assert_eq!(pz[0], 0.0);
    assert!((pz[4] / pz[1] - 4.0).abs() < 1e-12);
    let prov: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["rows"].as_array().unwrap().len(), 5);
    assert_eq!(prov["config"]["sweep"]["steps"], 5);
}

#[test]
fn repeated_sweeps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", REFERENCE);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .args(["--param", "curly_c", "--from", "-0.01", "--to", "0.01", "--steps", "9", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(status(&o), 0);
        outputs.push((
            std::fs::read(out.join("results.csv")).unwrap(),
            std::fs::read(out.join("provenance.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn repeated_selftests_are_byte_identical() {
    let run = || bin().args(["selftest", "--filter", "longitudinal"]).output().unwrap();
    let (a, b) = (run(), run());
    assert_eq!(status(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("criterion 4 [longitudinal-average]: PASS"));
}

#[test]
fn selftest_reports_failures_with_exit_1() {
    let o = bin().args(["selftest", "--filter", "kernel"]).output().unwrap();
    assert_eq!(status(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("criterion 3 [kernel-integrals]: FAIL"));
}
