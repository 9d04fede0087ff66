use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const ALL_CHECKS: &str =
    r#""dilation", "varexp", "atoms", "lemma31", "lemma32", "theorem31", "theorem41", "hardy-littlewood", "maximal""#;

fn aniso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aniso")).args(args).env("ANISO_THREADS", "2").output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn isotropic(checks: &str, extra: &str) -> String {
    format!(
        r#"{{"dimension": 2, "matrix": [2, 0, 0, 2], "exponent": {{"family": "constant", "p0": 1.0}},
            {extra} "checks": [{checks}], "output_dir": "out"}}"#
    )
}

fn full_config() -> String {
    format!(
        r#"{{"dimension": 2, "matrix": [2, 0, 0, 2],
            "exponent": {{"family": "constant", "p0": 0.5}},
            "atom": {{"k0": 0, "r": 2, "s": 3, "seed": 3}},
            "grid": {{"resolution": 64}},
            "scan": {{"directions": 8, "annulus_points": 1024}},
            "checks": [{ALL_CHECKS}], "output_dir": "out"}}"#
    )
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn isotropic_dilation_run_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &isotropic(r#""dilation""#, ""));
    let o = aniso(&["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = tmp.path().join("out");
    for f in ["report.csv", "summary.json", "pins.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let header = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(header.starts_with("check,params,point,measured,bound,ratio,pass\n"));
}

#[test]
fn non_expansive_matrix_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let body = isotropic(r#""dilation""#, "").replace("[2, 0, 0, 2]", "[2, 0, 0, 0.5]");
    let cfg = write_config(tmp.path(), &body);
    let o = aniso(&["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("NotExpansive"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn malformed_config_and_missing_summary_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "{\"dimension\": 2,");
    assert_eq!(aniso(&["verify", "--config", &cfg]).status.code(), Some(2));
    let o = aniso(&["report", "--dir", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("summary.json"));
}

#[test]
fn full_config_runs_every_check_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &full_config());
    let o = aniso(&["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    let out = tmp.path().join("out");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let names: Vec<&str> = summary.as_array().unwrap().iter().map(|s| s["check"].as_str().unwrap()).collect();
    assert_eq!(
        names,
        ["dilation", "varexp", "atoms", "lemma31", "lemma32", "theorem31", "theorem41", "hardy-littlewood", "maximal"]
    );
    let first_csv = fs::read(out.join("report.csv")).unwrap();
    let pins = fs::read(out.join("pins.json")).unwrap();

    // Report: all pass, idempotent.
    let dir = out.to_str().unwrap();
    let r1 = aniso(&["report", "--dir", dir]);
    let r2 = aniso(&["report", "--dir", dir]);
    assert_eq!(r1.status.code(), Some(0));
    assert_eq!(r1.stdout, r2.stdout);
    let table = stdout(&r1);
    assert_eq!(table.lines().count(), 10);
    assert!(table.lines().skip(1).all(|l| l.trim_end().ends_with("pass")), "{table}");

    // A second run reproduces report.csv and keeps the pins.
    let o = aniso(&["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read(out.join("report.csv")).unwrap(), first_csv);
    assert_eq!(fs::read(out.join("pins.json")).unwrap(), pins);

    // Tamper with one pin: only that row fails.
    let mut pinned: serde_json::Map<String, serde_json::Value> = serde_json::from_slice(&pins).unwrap();
    let lemma = pinned["lemma32"].as_f64().unwrap();
    pinned.insert("lemma32".into(), (lemma / 2.0).into());
    fs::write(out.join("pins.json"), serde_json::to_string(&pinned).unwrap()).unwrap();
    let r = aniso(&["report", "--dir", dir]);
    assert_eq!(r.status.code(), Some(1));
    for line in stdout(&r).lines().skip(1) {
        let expected = if line.starts_with("lemma32") { "fail" } else { "pass" };
        assert!(line.trim_end().ends_with(expected), "{line}");
    }
    let o = aniso(&["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lemma32"));
}

#[test]
fn bad_thread_count_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &isotropic(r#""dilation""#, ""));
    let o = Command::new(env!("CARGO_BIN_EXE_aniso"))
        .args(["verify", "--config", &cfg])
        .env("ANISO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
