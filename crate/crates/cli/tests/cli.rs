use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use cubiclab::persist::{read_schema, Manifest, RunStatus, MANIFEST_FILE};

fn cubiclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubiclab"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// The last stderr line, parsed as the JSON error record.
fn error_record(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {line}"))
}

fn manifest(dir: &Path) -> Manifest {
    Manifest::load(&dir.join(MANIFEST_FILE)).unwrap()
}

/// Every file in `dir` other than the manifest is listed in it, and vice versa.
fn assert_no_orphans(dir: &Path) {
    let m = manifest(dir);
    let listed: BTreeSet<String> = m.outputs.iter().map(|o| o.path.clone()).collect();
    let on_disk: BTreeSet<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST_FILE)
        .collect();
    assert_eq!(listed, on_disk);
    for o in m.outputs.iter().filter(|o| o.path.ends_with(".csv")) {
        assert_eq!(read_schema(&dir.join(&o.path)).unwrap(), o.schema);
    }
}

#[test]
fn missing_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let res = cubiclab(&["run", "--config", "does-not-exist.toml", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("Usage:"));
    assert_eq!(error_record(&res)["error"], "usage");
    assert!(!out.exists());
}

#[test]
fn odd_grid_is_rejected_with_its_key() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let res = cubiclab(&["run", "--out", out.to_str().unwrap(), "grid.n_points=127"]);
    assert_eq!(res.status.code(), Some(3));
    let err = error_record(&res);
    assert_eq!(err["error"], "config");
    assert_eq!(err["key"], "grid.n_points");
    assert!(!out.exists(), "nothing is written before the config validates");
}

#[test]
fn unknown_keys_and_verbs_are_rejected() {
    let res = cubiclab(&["selftest", "grid.colour=3"]);
    assert_eq!(res.status.code(), Some(3));
    assert_eq!(error_record(&res)["key"], "grid.colour");

    let res = cubiclab(&["simulate"]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(error_record(&res)["error"], "usage");
}

#[test]
fn bad_symbol_reports_symbol_key() {
    let res = cubiclab(&["symbol-inspect", "symbol.spec=separable:oops"]);
    assert_eq!(res.status.code(), Some(3));
    assert_eq!(error_record(&res)["key"], "symbol.spec");
}

#[test]
fn drift_sweep_emits_two_fits() {
    let tmp = tempfile::tempdir().unwrap();
    let res = cubiclab(&[
        "sweep",
        "--experiment",
        "drift",
        "--eps",
        "0.2,0.3,0.45,0.65,0.8",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let fits: Vec<cubiclab::persist::FitRecord> = cubiclab::persist::read_csv(&tmp.path().join("fits.csv")).unwrap();
    assert_eq!(fits.len(), 2);
    assert!((fits[0].slope - 4.0).abs() < 0.7);
    assert!(fits[1].slope > fits[0].slope + 1.5);
    let m = manifest(tmp.path());
    assert_eq!(m.status, RunStatus::Ok);
    assert_eq!(m.command, "sweep drift");
    assert_eq!(m.config["drift"]["eps"].as_array().unwrap().len(), 5);
    assert_no_orphans(tmp.path());
}

#[test]
fn flag_overrides_win_over_trailing_ones() {
    let tmp = tempfile::tempdir().unwrap();
    let res = cubiclab(&[
        "soliton",
        "--lambda",
        "1.0",
        "--T",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
        "soliton.lambdas=[0.25]",
        "soliton.n_points=512",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows: Vec<cubiclab::persist::SolitonRecord> =
        cubiclab::persist::read_csv(&tmp.path().join("soliton.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].lambda, 1.0);
    assert_eq!(rows[0].n_points, 512);
    assert!(rows[0].shape_error < 1e-6);
    assert_no_orphans(tmp.path());
}

#[test]
fn failure_after_compute_still_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    // A real constant symbol has no mass drift to fit.
    let res = cubiclab(&[
        "sweep",
        "--experiment",
        "drift",
        "--out",
        tmp.path().to_str().unwrap(),
        "symbol.spec=const:-2",
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(error_record(&res)["error"], "runtime");
    let m = manifest(tmp.path());
    assert_eq!(m.status, RunStatus::Failed);
    assert!(m.error.is_some());
    assert_no_orphans(tmp.path());
}

#[test]
fn oracle_runs_are_byte_identical() {
    let args = |dir: &Path| {
        let dir = dir.to_str().unwrap().to_string();
        cubiclab(&[
            "run",
            "--out",
            &dir,
            "grid.n_points=32",
            "symbol.strategy=\"dense-oracle\"",
            "evolve.t_end=0.2",
            "evolve.cadence=4",
            "run.correction_kmax=8",
        ])
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [a.path(), b.path()] {
        let res = args(d);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        assert_no_orphans(d);
    }
    assert_eq!(manifest(a.path()).notes["strategy"], "dense-oracle");
    let read = |d: &Path| std::fs::read(d.join("series.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn selftest_passes_and_records_oracle_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let res = cubiclab(&["selftest", "--out", tmp.path().to_str().unwrap()]);
    assert!(res.status.success());
    let stdout = String::from_utf8_lossy(&res.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(!lines.is_empty() && lines.iter().all(|l| l.starts_with("PASS ")), "{stdout}");
    assert_eq!(manifest(tmp.path()).oracle_errors.len(), lines.len());
    assert_no_orphans(tmp.path());
}
