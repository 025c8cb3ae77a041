use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use metaphase_core::gaussian_state::GaussianState;
use metaphase_core::isotopy::{harmonic_path, time_grid};
use metaphase_core::phase_shift::phase_series;

const BIN: &str = env!("CARGO_BIN_EXE_metaphase");

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("METAPHASE_THREADS").output().expect("binary runs")
}

fn write_config(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (headers, rows)
}

const HARMONIC: &str = r#"{
  "schema": 1, "hbar": 1.0,
  "hamiltonian": {"harmonic": {"omega": 1.0}},
  "state": {"coherent": {}},
  "grid": {"t_max": 9.42477796076938, "steps": 200}
}"#;

#[test]
fn phase_columns_and_degenerate_rows() {
    let out = run(&["phase", scenario("harmonic_coherent.json").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (headers, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(headers, ["t", "re_trace", "im_trace", "phase_principal", "phase_unwrapped", "nu_mod4", "det_s_minus_i", "degenerate"]);
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[0][7], "true");
    assert!(rows[0][1].is_empty() && rows[0][5].is_empty());
    assert!(rows[1..].iter().filter(|r| r[7] == "true").count() <= 2);
}

#[test]
fn csv_round_trips_phase_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "h.json", HARMONIC);
    let out = run(&["phase", &cfg]);
    let (_, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    let grid = time_grid(9.42477796076938, 200).unwrap();
    let records = phase_series(&harmonic_path(1.0, &grid).unwrap(), &GaussianState::coherent(1, 1.0).unwrap()).unwrap();
    for (row, rec) in rows.iter().zip(&records) {
        assert_eq!(row[0].parse::<f64>().unwrap(), rec.t);
        assert_eq!(row[6].parse::<f64>().unwrap(), rec.det_s_minus_i);
        match rec.trace {
            Some(tr) => {
                assert_eq!(row[1].parse::<f64>().unwrap(), tr.re);
                assert_eq!(row[2].parse::<f64>().unwrap(), tr.im);
                assert_eq!(row[3].parse::<f64>().unwrap(), rec.phase_principal.unwrap());
                assert_eq!(row[4].parse::<f64>().unwrap(), rec.phase_unwrapped.unwrap());
                assert_eq!(row[5].parse::<u8>().unwrap(), rec.nu.unwrap());
            }
            None => assert!(row[1].is_empty()),
        }
    }
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let path = scenario("driven_squeezed.json");
    let a = run(&["phase", path.to_str().unwrap()]);
    let b = Command::new(BIN).args(["phase", path.to_str().unwrap()]).env("METAPHASE_THREADS", "1").output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn oracle_columns_are_appended() {
    let out = run(&["phase", scenario("harmonic_oracle.json").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (headers, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(&headers[8..], ["oracle_re", "oracle_im", "residual"]);
    let worst = rows.iter().filter(|r| !r[10].is_empty()).map(|r| r[10].parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn oracle_disagreement_exits_with_4() {
    let out = run(&["oracle-check", scenario("harmonic_oracle.json").to_str().unwrap(), "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle disagreement"));
    // the table is still written
    assert!(!out.stdout.is_empty());
}

#[test]
fn inadmissible_state_exits_with_3() {
    for cmd in ["phase", "validate-state"] {
        let out = run(&[cmd, scenario("inadmissible.json").to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(3), "{cmd}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("0.25") && err.contains("hbar/2 = 0.5"), "{err}");
    }
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        HARMONIC.replace("\"hbar\": 1.0", "\"hbar\": 1.0, \"colour\": 3"),
        HARMONIC.replace("\"schema\": 1", "\"schema\": 7"),
        HARMONIC.replace("{\"harmonic\": {\"omega\": 1.0}}", "{\"harmonic\": {\"omega\": 1.0}, \"exponential\": {\"x\": [[0, 1], [-1, 0]]}}"),
        HARMONIC.replace("\"steps\": 200", "\"steps\": 1"),
        HARMONIC.replace("{\"coherent\": {}}", "{\"thermal\": {\"nbar\": [0.1, 0.2]}}"),
        HARMONIC.replace("\"omega\": 1.0}", "\"omega\": 1.0, \"extra\": 2}"),
        "not json".to_string(),
    ];
    for (i, body) in cases.iter().enumerate() {
        let cfg = write_config(&dir, &format!("bad{i}.json"), body);
        let out = run(&["phase", &cfg]);
        assert_eq!(out.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let missing = run(&["phase", "/nonexistent/config.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let threads = Command::new(BIN).args(["table", "--omega", "1", "--k-max", "0"]).env("METAPHASE_THREADS", "zero").output().unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn json_mirror_matches_csv() {
    let path = scenario("harmonic_coherent.json");
    let csv_out = run(&["phase", path.to_str().unwrap()]);
    let json_out = run(&["phase", path.to_str().unwrap(), "--format", "json"]);
    let (_, rows) = parse_csv(&String::from_utf8(csv_out.stdout).unwrap());
    let json: Vec<serde_json::Value> = serde_json::from_slice(&json_out.stdout).unwrap();
    assert_eq!(json.len(), rows.len());
    assert!(json[0]["re_trace"].is_null());
    assert_eq!(json[0]["degenerate"], serde_json::Value::Bool(true));
    for (obj, row) in json.iter().zip(&rows).skip(1) {
        assert_eq!(obj["phase_unwrapped"].as_f64().unwrap(), row[4].parse::<f64>().unwrap());
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("phase.csv");
    let out = run(&["phase", scenario("harmonic_coherent.json").to_str().unwrap(), "--out", target.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(target).unwrap().starts_with("t,re_trace"));
}

#[test]
fn table_rows_and_indices() {
    let out = run(&["table", "--omega", "1", "--k-max", "1"]);
    assert!(out.status.success());
    let (headers, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 4);
    let nu = headers.iter().position(|h| h == "nu").unwrap();
    let nus: Vec<&str> = rows.iter().map(|r| r[nu].as_str()).collect();
    assert_eq!(nus, ["-1", "-1", "-3", "-3"]);
    let agrees = headers.iter().position(|h| h == "agrees").unwrap();
    assert_eq!(rows[0][agrees], "true");
}

#[test]
fn cz_index_routes_agree() {
    let out = run(&["cz-index", scenario("two_mode_thermal.json").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    for r in rows.iter().filter(|r| r[5] == "false") {
        let nu: i64 = r[1].parse().unwrap();
        assert_eq!(nu.rem_euclid(2), r[3].parse::<i64>().unwrap());
        if !r[4].is_empty() {
            assert_eq!(nu.rem_euclid(4), r[4].parse::<i64>().unwrap());
        }
    }
}

#[test]
fn validate_state_reports_both_criteria() {
    let out = run(&["validate-state", scenario("harmonic_coherent.json").to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success());
    let json: Vec<serde_json::Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json[0]["hermitian_ok"], serde_json::Value::Bool(true));
    assert_eq!(json[0]["symplectic_ok"], serde_json::Value::Bool(true));
    assert_eq!(json[0]["pure"], serde_json::Value::Bool(true));
}
