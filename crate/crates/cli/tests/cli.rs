use std::path::Path;
use std::process::{Command, Output};

use freecalc::experiments::tuple_with_delta_norm;
use freecalc::freepoly::row_delta;
use freecalc::funcalc::CalcParams;
use freecalc::io::{to_json_pretty, Job};
use freecalc::rng::rng_for;
use freecalc::Colligation;
use serde_json::Value;
use tempfile::TempDir;

fn freecalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freecalc")).args(args).env_remove("FREECALC_SEED").output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_job(dir: &Path) -> String {
    let mut rng = rng_for(11, &[]);
    let delta = row_delta(2).unwrap();
    let f = Colligation::random_isometric(1, 1, 1, 2, 2, &mut rng).unwrap();
    let t = tuple_with_delta_norm(&delta, 3, 0.6, &mut rng).unwrap();
    let path = dir.join("job.json");
    std::fs::write(&path, to_json_pretty(&Job { f, delta, t, params: CalcParams::default() }).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn gap_experiment_is_reproducible() {
    let args = ["experiment", "gap", "--param", "eps=0.1", "--seed", "7"];
    let a = freecalc(&args);
    let b = freecalc(&args);
    let serial = freecalc(&[&args[..], &["--jobs", "1"]].concat());
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, serial.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["tool"], "freecalc");
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["report"]["experiment"], "gap");
    assert!(v["report"]["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn validate_points_at_wrong_block() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{
  "k1": 1, "k2": 1, "I": 1, "J": 1, "m": 1,
  "A": {"rows": 1, "cols": 1, "data": [[0, 0]]},
  "B": {"rows": 2, "cols": 1, "data": [[1, 0], [0, 0]]},
  "C": {"rows": 1, "cols": 1, "data": [[1, 0]]},
  "D": {"rows": 1, "cols": 1, "data": [[0, 0]]},
  "isometric_certified": false
}
"#,
    )
    .unwrap();
    let out = freecalc(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("colligation") && err.contains("block B") && err.contains("line 4"), "{err}");
}

#[test]
fn validate_rejects_bad_complex() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, "{\"rows\": 1, \"cols\": 1, \"data\": [[1, 2, 3]]}\n").unwrap();
    let out = freecalc(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn validate_accepts_job() {
    let dir = TempDir::new().unwrap();
    let job = write_job(dir.path());
    let out = freecalc(&["validate", &job]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["report"]["kind"], "job");
}

#[test]
fn calc_reports_certified_value() {
    let dir = TempDir::new().unwrap();
    let job = write_job(dir.path());
    let out_path = dir.path().join("report.json");
    let out = freecalc(&["calc", &job, "--s", "0.9", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["command"], "calc");
    assert_eq!(v["report"]["s"], 0.9);
    assert_eq!(v["report"]["isometric_path"], true);
    assert!(v["report"]["certificates"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn calc_rejects_csv() {
    let dir = TempDir::new().unwrap();
    let job = write_job(dir.path());
    let out = freecalc(&["calc", &job, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("csv"));
}

#[test]
fn unmet_sample_target_exits_with_two() {
    let out = freecalc(&[
        "experiment", "gap", "--param", "min_samples=1000000", "--levels", "1-2", "--trials", "2", "--seed", "3",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let v = stdout_json(&out);
    let check = v["report"]["checks"].as_array().unwrap().iter().find(|c| c["name"] == "admissible_samples").unwrap();
    assert_eq!(check["passed"], false);
}

#[test]
fn experiment_csv_has_summary_columns() {
    let out = freecalc(&["experiment", "gap", "--format", "csv", "--levels", "1,2", "--trials", "4", "--param", "min_samples=1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("level,trials,estimate,witness_id"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn unknown_names_list_alternatives() {
    let out = freecalc(&["experiment", "nosuch"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("commutator, custom, gap, lens, polydisc, rowball"), "{}", stderr(&out));
    let out = freecalc(&["experiment", "gap", "--param", "epsilon=0.1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_freecalc"))
        .args(["experiment", "polydisc", "--param", "instances=2"])
        .env("FREECALC_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["config"]["seed"], 99);
}

#[test]
fn eval_at_defining_matrix() {
    let dir = TempDir::new().unwrap();
    let job: Job = serde_json::from_str(&std::fs::read_to_string(write_job(dir.path())).unwrap()).unwrap();
    let f_path = dir.path().join("f.json");
    let t_path = dir.path().join("t.json");
    std::fs::write(&f_path, to_json_pretty(&job.f).unwrap()).unwrap();
    std::fs::write(&t_path, to_json_pretty(&job.t).unwrap()).unwrap();
    let out = freecalc(&[
        "eval", "--colligation", f_path.to_str().unwrap(), "--tuple", t_path.to_str().unwrap(), "--delta", "row",
        "--delta-param", "d=2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = stdout_json(&out);
    assert_eq!(v["report"]["level"], 3);
    assert_eq!(v["report"]["value"]["rows"], 3);
}
