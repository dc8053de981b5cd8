use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const C: f64 = std::f64::consts::PI * std::f64::consts::PI / 4.0 + 1.0;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sharpnorm"))
        .args(args)
        .env_remove("SHARPNORM_THREADS")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (Value, i32) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = run(&all);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout))
    });
    (v, out.status.code().unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

fn check_names(v: &Value) -> Vec<(String, bool)> {
    v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["name"].as_str().unwrap().to_owned(), c["passed"].as_bool().unwrap()))
        .collect()
}

#[test]
fn constants_default_passes() {
    let (v, code) = json(&["constants"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["passed"], true);
    assert!((v["summary"]["sharp_constant"].as_f64().unwrap() - C).abs() < 1e-15);
    assert_eq!(v["summary"]["g1_mellin"].as_f64().unwrap(), 2.0);
    for row in v["rows"].as_array().unwrap() {
        assert!(row["delta"].as_f64().unwrap() < 1e-8, "{row}");
    }
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert!(v["timestamp"]["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn constants_critical_charge_follows_alpha() {
    let (v, code) = json(&["constants", "--alpha", "7.2973525693e-3"]);
    assert_eq!(code, 0);
    let zc = v["summary"]["critical_charge"].as_f64().unwrap();
    assert!((zc - 124.16).abs() < 5e-3, "{zc}");
    assert_eq!(v["config"]["alpha"].as_f64().unwrap(), 7.2973525693e-3);

    let (v, _) = json(&["constants", "--alpha", "0.01"]);
    let zc = v["summary"]["critical_charge"].as_f64().unwrap();
    assert!((zc * 0.01 - 2.0 / (std::f64::consts::FRAC_PI_2 + 2.0 / std::f64::consts::PI)).abs() < 1e-14);
}

#[test]
fn unattainable_tolerance_exits_one_with_reason() {
    let (v, code) = json(&["constants", "--rel-tol", "1e-30"]);
    assert_eq!(code, 1);
    assert_eq!(v["passed"], false);
    let rows = v["rows"].as_array().unwrap();
    let failed: Vec<&Value> = rows.iter().filter(|r| r["quadrature"].is_null()).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().any(|r| r["reason"].as_str().unwrap().contains("did not converge")));
    let out = run(&["constants", "--rel-tol", "1e-30"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn schur_sharp_weights_reach_the_constant() {
    let (v, code) = json(&["schur"]);
    assert_eq!(code, 0, "{}", v["checks"]);
    let sup = v["summary"]["sup"].as_f64().unwrap();
    assert!((sup - C).abs() <= 1e-7);
    assert_eq!(v["summary"]["attained"], false);
    let v1 = v["summary"]["v1"].as_f64().unwrap();
    let v2 = v["summary"]["v2"].as_f64().unwrap();
    assert!(0.0 < v1 && v1 < v2 && v2 < std::f64::consts::FRAC_PI_4);
    assert_eq!(v["rows"].as_array().unwrap().len(), 400);
}

#[test]
fn schur_csv_columns() {
    let out = run(&["schur", "--format", "csv", "--grid-points", "50"]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let headers: Vec<String> = reader.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(headers, ["x", "F_closed", "F_quadrature", "delta"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 50);
    for r in &rows {
        let f: f64 = r[2].parse().unwrap();
        assert!(f < C);
    }
}

#[test]
fn schur_unweighted_is_finite_and_weaker() {
    let (v, code) = json(&["schur", "--weights", "unweighted", "--grid-points", "100"]);
    assert_eq!(code, 0);
    let sup = v["summary"]["sup"].as_f64().unwrap();
    assert!(sup.is_finite() && sup > C + 0.1, "{sup}");
    let row = &v["rows"][0];
    assert!(row["F_closed"].is_null());
    assert!(row["reason"].as_str().unwrap().contains("no closed form"));
}

#[test]
fn schur_table_weights() {
    let path = scratch("sharp_weights.csv");
    let mut text = String::from("x,h0,h1\n");
    for i in 0..=240 {
        let x = 10f64.powf(-6.0 + 12.0 * i as f64 / 240.0);
        text.push_str(&format!("{x:e},{:e},{:e}\n", x / (x * x + 1.0), 1.0 / x));
    }
    std::fs::write(&path, text).unwrap();
    let (v, code) = json(&[
        "schur",
        "--weights",
        "table",
        "--weights-table",
        path.to_str().unwrap(),
        "--grid-points",
        "60",
    ]);
    assert_eq!(code, 0, "{}", v["checks"]);
    let sup = v["summary"]["sup"].as_f64().unwrap();
    assert!((C - 1e-6..C + 1e-3).contains(&sup), "{sup}");

    let out = run(&["schur", "--weights", "table"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--weights-table"));
}

#[test]
fn rayleigh_quotients_increase_below_the_norm() {
    let (v, code) = json(&["rayleigh", "--deltas", "10,100,1000"]);
    assert_eq!(code, 0);
    let q: Vec<f64> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["quotient"].as_f64().unwrap())
        .collect();
    assert_eq!(q.len(), 3);
    assert!(q.windows(2).all(|w| w[1] > w[0]));
    assert!(q.iter().all(|&x| x < C));
    assert!(check_names(&v).iter().all(|c| c.1));
}

#[test]
fn rayleigh_homogeneous_kernel_uses_its_own_reference() {
    let (v, code) = json(&["rayleigh", "--kernel", "g1", "--deltas", "10,1000"]);
    assert_eq!(code, 0);
    assert_eq!(v["summary"]["reference_norm"].as_f64().unwrap(), 2.0);
    let out = run(&["rayleigh", "--kernel", "q7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nystrom_sandwich_and_escape() {
    let (v, code) = json(&["nystrom", "--decades", "1,2,3"]);
    assert_eq!(code, 0, "{}", v["checks"]);
    let l: Vec<f64> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["lambda_max"].as_f64().unwrap())
        .collect();
    assert!(l.windows(2).all(|w| w[1] > w[0]));
    assert!(l[2] > 3.2 && l[2] < C - 1e-10);
    let names: Vec<String> = check_names(&v).into_iter().map(|c| c.0).collect();
    assert!(names.contains(&"mass escapes".to_owned()));
    assert!(v["config"].get("rel_tol").is_none());
}

#[test]
fn nystrom_matrix_export() {
    let path = scratch("matrix.csv");
    let out = run(&["nystrom", "--decades", "1", "--matrix-csv", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("i,j,x_i,x_j,entry"));
    let n = (lines.count() as f64).sqrt() as usize;
    assert!(n > 10);
}

#[test]
fn dominance_has_no_violations() {
    let (v, code) = json(&["dominance", "--lmax", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["summary"]["violations"], 0);
    assert_eq!(v["summary"]["pairs_checked"], 4 * 2 * 50 * 49);
    assert!(v["rows"].as_array().unwrap().is_empty());
}

#[test]
fn stability_margins_are_nonnegative() {
    let (v, code) = json(&["stability", "--Z-frac", "1.0", "--trials", "4"]);
    assert_eq!(code, 0);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["margin"].as_f64().unwrap() >= -1e-8));
    assert_eq!(v["config"]["z_frac"][0].as_f64().unwrap(), 1.0);
}

fn strip_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn identical_config_gives_identical_payload() {
    let args = ["stability", "--z-frac", "0.5,1.0", "--trials", "3", "--seed", "11"];
    let (a, _) = json(&args);
    let (b, _) = json(&args);
    assert_eq!(
        serde_json::to_string(&strip_timestamp(a)).unwrap(),
        serde_json::to_string(&strip_timestamp(b)).unwrap()
    );
    let csv_a = run(&["schur", "--format", "csv", "--grid-points", "40"]).stdout;
    let csv_b = run(&["schur", "--format", "csv", "--grid-points", "40"]).stdout;
    assert_eq!(csv_a, csv_b);

    let (c, _) = json(&["stability", "--z-frac", "0.5,1.0", "--trials", "3", "--seed", "12"]);
    let (a, _) = json(&args);
    assert_ne!(a["rows"], c["rows"]);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let path = scratch("run.conf");
    std::fs::write(&path, "# test run\ndeltas = 10,100\nrel_tol = 1e-8   # looser\nformat = json\n").unwrap();
    let out = run(&["rayleigh", "--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["rel_tol"].as_f64().unwrap(), 1e-8);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert!(v["config"].get("config").is_none());

    let out = run(&["rayleigh", "--config", path.to_str().unwrap(), "--deltas", "10,100,1000"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn output_file_and_stderr_summary() {
    let path = scratch("dominance.json");
    let out = run(&["dominance", "--grid", "10", "--format", "json", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("checks passed"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "dominance");
}

#[test]
fn json_never_contains_nan() {
    let out = run(&["constants", "--rel-tol", "1e-30", "--format", "json"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(!text.contains("NaN") && !text.contains("inf,"));
}
