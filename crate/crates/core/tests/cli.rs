mod common;

use std::process::{Command, Output};

use serde_json::Value;

fn chimix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chimix")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> (i32, Value) {
    let out = chimix(args);
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v)
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn weights_ratio_row() {
    let (code, v) = json(&["weights", "1", "5", "5", "5", "--k", "10"]);
    assert_eq!(code, 0);
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 11);
    let ratio = num(&rows[1]["p"]) / num(&rows[0]["p"]);
    assert!(common::rel_err(ratio, 1.2) < 1e-12);
    assert_eq!(v["tool"], "chimix");
    assert!(v["version"].is_string());
    assert!(v["config"]["command"]["weights"].is_object());
}

#[test]
fn weights_equal_coefficients_single_row() {
    let (code, v) = json(&["weights", "1", "1"]);
    assert_eq!(code, 0);
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(num(&rows[0]["p"]), 1.0);
}

#[test]
fn weights_two_term_table() {
    let (_, v) = json(&["weights", "1", "2", "--k", "50"]);
    let closed = common::two_term_closed_form(0.5, 50);
    let rows = v["result"]["rows"].as_array().unwrap();
    for (row, p) in rows.iter().zip(&closed) {
        assert!(common::rel_err(num(&row["p"]), *p) < 1e-12);
    }
}

#[test]
fn cdf_reductions() {
    let (code, v) = json(&["cdf", "1", "1", "1", "--u", "3"]);
    assert_eq!(code, 0);
    let g3 = chimix::distributions::chisq_cdf(chimix::distributions::DegreesOfFreedom::new(3.0).unwrap(), 3.0).unwrap();
    assert!((num(&v["result"]["points"][0]["cdf"]) - g3).abs() < 1e-10);
    let (_, v) = json(&["cdf", "2", "--u", "4"]);
    let g1 = 2.0 * chimix::distributions::std_normal_cdf(2f64.sqrt()).unwrap() - 1.0;
    assert!((num(&v["result"]["points"][0]["cdf"]) - g1).abs() < 1e-14);
    let (_, v) = json(&["cdf", "1", "2", "3", "--u", "4,8"]);
    let pts = v["result"]["points"].as_array().unwrap();
    assert_eq!(pts.len(), 2);
    assert!((num(&pts[0]["cdf"]) - common::inversion_cdf(&[1.0, 2.0, 3.0], 4.0)).abs() < 1e-6);
    assert!(num(&pts[0]["error_bound"]) <= 1e-12);
}

#[test]
fn pdf_command() {
    let (code, v) = json(&["pdf", "1", "1", "--u", "2"]);
    assert_eq!(code, 0);
    assert!((num(&v["result"]["points"][0]["pdf"]) - (-1.0f64).exp() / 2.0).abs() < 1e-15);
}

#[test]
fn bad_coefficients_exit_two() {
    assert_eq!(chimix(&["weights", "1", "-2"]).status.code(), Some(2));
    assert_eq!(chimix(&["cdf", "1", "0", "--u", "1"]).status.code(), Some(2));
    assert_eq!(chimix(&["weights"]).status.code(), Some(2));
    assert_eq!(chimix(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(chimix(&["weights", "1", "--threads", "0"]).status.code(), Some(2));
}

#[test]
fn verify_density_defect_passes() {
    let (code, v) = json(&["verify", "remark1", "--c2", "0.5"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["passed"], true);
    assert_eq!(v["result"]["reports"][0]["claim"], "remark1");
    assert_eq!(v["result"]["reports"][0]["note"], "no counterexample found on grid");
}

#[test]
fn verify_exit_codes() {
    // For tiny c2 the extrapolated defect limit misses the 1e-6 relative target.
    let (code, v) = json(&["verify", "remark1", "--c2", "1e-5"]);
    assert_eq!(code, 1);
    assert_eq!(v["result"]["passed"], false);
    assert_eq!(v["result"]["reports"][0]["note"], "counterexample found on grid");
    assert_eq!(v["result"]["reports"][0]["witnesses"][0]["family"], "limit");
    assert_eq!(chimix(&["verify", "mu", "--tol=-1e-3"]).status.code(), Some(2));
    assert_eq!(chimix(&["verify", "remark1", "--c2", "0.999"]).status.code(), Some(3));
}

#[test]
fn verify_variance_small_grid() {
    let (code, v) = json(&["verify", "variance", "--nu", "3", "--spreads", "10", "--rho-grid", "log:0.05:50:5"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["reports"][0]["points"].as_array().unwrap().len(), 15);
}

#[test]
fn moments_univariate_matches_mu() {
    let (code, v) = json(&["moments", "--lambda", "1", "--rho", "1"]);
    assert_eq!(code, 0);
    let second = num(&v["result"]["moments"]["second"][0]);
    assert!((second - chimix::verify::mu(1.0).unwrap()).abs() < 1e-10);
}

#[test]
fn moments_with_sampler_z_scores() {
    let (code, v) = json(&["moments", "--lambda", "1,2", "--rho", "2", "--n", "200000", "--seed", "5"]);
    assert_eq!(code, 0);
    for z in v["result"]["z_scores"]["second"].as_array().unwrap() {
        assert!(num(z).abs() < 4.0);
    }
}

#[test]
fn sample_is_byte_identical() {
    let args = ["sample", "--lambda", "1,2,3", "--rho", "4", "--n", "5000", "--seed", "9", "--format", "csv"];
    let a = chimix(&args);
    let b = chimix(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    assert_eq!(chimix(&threaded).stdout, a.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "x1,x2,x3");
    assert_eq!(data.len(), 5001);
}

#[test]
fn sample_tiny_ball_exits_three() {
    let out = chimix(&["sample", "--lambda", "1,1,1,1,1,1", "--rho", "1e-4", "--n", "10", "--probe", "10000"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reconstruct_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let (_, v) = json(&["moments", "--lambda", "1,3", "--rho", "4", "--tol", "1e-13"]);
    let target = v["result"]["moments"]["second"].clone();
    let path = dir.path().join("target.json");
    std::fs::write(&path, serde_json::to_string(&target).unwrap()).unwrap();
    let out_path = dir.path().join("result.json");
    let out = chimix(&[
        "reconstruct",
        "--target-file",
        path.to_str().unwrap(),
        "--rho",
        "4",
        "--tol",
        "1e-10",
        "--max-iter",
        "5000",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let r = &v["result"]["reconstruction"];
    assert_eq!(r["converged"], true);
    for (l, truth) in r["lambda_hat"].as_array().unwrap().iter().zip([1.0, 3.0]) {
        assert!(common::rel_err(num(l), truth) < 1e-6);
    }

    let csv_path = dir.path().join("target.csv");
    std::fs::write(&csv_path, format!("{}\n{}\n", target[0], target[1])).unwrap();
    let (code, _) = json(&["reconstruct", "--target-file", csv_path.to_str().unwrap(), "--rho", "4"]);
    assert_eq!(code, 0);
}

#[test]
fn reconstruct_infeasible_and_budget() {
    assert_eq!(chimix(&["reconstruct", "--target", "1,5", "--rho", "4"]).status.code(), Some(2));
    let (code, v) = json(&["reconstruct", "--target", "0.2,0.9", "--rho", "1", "--max-iter", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["reconstruction"]["converged"], false);
    assert_eq!(v["result"]["reconstruction"]["iterations"], 1);
}

#[test]
fn timing_is_opt_in() {
    let (_, plain) = json(&["weights", "1", "2"]);
    assert!(plain.get("duration_seconds").is_none());
    let (_, timed) = json(&["weights", "1", "2", "--record-timing"]);
    assert!(num(&timed["duration_seconds"]) >= 0.0);
    let out = chimix(&["weights", "1", "2"]);
    assert!(String::from_utf8(out.stderr).unwrap().contains("finished in"));
}

#[test]
fn verify_csv_output() {
    let out = chimix(&["verify", "mu", "--t-grid", "lin:0.5:2:4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# "));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "claim,index,family,t_lo,t_hi,slack");
    assert_eq!(data.len(), 1 + 3 + 4);
}
