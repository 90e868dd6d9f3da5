use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use usd::instances::peres_non_proper_measurement;
use usd::pipeline::{MeasurementFile, CSV_HEADER};

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn usd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_usd")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn solve_prints_the_optimal_success() {
    let p = problem("peres.json");
    let text = usd(&["solve", p.to_str().unwrap(), "--p1", "0.5"]);
    assert_eq!(text.status.code(), Some(0));
    assert!(stdout(&text).contains("success      0.29289321881345"), "{}", stdout(&text));

    let out = usd(&["solve", p.to_str().unwrap(), "--json"]);
    let v = json(&out);
    assert!((v["success"].as_f64().unwrap() - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
    assert_eq!(v["branch"], "fidelity_form");
    assert_eq!(v["optimal"], true);

    let csv = usd(&["solve", p.to_str().unwrap(), "--csv"]);
    let s = stdout(&csv);
    assert_eq!(s.lines().next(), Some(CSV_HEADER));
    assert!(s.lines().nth(1).unwrap().starts_with("0.50000000000000000,0.2928932188134"));
}

#[test]
fn sweep_writes_the_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex1.csv");
    let p = problem("example1.json");
    let r = usd(&[
        "sweep",
        p.to_str().unwrap(),
        "--min",
        "0.01",
        "--max",
        "0.99",
        "--steps",
        "99",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p1,success,class_e1,class_e2,branch,lower_bound,upper_bound");
    assert_eq!(lines.len(), 100);
    assert!(!text.contains('\r'));
    assert!(lines[1].contains("single_detect_gamma2"));
    assert!(lines[99].contains("single_detect_gamma1"));
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 7);
        let (success, lo, hi): (f64, f64, f64) = (f[1].parse().unwrap(), f[5].parse().unwrap(), f[6].parse().unwrap());
        assert!(lo <= success + 1e-12 && success <= hi + 1e-12, "{line}");
    }
    assert!(stdout(&r).contains("class (0,2) -> (1,2)"));
}

#[test]
fn verify_accepts_the_solution_and_rejects_a_worse_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("example2.json");
    let solved = json(&usd(&["solve", p.to_str().unwrap(), "--json"]));
    let m_path = dir.path().join("m.json");
    std::fs::write(&m_path, solved["measurement"].to_string()).unwrap();
    let ok = usd(&["verify", p.to_str().unwrap(), m_path.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    let report = json(&ok);
    assert_eq!(report["optimal"], true);
    assert!(report["certificate_residual"].as_f64().unwrap() < 1e-9);

    // The prior in the file is 0.4; at 0.45 the same measurement is suboptimal.
    let worse = usd(&["verify", p.to_str().unwrap(), m_path.to_str().unwrap(), "--p1", "0.45"]);
    assert_eq!(worse.status.code(), Some(2));
    assert_eq!(json(&worse)["optimal"], false);
}

#[test]
fn verify_rejects_a_non_proper_measurement() {
    let dir = tempfile::tempdir().unwrap();
    let m_path = dir.path().join("m.json");
    std::fs::write(&m_path, MeasurementFile::from_measurement(&peres_non_proper_measurement()).to_json()).unwrap();
    let r = usd(&["verify", problem("peres.json").to_str().unwrap(), m_path.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("not proper"));
}

#[test]
fn reduce_and_oracle_emit_json() {
    let p = problem("example1.json");
    let red = json(&usd(&["reduce", p.to_str().unwrap()]));
    assert_eq!(red["strictly_skew"], true);
    assert_eq!(red["reduced_support_dim"], 4);

    let oracle = usd(&["oracle", p.to_str().unwrap(), "--seed", "5", "--restarts", "2"]);
    assert_eq!(oracle.status.code(), Some(0));
    let solved = json(&usd(&["solve", p.to_str().unwrap(), "--json"]));
    let d = json(&oracle)["success"].as_f64().unwrap() - solved["success"].as_f64().unwrap();
    assert!(d.abs() < 1e-8, "{d}");
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"dim\": 2,\n  \"rho1\": [[[1, 0], [0, 0]],\n  [[0, 0], [0]]]\n}").unwrap();
    let r = usd(&["solve", bad.to_str().unwrap(), "--p1", "0.5"]);
    assert_eq!(r.status.code(), Some(1));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("line 4") && err.contains("rho1[1][1]"), "{err}");

    let p = problem("peres.json");
    assert_eq!(usd(&["solve", p.to_str().unwrap(), "--tol", "nonsense=1"]).status.code(), Some(1));
    assert_eq!(usd(&["solve", p.to_str().unwrap(), "--p1", "1.5"]).status.code(), Some(1));
    assert_eq!(usd(&["solve", "/nonexistent/problem.json"]).status.code(), Some(1));
    let no_prior = dir.path().join("noprior.json");
    let text = std::fs::read_to_string(&p).unwrap().replace("\"p1\": 0.5,\n", "");
    std::fs::write(&no_prior, text).unwrap();
    assert_eq!(usd(&["solve", no_prior.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn tolerance_overrides_are_applied() {
    let p = problem("peres.json");
    let r = usd(&["solve", p.to_str().unwrap(), "--tol", "equality=1e-6", "--tol", "psd_floor=1e-8"]);
    assert_eq!(r.status.code(), Some(0));
}
