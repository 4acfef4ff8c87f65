use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_dwellcert");

fn example_system() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/two_mode_example.json")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn norms(csv: &str) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn analyze_verify_convert_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sys = example_system();
    let sys = sys.to_str().unwrap();
    let cert_b = dir.path().join("b.json");
    let cert_a = dir.path().join("a.json");
    let back = dir.path().join("back.json");

    let o = run(&["analyze", "--system", sys, "--tau", "10", "--L", "1", "--out", cert_b.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("status: feasible"));
    assert!(stdout(&o).contains("verdict: PASS"));

    let o = run(&["verify", "--system", sys, "--cert", cert_b.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("verdict: PASS"));

    let o = run(&["convert", "--system", sys, "--cert", cert_b.to_str().unwrap(), "--out", cert_a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = fs::read_to_string(&cert_a).unwrap();
    assert!(text.contains("\"P_seq\""));
    let o = run(&["verify", "--system", sys, "--cert", cert_a.to_str().unwrap()]);
    assert_eq!(code(&o), 0);

    let o = run(&["convert", "--system", sys, "--cert", cert_a.to_str().unwrap(), "--out", back.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = run(&["verify", "--system", sys, "--cert", back.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
}

#[test]
fn tampered_certificate_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let sys = example_system();
    let sys = sys.to_str().unwrap();
    let cert = dir.path().join("b.json");
    assert_eq!(code(&run(&["analyze", "--system", sys, "--tau", "10", "--out", cert.to_str().unwrap()])), 0);

    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    doc["entries"][0]["P"] = serde_json::json!([[-1.0, 0.0], [0.0, -1.0]]);
    fs::write(&cert, serde_json::to_string(&doc).unwrap()).unwrap();
    let o = run(&["verify", "--system", sys, "--cert", cert.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("verdict: FAIL"));
}

#[test]
fn certificate_for_other_system_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let sys = example_system();
    let cert = dir.path().join("b.json");
    assert_eq!(
        code(&run(&["analyze", "--system", sys.to_str().unwrap(), "--tau", "10", "--out", cert.to_str().unwrap()])),
        0
    );
    let other = dir.path().join("other.json");
    fs::write(
        &other,
        r#"{"state_dim": 2, "modes": [[[0.5,0],[0,0.5]],[[0.5,0],[0,0.5]]], "dwell": {"min": 1, "max": 1}}"#,
    )
    .unwrap();
    let o = run(&["verify", "--system", other.to_str().unwrap(), "--cert", cert.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("hash"));
}

#[test]
fn inconclusive_point_reports_no_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("none.json");
    let o = run(&[
        "analyze",
        "--system",
        example_system().to_str().unwrap(),
        "--tau",
        "6",
        "--out",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("status: inconclusive"));
    assert!(stdout(&o).contains("witness: 1:6;2:6"));
    assert!(!cert.exists());
}

#[test]
fn usage_errors_exit_two() {
    let sys = example_system();
    let sys = sys.to_str().unwrap();
    assert_eq!(code(&run(&["sweep", "--system", sys, "--tau-min", "5", "--tau-max", "4"])), 2);
    assert_eq!(code(&run(&["analyze", "--system", sys, "--tau-min", "5", "--tau-max", "4"])), 2);
    assert_eq!(code(&run(&["analyze", "--system", "/nonexistent.json"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(
        code(&run(&["simulate", "--system", sys, "--signal", "1:3,2:10", "--x0", "1,1"])),
        2
    );
}

#[test]
fn sweep_is_deterministic() {
    let sys = example_system();
    let args = [
        "sweep",
        "--system",
        sys.to_str().unwrap(),
        "--tau-min",
        "9",
        "--tau-max",
        "12",
        "--L-max",
        "2",
        "--no-timings",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "tau,L,status,margin,wallclock_ms");
    assert_eq!(lines.len(), 1 + 4 * 2);
    assert!(lines[3].starts_with("10,1,feasible,"));
    assert!(lines[7].starts_with("12,1,inconclusive,"));
    let summary = String::from_utf8_lossy(&a.stderr);
    assert!(summary.starts_with("tau,min_L,lemma_feasible,witness,verdict"));
    assert!(summary.contains("10,1,true,-,GUAS certified (L=1)"));
}

#[test]
fn simulate_periodic_responses() {
    let dir = tempfile::tempdir().unwrap();
    let sys = example_system();
    let sys = sys.to_str().unwrap();

    let o = run(&["simulate", "--system", sys, "--tau", "6", "--horizon", "240", "--x0", "1,1"]);
    assert_eq!(code(&o), 0);
    let n = norms(&stdout(&o));
    assert_eq!(n.len(), 241);
    assert!(n[240] > n[0]);

    let o = run(&["simulate", "--system", sys, "--tau", "10", "--horizon", "400", "--x0", "1,1"]);
    let n = norms(&stdout(&o));
    assert!(n[400] < 1e-3 * n[0]);

    let o = run(&["simulate", "--system", sys, "--tau", "10", "--horizon", "20", "--x0", "0,0"]);
    assert!(norms(&stdout(&o)).iter().all(|&v| v == 0.0));

    let out = dir.path().join("traj.csv");
    let svg = dir.path().join("fig.svg");
    let o = run(&[
        "simulate",
        "--system",
        sys,
        "--tau",
        "6,10",
        "--horizon",
        "120",
        "--x0",
        "1,-1",
        "--out",
        out.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("traj_tau6.csv").exists());
    assert!(dir.path().join("traj_tau10.csv").exists());
    let plot = fs::read_to_string(svg).unwrap();
    assert_eq!(plot.matches("<polyline").count(), 2);
}

#[test]
fn random_signal_uses_seed() {
    let sys = example_system();
    let args = [
        "simulate",
        "--system",
        sys.to_str().unwrap(),
        "--seed",
        "7",
        "--horizon",
        "50",
        "--x0",
        "1,0",
    ];
    let a = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, run(&args).stdout);
    assert!(stdout(&a).starts_with("k,mode,x1,x2,norm\n0,"));
}
