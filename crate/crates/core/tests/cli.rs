use std::process::Command;

use replica_energy::cli::run;

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("replica-energy").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn value<'a>(stdout: &'a str, key: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {stdout}"))
}

#[test]
fn bounds_command() {
    let (code, out, _) = run_cli(&[
        "bounds", "--dem", "500", "--fail", "0.01", "--rel", "1e-6", "--machines", "100", "--alpha", "2",
    ]);
    assert_eq!(code, 0);
    assert!(value(&out, "MinEnergy").starts_with("2550.4"));
    assert!(value(&out, "MaxEnergy").starts_with("4727.8"));
    assert_eq!(value(&out, "MinRep"), "504.69");
    assert_eq!(value(&out, "EnergyRatio"), "1.85377");
    for key in ["MaxRep", "DispersionBound", "RepRatio"] {
        value(&out, key);
    }
}

#[test]
fn bounds_without_chernoff_margin_is_infeasible() {
    let (code, out, err) = run_cli(&[
        "bounds", "--dem", "20", "--fail", "0.1", "--rel", "4.5e-6", "--machines", "7", "--alpha", "2",
    ]);
    assert_eq!(code, 2);
    assert!(out.contains("MinRep="));
    assert!(err.contains("at least 8 machines"), "{err}");
}

#[test]
fn plan_command() {
    let (code, out, _) = run_cli(&[
        "plan", "--policy", "best-homo", "--dem", "20", "--fail", "0.1", "--rel", "4.5e-6", "--machines", "10",
        "--alpha", "2",
    ]);
    assert_eq!(code, 0);
    assert_eq!(value(&out, "loads"), "10×7");
    assert_eq!(value(&out, "failure_prob"), "3.736e-07");
    assert_eq!(value(&out, "energy_dynamic"), "490");
    assert_eq!(value(&out, "k"), "10");
}

#[test]
fn plan_step_and_shutdown() {
    let (code, out, _) = run_cli(&[
        "plan", "--policy", "best-step", "--dem", "20", "--fail", "0.1", "--rel", "4.5e-6", "--machines", "10",
        "--alpha", "2",
    ]);
    assert_eq!(code, 0);
    assert_eq!(value(&out, "loads"), "6×7 4×6");
    assert_eq!(value(&out, "energy_total"), "438");

    let (code, out, _) = run_cli(&[
        "plan", "--policy", "best-step", "--dem", "500", "--fail", "0.01", "--rel", "1e-6", "--machines", "600",
        "--alpha", "2", "--estat", "50", "--shutdown",
    ]);
    assert_eq!(code, 0);
    let k: usize = value(&out, "k").parse().unwrap();
    assert!(k > 1 && k < 600, "{out}");
}

#[test]
fn plan_infeasible_exit_status() {
    let (code, _, err) = run_cli(&[
        "plan", "--policy", "best-homo", "--dem", "20", "--fail", "0.1", "--rel", "1e-6", "--machines", "2",
        "--alpha", "2",
    ]);
    assert_eq!(code, 2);
    assert_eq!(err.lines().count(), 1);

    let (code, _, err) = run_cli(&[
        "plan", "--policy", "theo-homo", "--dem", "20", "--fail", "0.1", "--rel", "4.5e-6", "--machines", "7",
        "--alpha", "2",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("Chernoff"));
}

#[test]
fn usage_errors() {
    assert_eq!(run_cli(&["plan", "--bogus"]).0, 1);
    assert_eq!(run_cli(&["frobnicate"]).0, 1);
    assert_eq!(run_cli(&[]).0, 1);
    let (code, _, _) = run_cli(&[
        "plan", "--policy", "best-homo", "--dem", "2.5", "--fail", "0.1", "--rel", "1e-3", "--machines", "10",
        "--alpha", "2",
    ]);
    assert_eq!(code, 1, "fractional demand is rejected");
    let (code, _, _) = run_cli(&[
        "plan", "--policy", "best-homo", "--dem", "2", "--fail", "1.5", "--rel", "1e-3", "--machines", "10",
        "--alpha", "2",
    ]);
    assert_eq!(code, 1);
    assert_eq!(run_cli(&["--help"]).0, 0);
}

#[test]
fn evaluate_command() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ex.txt");
    std::fs::write(&path, "5\n5\n5\n5").unwrap();
    let path = path.to_str().unwrap();

    let (code, out, _) = run_cli(&["evaluate", "--alloc", path, "--fail", "0.5", "--dem", "10", "--method", "dp"]);
    assert_eq!(code, 0);
    assert_eq!(value(&out, "value"), "0.6875");
    assert_eq!(value(&out, "method"), "dp");

    let (code, out, _) = run_cli(&["evaluate", "--alloc", path, "--fail", "0.5", "--dem", "10", "--method", "bruteforce"]);
    assert_eq!(code, 0);
    assert_eq!(value(&out, "value"), "0.6875");

    let args = [
        "evaluate", "--alloc", path, "--fail", "0.5", "--dem", "10", "--method", "montecarlo", "--trials", "200000",
        "--seed", "7",
    ];
    let (code, first, _) = run_cli(&args);
    assert_eq!(code, 0);
    let v: f64 = value(&first, "value").parse().unwrap();
    assert!((v - 0.6875).abs() < 0.005);
    assert_eq!(value(&first, "trials"), "200000");
    assert_eq!(value(&first, "seed"), "7");
    assert_eq!(run_cli(&args).1, first);
}

#[test]
fn evaluate_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "# header\n4\nfour\n").unwrap();
    let (code, _, err) = run_cli(&["evaluate", "--alloc", bad.to_str().unwrap(), "--fail", "0.1", "--dem", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("line 3"), "{err}");

    let big = dir.path().join("big.txt");
    std::fs::write(&big, "1\n".repeat(30)).unwrap();
    let (code, _, err) = run_cli(&[
        "evaluate", "--alloc", big.to_str().unwrap(), "--fail", "0.1", "--dem", "1", "--method", "bruteforce",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("limit 25"));

    let missing = dir.path().join("missing.txt");
    assert_eq!(run_cli(&["evaluate", "--alloc", missing.to_str().unwrap(), "--fail", "0.1", "--dem", "1"]).0, 1);
}

#[test]
fn sweep_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let (code, _, err) = run_cli(&[
            "sweep", "--m-min", "1", "--m-max", "40", "--dem", "500", "--fail", "0.01", "--rel", "1e-6", "--alpha",
            "2", "--estat", "50", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());

    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,lower_bound,theo_homo,best_homo,best_step");
    assert_eq!(lines.len(), 41);
    assert!(!text.contains('\r'));
    // m = 1..3: every machine failing has probability > 1e-6
    assert_eq!(lines[1], "1,,,,");
    assert_eq!(lines[3], "3,,,,");
    // theo-homo needs at least 8 machines, best-homo is available earlier
    let row7: Vec<&str> = lines[7].split(',').collect();
    assert_eq!(row7[0], "7");
    assert!(row7[2].is_empty() && !row7[3].is_empty());
    let row40: Vec<f64> = lines[40].split(',').map(|c| c.parse().unwrap()).collect();
    assert!(row40[1] <= row40[4] && row40[4] <= row40[3] && row40[3] <= row40[2]);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_replica-energy");
    let ok = Command::new(bin)
        .args(["bounds", "--dem", "500", "--fail", "0.01", "--rel", "1e-6", "--machines", "100", "--alpha", "2"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("MinEnergy=2550.4"));

    let bad = Command::new(bin).arg("--nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));

    let infeasible = Command::new(bin)
        .args(["plan", "--policy", "best-step", "--dem", "5", "--fail", "0.5", "--rel", "1e-9", "--machines", "3", "--alpha", "2"])
        .output()
        .unwrap();
    assert_eq!(infeasible.status.code(), Some(2));
}
