use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_passive-safety")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate_to(name: &str, dir: &Path) -> PathBuf {
    let out = dir.join(format!("{name}.csv"));
    let o = cli(&["simulate", "--scenario", scenario(name).to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    out
}

#[test]
fn simulate_then_verify_passes_for_safe_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["tracking_violation", "human_push", "benign", "singular_pass", "point_mass_unit"] {
        let csv = simulate_to(name, dir.path());
        let o = cli(&["verify", csv.to_str().unwrap(), "--scenario", scenario(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}:\n{}", stdout(&o));
        assert!(stdout(&o).contains("result=pass"));
    }
}

#[test]
fn simulate_summary_reports_key_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    let o = cli(&["simulate", "--scenario", scenario("human_push").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let text = stdout(&o);
    for key in ["min_h", "min_c", "max_v_sq", "frac_in_C_eps", "h_negative", "push_windows"] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
}

#[test]
fn raw_nominal_run_fails_verification_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_to("tracking_violation_nominal", dir.path());
    let o = cli(&["verify", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("check.forward_invariance.verdict=fail"), "{text}");
    assert!(text.contains("result=fail (forward_invariance"), "{text}");
}

#[test]
fn verify_rejects_empty_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = cli(&["verify", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));
    let o = cli(&["verify", dir.path().join("nope.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_scenario_names_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("benign")).unwrap().replacen("\"duration\"", "\"durration\"", 1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text).unwrap();
    let o = cli(&["simulate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("durration"), "{}", stderr(&o));

    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(cli(&["calibrate", "--scenario", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn calibrate_reports_admissibility() {
    let o = cli(&["calibrate", "--scenario", scenario("tracking_violation").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("calibration.admissible=true"));

    let o = cli(&["calibrate", "--scenario", scenario("point_mass_unit").to_str().unwrap()]);
    let kh_max: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("calibration.kh_max="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((kh_max - 0.5).abs() < 1e-12, "{kh_max}");

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("tracking_violation")).unwrap().replace("\"k_h\": 0.25", "\"k_h\": 1.0");
    let hot = dir.path().join("hot.json");
    std::fs::write(&hot, text).unwrap();
    let o = cli(&["calibrate", "--scenario", hot.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("calibration.admissible=false"));
}

#[test]
fn baseline_logs_infeasibility_at_rest_outside() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = cli(&["baseline", "--scenario", scenario("push_to_rest").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("infeasible_steps")).unwrap();
    let counts: Vec<usize> = line.split_whitespace().skip(1).map(|x| x.parse().unwrap()).collect();
    assert_eq!(counts[0], 0);
    assert!(counts[1] >= 1);
    assert!(text.contains("infeasible"));
    assert!(out.exists());
}

#[test]
fn baseline_matches_proposed_inside_c_eps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = cli(&["baseline", "--scenario", scenario("benign").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("max_abs_torque_difference = 0.000000e0"), "{}", stdout(&o));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = cli(&["simulate", "--scenario", scenario("human_push").to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn overrides_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z.csv");
    let o = cli(&[
        "simulate", "--scenario", scenario("benign").to_str().unwrap(), "--out", out.to_str().unwrap(), "--dt", "0.002", "--zoh",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("records          = 5001"), "{}", stdout(&o));
    let o = cli(&["verify", out.to_str().unwrap(), "--zoh"]);
    assert!(stdout(&o).contains("check.forward_invariance.tolerance=5.00000000000000010e-3"), "{}", stdout(&o));
}

#[test]
fn bad_numeric_flag_is_an_input_error() {
    let o = cli(&["simulate", "--scenario", scenario("benign").to_str().unwrap(), "--dt", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&["simulate", "--scenario", scenario("benign").to_str().unwrap(), "--seed", "abc"]);
    assert_eq!(o.status.code(), Some(2));
}
