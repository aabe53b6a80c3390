use std::path::Path;

use passive_safety::cli::negative_h_intervals;
use passive_safety::scenario::ScenarioFile;
use passive_safety::simulate::{simulate, Trajectory};
use passive_safety::verify::{check_forward_invariance, verify_trajectory};

fn load(name: &str) -> ScenarioFile {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"));
    ScenarioFile::load(&path).unwrap()
}

fn run(file: &ScenarioFile) -> Trajectory {
    simulate(&file.build().unwrap()).unwrap()
}

fn rel_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

#[test]
fn summaries_are_insensitive_to_halving_dt() {
    for name in ["tracking_violation", "human_push", "benign", "singular_pass"] {
        let coarse = load(name);
        let mut fine = coarse.clone();
        fine.dt = coarse.dt / 2.0;
        let (a, b) = (run(&coarse).summary(), run(&fine).summary());
        assert!(rel_change(a.min_h, b.min_h) < 0.01, "{name}: min_h {} vs {}", a.min_h, b.min_h);
        assert!(rel_change(a.max_v_sq, b.max_v_sq) < 0.01, "{name}: max_v_sq {} vs {}", a.max_v_sq, b.max_v_sq);
    }
}

#[test]
fn zero_order_hold_stays_within_its_tolerance() {
    let mut file = load("tracking_violation");
    file.zoh = true;
    let traj = run(&file);
    let cfg = file.verify_config();
    assert_eq!(cfg.invariance_tol, 5e-3);
    assert!(check_forward_invariance(&traj, cfg.invariance_tol).passed());
}

#[test]
fn push_excursions_start_inside_push_windows() {
    let file = load("human_push");
    let traj = run(&file);
    let intervals = negative_h_intervals(&traj);
    assert_eq!(intervals.len(), file.disturbance.len());
    for ((start, end), w) in intervals.iter().zip(&file.disturbance) {
        assert!(*start >= w.start && *start < w.end, "excursion at {start} outside window {w:?}");
        assert!(*end < w.end + 5.0, "slow recovery from window {w:?}");
    }
    assert!(traj.records.last().unwrap().h >= 0.0);
}

#[test]
fn every_shipped_safe_scenario_verifies() {
    for name in ["tracking_violation", "human_push", "benign", "singular_pass", "point_mass_unit"] {
        let file = load(name);
        let reports = verify_trajectory(&run(&file), &file.verify_config());
        for r in &reports {
            assert!(r.passed(), "{name}: {r}");
        }
    }
}

#[test]
fn push_to_rest_starts_outside_and_returns_under_the_proposed_controller() {
    let mut file = load("push_to_rest");
    file.mode = passive_safety::ControlMode::Safe;
    let traj = run(&file);
    assert!(traj.records[0].h < 0.0);
    assert_eq!(traj.records[0].v.norm(), 0.0);
    assert!(traj.records.last().unwrap().h >= 0.0);
}
