//! Command-line front end: `simulate`, `calibrate`, `verify`, `baseline`.
//!
//! Exit codes: 0 success or all checks pass, 1 a check failed, 2 bad input.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use crate::controller::{baseline_qp_control, ClassK};
use crate::dynamics::JointState;
use crate::scenario::{ScenarioError, ScenarioFile, INVARIANCE_TOL_STAGEWISE, INVARIANCE_TOL_ZOH};
use crate::simulate::{simulate, ControlMode, SimError, Trajectory};
use crate::verify::{check_structural, render_reports, verify_trajectory, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "passive-safety", version, about = "Energy-based barrier safety controller: simulate, calibrate, verify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario, write its trajectory CSV and print a summary.
    Simulate(RunArgs),
    /// Report the admissible barrier gain for a scenario; exit 1 if inadmissible.
    Calibrate {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the sampling seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a trajectory CSV against the safety, passivity and return guarantees.
    Verify(VerifyArgs),
    /// Compare the safety controller with the single-constraint QP filter.
    Baseline {
        #[command(flatten)]
        run: RunArgs,
        /// Gain of the linear class-K function used by the QP.
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Trajectory CSV destination; overrides the scenario's output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hold the control constant over each integration step.
    #[arg(long)]
    pub zoh: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Trajectory CSV to check.
    pub trajectory: PathBuf,
    /// Take tolerances and v_bar from this scenario and add the structural sweep.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Use the zero-order-hold invariance tolerance.
    #[arg(long)]
    pub zoh: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol_invariance: Option<f64>,
    #[arg(long)]
    pub tol_velocity: Option<f64>,
    #[arg(long)]
    pub tol_passivity: Option<f64>,
    #[arg(long)]
    pub tol_return: Option<f64>,
    #[arg(long)]
    pub return_window: Option<f64>,
    #[arg(long)]
    pub v_bar: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Check(String),
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Parses `args` and runs the command, writing reports to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_INPUT_ERROR;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args, out),
        Command::Calibrate { scenario, seed } => cmd_calibrate(&scenario, seed, out),
        Command::Verify(args) => cmd_verify(&args, out),
        Command::Baseline { run, alpha } => cmd_baseline(&run, alpha, out),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT_ERROR
        }
        Err(CliError::Check(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_CHECK_FAILED
        }
    }
}

fn load_with_overrides(args: &RunArgs) -> Result<ScenarioFile, CliError> {
    let mut file = ScenarioFile::load(&args.scenario)?;
    if let Some(dt) = args.dt {
        file.dt = dt;
    }
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    file.zoh |= args.zoh;
    Ok(file)
}

/// `--out` as given, else the scenario's output path relative to the scenario file.
fn output_path(args: &RunArgs, file: &ScenarioFile) -> Option<PathBuf> {
    args.out.clone().or_else(|| {
        file.output.csv.as_ref().map(|p| args.scenario.parent().unwrap_or(Path::new(".")).join(p))
    })
}

fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    traj.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::Divergence { .. } => CliError::Check(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

/// Maximal time intervals with `h < 0`.
pub fn negative_h_intervals(traj: &Trajectory) -> Vec<(f64, f64)> {
    let mut intervals = Vec::new();
    let mut open: Option<f64> = None;
    let mut last_t = 0.0;
    for r in &traj.records {
        match (r.h < 0.0, open) {
            (true, None) => open = Some(r.t),
            (false, Some(start)) => {
                intervals.push((start, last_t));
                open = None;
            }
            _ => {}
        }
        last_t = r.t;
    }
    if let Some(start) = open {
        intervals.push((start, last_t));
    }
    intervals
}

fn format_intervals(intervals: &[(f64, f64)]) -> String {
    if intervals.is_empty() {
        return "none".into();
    }
    intervals.iter().map(|(a, b)| format!("[{a:.3}, {b:.3}]")).collect::<Vec<_>>().join(" ")
}

fn cmd_simulate(args: &RunArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = load_with_overrides(args)?;
    let scn = file.build()?;
    let traj = simulate(&scn).map_err(sim_error)?;
    let path = output_path(args, &file);
    if let Some(path) = &path {
        write_trajectory(&traj, path)?;
    }
    writeln!(out, "scenario         = {}", scn.name)?;
    writeln!(out, "digest           = {}", scn.digest())?;
    writeln!(out, "{}", traj.summary())?;
    writeln!(out, "h_negative       = {}", format_intervals(&negative_h_intervals(&traj)))?;
    let pushes: Vec<(f64, f64)> = scn.disturbance.windows().iter().map(|w| (w.start, w.end)).collect();
    writeln!(out, "push_windows     = {}", format_intervals(&pushes))?;
    if let Some(path) = path {
        writeln!(out, "csv              = {}", path.display())?;
    }
    Ok(EXIT_OK)
}

fn cmd_calibrate(scenario: &Path, seed: Option<u64>, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut file = ScenarioFile::load(scenario)?;
    if let Some(seed) = seed {
        file.seed = seed;
    }
    let cal = file.calibrate()?;
    writeln!(out, "{cal}")?;
    writeln!(out)?;
    for (k, v) in cal.key_values() {
        writeln!(out, "calibration.{k}={v}")?;
    }
    Ok(if cal.admissible() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = File::open(&args.trajectory)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.trajectory.display())))?;
    let traj = Trajectory::read_csv(BufReader::new(file))
        .map_err(|e| CliError::Input(format!("{}: {e}", args.trajectory.display())))?;

    let scenario = args.scenario.as_deref().map(ScenarioFile::load).transpose()?;
    let zoh = args.zoh || scenario.as_ref().is_some_and(|s| s.zoh);
    let mut cfg = scenario.as_ref().map(ScenarioFile::verify_config).unwrap_or(VerifyConfig {
        invariance_tol: INVARIANCE_TOL_STAGEWISE,
        velocity_tol: 1e-3,
        passivity_tol: 1e-3,
        return_tol: 1e-3,
        return_window: 5.0,
        v_bar: None,
    });
    if zoh && scenario.as_ref().is_none_or(|s| s.tolerances.invariance.is_none()) {
        cfg.invariance_tol = INVARIANCE_TOL_ZOH;
    }
    let overrides = [
        (args.tol_invariance, &mut cfg.invariance_tol),
        (args.tol_velocity, &mut cfg.velocity_tol),
        (args.tol_passivity, &mut cfg.passivity_tol),
        (args.tol_return, &mut cfg.return_tol),
        (args.return_window, &mut cfg.return_window),
    ];
    for (value, slot) in overrides {
        if let Some(v) = value {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Input(format!("tolerances must be finite and >= 0, got {v}")));
            }
            *slot = v;
        }
    }
    if args.v_bar.is_some() {
        cfg.v_bar = args.v_bar;
    }

    let mut reports = verify_trajectory(&traj, &cfg);
    if let Some(file) = &scenario {
        let scn = file.build()?;
        let seed = args.seed.unwrap_or(file.seed);
        reports.extend(check_structural(scn.model.as_ref(), Some(&scn.controller.barrier.constraint), 1000, seed));
    }
    write!(out, "{}", render_reports(&reports))?;
    let failed: Vec<&str> = reports.iter().filter(|r| r.failed()).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        writeln!(out, "result=pass")?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "result=fail ({})", failed.join(", "))?;
        Ok(EXIT_CHECK_FAILED)
    }
}

/// One row of the shrinking-velocity sweep; `u_norm` is `None` when the QP
/// is infeasible.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub speed: f64,
    pub h: f64,
    pub u_norm: Option<f64>,
    pub correction_norm: Option<f64>,
}

/// The QP filter at the scenario's initial configuration as `‖v‖` shrinks
/// along a fixed direction.
pub fn shrinking_velocity_sweep(file: &ScenarioFile, alpha: ClassK, speeds: &[f64]) -> Result<Vec<SweepRow>, ScenarioError> {
    let scn = file.build()?;
    let model = scn.model.as_ref();
    let n = model.dof();
    let q = scn.initial.q.clone();
    // Move orthogonally to k_h∇c + g − u_nom (at rest), so the QP correction
    // is driven by α(h) alone.
    let rest = JointState { q: q.clone(), v: DVector::zeros(n) };
    let u_nom = scn.controller.nominal.torque(model, &rest, 0.0);
    let w = scn.controller.barrier.safe_torque(model, &q) - u_nom;
    let mut dir = DVector::from_element(n, 1.0);
    if n > 1 && w.norm() > 0.0 {
        let w = w.normalize();
        let e = DVector::from_fn(n, |i, _| if i == w.iamax() { 0.0 } else { 1.0 });
        dir = &e - &w * w.dot(&e);
    }
    let dir = dir.normalize();
    let mut rows = Vec::with_capacity(speeds.len());
    for &speed in speeds {
        let s = JointState { q: q.clone(), v: &dir * speed };
        let u_nom = scn.controller.nominal.torque(model, &s, 0.0);
        let h = scn.controller.barrier.h(model, &s);
        let u = baseline_qp_control(model, &scn.controller.barrier, &s, &u_nom, alpha).ok();
        rows.push(SweepRow {
            speed,
            h,
            u_norm: u.as_ref().map(|u| u.norm()),
            correction_norm: u.as_ref().map(|u| (u - &u_nom).norm()),
        });
    }
    Ok(rows)
}

fn cmd_baseline(args: &RunArgs, alpha: Option<f64>, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = load_with_overrides(args)?;
    let alpha = match (alpha, file.mode) {
        (Some(gain), _) => ClassK::Linear { gain },
        (None, ControlMode::Baseline { alpha }) => alpha,
        (None, _) => ClassK::default(),
    };
    let mut proposed_file = file.clone();
    proposed_file.mode = ControlMode::Safe;
    let mut baseline_file = file.clone();
    baseline_file.mode = ControlMode::Baseline { alpha };

    let proposed = simulate(&proposed_file.build()?).map_err(sim_error)?;
    let baseline = simulate(&baseline_file.build()?);
    if let (Some(path), Ok(traj)) = (output_path(args, &file), &baseline) {
        write_trajectory(traj, &path)?;
    }

    let p = proposed.summary();
    writeln!(out, "scenario = {}", file.name)?;
    writeln!(out, "{:<20} {:>16} {:>16}", "metric", "proposed", "baseline_qp")?;
    let row = |out: &mut dyn Write, name: &str, a: String, b: String| writeln!(out, "{name:<20} {a:>16} {b:>16}");
    match &baseline {
        Ok(b_traj) => {
            let b = b_traj.summary();
            row(out, "min_h", format!("{:.6e}", p.min_h), format!("{:.6e}", b.min_h))?;
            row(out, "min_c", format!("{:.6e}", p.min_c), format!("{:.6e}", b.min_c))?;
            row(out, "max_v_sq", format!("{:.6e}", p.max_v_sq), format!("{:.6e}", b.max_v_sq))?;
            row(out, "peak_u_norm", format!("{:.6e}", p.peak_u_norm), format!("{:.6e}", b.peak_u_norm))?;
            row(out, "frac_in_C_eps", format!("{:.6}", p.frac_in_c_eps), format!("{:.6}", b.frac_in_c_eps))?;
            row(out, "infeasible_steps", "0".into(), b.infeasible_count.to_string())?;
            let max_du = proposed
                .records
                .iter()
                .zip(&b_traj.records)
                .map(|(a, b)| (&a.u - &b.u).amax())
                .fold(0.0, f64::max);
            writeln!(out, "max_abs_torque_difference = {max_du:.6e}")?;
            if let Some(&k) = b_traj.infeasible_steps.first() {
                writeln!(out, "first_infeasible_t = {:.6}", b_traj.records[k].t)?;
            }
        }
        Err(e) => {
            row(out, "min_h", format!("{:.6e}", p.min_h), "diverged".into())?;
            row(out, "peak_u_norm", format!("{:.6e}", p.peak_u_norm), "diverged".into())?;
            writeln!(out, "baseline_error = {e}")?;
        }
    }

    writeln!(out)?;
    writeln!(out, "shrinking-v sweep at the initial configuration (alpha = {alpha:?})")?;
    writeln!(out, "{:>10} {:>14} {:>14} {:>14} {:>10}", "|v|", "h", "|u|", "|u-u_nom|", "growth")?;
    let rows = shrinking_velocity_sweep(&file, alpha, &[1e-1, 1e-2, 1e-3, 0.0])?;
    let mut prev: Option<f64> = None;
    for row in rows {
        let cell = |x: Option<f64>| x.map_or("infeasible".to_string(), |x| format!("{x:.6e}"));
        let growth = match (row.correction_norm, prev) {
            (Some(c), Some(p)) if p > 0.0 => format!("{:.2}", c / p),
            _ => "-".into(),
        };
        writeln!(
            out,
            "{:>10.1e} {:>14.6e} {:>14} {:>14} {growth:>10}",
            row.speed,
            row.h,
            cell(row.u_norm),
            cell(row.correction_norm)
        )?;
        prev = row.correction_norm;
    }
    Ok(EXIT_OK)
}
