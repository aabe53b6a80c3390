//! Executable checks of the safety, passivity and robustness guarantees.
//!
//! Trajectory checks read nothing but the records (and so work identically
//! on a trajectory loaded from CSV); every tolerance is an explicit argument.
//! A report's `margin` is signed slack: positive is good, and a check fails
//! exactly when `margin < −tolerance`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::EllipsoidSpec;
use crate::kinematics::Robot;
use crate::simulate::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The hypothesis of the guarantee does not hold for this input.
    PreconditionUnmet(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Time(f64),
    Sample(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub verdict: Verdict,
    pub margin: f64,
    pub location: Option<Location>,
    pub tolerance: f64,
    pub note: String,
}

impl CheckReport {
    fn from_margin(name: &str, margin: f64, tolerance: f64, location: Option<Location>) -> Self {
        let verdict = if margin < -tolerance || margin.is_nan() { Verdict::Fail } else { Verdict::Pass };
        Self { name: name.into(), verdict, margin, location, tolerance, note: String::new() }
    }

    fn vacuous(name: &str, tolerance: f64, note: &str) -> Self {
        Self {
            name: name.into(),
            verdict: Verdict::Pass,
            margin: f64::INFINITY,
            location: None,
            tolerance,
            note: note.into(),
        }
    }

    fn precondition(name: &str, tolerance: f64, reason: String) -> Self {
        Self {
            name: name.into(),
            verdict: Verdict::PreconditionUnmet(reason),
            margin: f64::NAN,
            location: None,
            tolerance,
            note: String::new(),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    pub fn key_values(&self) -> Vec<(String, String)> {
        let key = |k: &str| format!("check.{}.{k}", self.name);
        let verdict = match &self.verdict {
            Verdict::Pass => "pass".to_string(),
            Verdict::Fail => "fail".to_string(),
            Verdict::PreconditionUnmet(_) => "precondition_unmet".to_string(),
        };
        let location = match self.location {
            Some(Location::Time(t)) => format!("t={t:.6}"),
            Some(Location::Sample(i)) => format!("sample={i}"),
            None => "none".into(),
        };
        let mut kv = vec![
            (key("verdict"), verdict),
            (key("margin"), format!("{:.17e}", self.margin)),
            (key("tolerance"), format!("{:.17e}", self.tolerance)),
            (key("location"), location),
        ];
        if let Verdict::PreconditionUnmet(reason) = &self.verdict {
            kv.push((key("reason"), reason.clone()));
        }
        if !self.note.is_empty() {
            kv.push((key("note"), self.note.clone()));
        }
        kv
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match &self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::PreconditionUnmet(_) => "N/A",
        };
        let location = match self.location {
            Some(Location::Time(t)) => format!("t={t:.3}"),
            Some(Location::Sample(i)) => format!("#{i}"),
            None => "-".into(),
        };
        write!(
            f,
            "{:<28} {:<5} margin={:>13.6e} tol={:>9.2e} at {:<12}",
            self.name, verdict, self.margin, self.tolerance, location
        )?;
        match &self.verdict {
            Verdict::PreconditionUnmet(reason) => write!(f, " ({reason})"),
            _ if !self.note.is_empty() => write!(f, " ({})", self.note),
            _ => Ok(()),
        }
    }
}

fn time_of(traj: &Trajectory, i: usize) -> Option<Location> {
    traj.records.get(i).map(|r| Location::Time(r.t))
}

/// Forward invariance of the safe set: `min_t h ≥ −tol`.
pub fn check_forward_invariance(traj: &Trajectory, tol: f64) -> CheckReport {
    const NAME: &str = "forward_invariance";
    let Some(first) = traj.records.first() else {
        return CheckReport::precondition(NAME, tol, "empty trajectory".into());
    };
    if first.h < 0.0 {
        return CheckReport::precondition(NAME, tol, format!("initial state outside C (h = {:.3e})", first.h));
    }
    let (i, min_h) = argmin(traj.records.iter().map(|r| r.h));
    CheckReport::from_margin(NAME, min_h, tol, time_of(traj, i))
}

/// `‖v‖² ≤ v̄ + tol` on every record inside the safe set.
pub fn check_velocity_bound(traj: &Trajectory, v_bar: f64, tol: f64) -> CheckReport {
    const NAME: &str = "velocity_bound";
    let slack = traj.records.iter().enumerate().filter(|(_, r)| r.h >= 0.0).map(|(i, r)| (i, v_bar - r.v.norm_squared()));
    match slack.min_by(|a, b| a.1.total_cmp(&b.1)) {
        Some((i, margin)) => CheckReport::from_margin(NAME, margin, tol, time_of(traj, i)),
        None => CheckReport::vacuous(NAME, tol, "no records inside C"),
    }
}

/// Dissipation inequality `S(t₂) − S(t₁) ≤ ∫ vᵀμ dt + tol` for every
/// `t₁ < t₂` inside each maximal run of records with `h ≤ 0`.
///
/// The supplied work uses the trapezoid rule on `v` with `μ` held over each
/// record interval, matching how disturbances enter the simulation.
pub fn check_passivity(traj: &Trajectory, tol: f64) -> CheckReport {
    const NAME: &str = "passivity";
    let recs = &traj.records;
    let mut worst = f64::INFINITY;
    let mut worst_at = None;
    let mut segments = 0;
    let mut i = 0;
    while i < recs.len() {
        if recs[i].h > 0.0 {
            i += 1;
            continue;
        }
        segments += 1;
        // D = W − S must be non-decreasing; track its largest drawdown.
        let mut work = 0.0;
        let mut d_max = -recs[i].storage;
        let mut j = i;
        while j + 1 < recs.len() && recs[j + 1].h <= 0.0 {
            let (a, b) = (&recs[j], &recs[j + 1]);
            work += 0.5 * a.mu.dot(&(&a.v + &b.v)) * (b.t - a.t);
            let d = work - b.storage;
            if d - d_max < worst {
                worst = d - d_max;
                worst_at = Some(j + 1);
            }
            d_max = d_max.max(d);
            j += 1;
        }
        i = j + 1;
    }
    if segments == 0 {
        return CheckReport::vacuous(NAME, tol, "no records with h <= 0");
    }
    // A segment of a single record has no interval to check.
    let margin = if worst.is_finite() { worst } else { 0.0 };
    let location = worst_at.and_then(|k| time_of(traj, k));
    CheckReport::from_margin(NAME, margin, tol, location).with_note(format!("{segments} segment(s)"))
}

/// After the last disturbance ends outside the safe set, `max(0, −h) ≤ tol`
/// for all `t ≥ t_off + window`.
pub fn check_asymptotic_return(traj: &Trajectory, window: f64, tol: f64) -> CheckReport {
    const NAME: &str = "asymptotic_return";
    let recs = &traj.records;
    let Some(last_push) = recs.iter().rposition(|r| r.mu.iter().any(|&m| m != 0.0)) else {
        return CheckReport::vacuous(NAME, tol, "no disturbance");
    };
    let Some(release) = recs.get(last_push + 1) else {
        return CheckReport::precondition(NAME, tol, "disturbance active until the end of the trajectory".into());
    };
    let t_off = release.t;
    if release.h >= 0.0 {
        return CheckReport::vacuous(NAME, tol, "released inside C");
    }
    let end = recs.last().expect("non-empty").t;
    if end < t_off + window {
        return CheckReport::precondition(
            NAME,
            tol,
            format!("trajectory ends at {end:.3} s, before t_off + window = {:.3} s", t_off + window),
        );
    }
    let start = last_push + 1 + recs[last_push + 1..].iter().position(|r| r.t >= t_off + window).unwrap_or(0);
    let (i, min_h) = argmin(recs[start..].iter().map(|r| r.h.min(0.0)));
    let report = CheckReport::from_margin(NAME, min_h, tol, time_of(traj, start + i))
        .with_note(format!("released at t={t_off:.3} with h={:.3e}", release.h));
    if report.failed() {
        // Under u = g + k_h∇c a rest point outside C is exactly a zero of ∇c.
        let tail = recs.last().expect("non-empty");
        if tail.h < 0.0 && tail.v.amax() <= 1e-9 {
            return CheckReport::precondition(
                NAME,
                tol,
                format!("state at rest outside C (h = {:.3e}): grad c vanishes on the released path", tail.h),
            );
        }
    }
    report
}

/// `u` equals `u_nom` bit-for-bit on every record in `C_ε`.
pub fn check_nominal_passthrough(traj: &Trajectory) -> CheckReport {
    const NAME: &str = "nominal_passthrough";
    let gaps = traj.records.iter().enumerate().filter(|(_, r)| r.in_c_eps).map(|(i, r)| (i, (&r.u - &r.u_nom).amax()));
    let mut any = false;
    let (mut worst_i, mut worst) = (0, 0.0f64);
    for (i, g) in gaps {
        any = true;
        if g > worst || g.is_nan() {
            worst = g;
            worst_i = i;
        }
    }
    if !any {
        return CheckReport::vacuous(NAME, 0.0, "no records in C_eps");
    }
    let location = if worst > 0.0 || worst.is_nan() { time_of(traj, worst_i) } else { None };
    let mut report = CheckReport::from_margin(NAME, 0.0 - worst, 0.0, location);
    // Exact equality: any non-zero gap fails.
    if worst != 0.0 {
        report.verdict = Verdict::Fail;
    }
    report
}

fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, x)| if x < best.1 || x.is_nan() { (i, x) } else { best })
}

/// Tolerances for the structural sweeps.
pub const STRUCTURAL_TOL: f64 = 1e-6;

/// Randomized sweep over the model's structural identities: symmetric and
/// positive-definite inertia, `vᵀ(Ṁ − 2C)v = 0`, the gravity/potential
/// relation, and Jacobian and constraint-gradient consistency with finite
/// differences.
pub fn check_structural<R: Robot + ?Sized>(
    model: &R,
    constraint: Option<&EllipsoidSpec>,
    n_samples: usize,
    seed: u64,
) -> Vec<CheckReport> {
    let n = model.dof();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(DVector<f64>, DVector<f64>)> = (0..n_samples)
        .map(|_| {
            let q = DVector::from_fn(n, |_, _| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
            let v = DVector::from_fn(n, |_, _| rng.gen_range(-5.0..5.0));
            (q, v)
        })
        .collect();
    let d = 1e-6;
    let fd = |f: &dyn Fn(&DVector<f64>) -> DVector<f64>, q: &DVector<f64>, k: usize| {
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[k] += d;
        qm[k] -= d;
        (f(&qp) - f(&qm)) / (2.0 * d)
    };
    let worst = |errors: Vec<f64>| argmin(errors.into_iter().map(|e| 0.0 - e));

    let mut reports = Vec::new();

    let (i, m) = worst(samples.iter().map(|(q, _)| {
        let mm = model.mass_matrix(q);
        (&mm - mm.transpose()).amax()
    }).collect());
    reports.push(CheckReport::from_margin("mass_symmetry", m, 0.0, Some(Location::Sample(i))));

    let (i, min_eig) = argmin(samples.iter().map(|(q, _)| model.mass_matrix(q).symmetric_eigenvalues().min()));
    let mut spd = CheckReport::from_margin("mass_positive_definite", min_eig, 0.0, Some(Location::Sample(i)));
    if min_eig.is_nan() || min_eig <= 0.0 {
        spd.verdict = Verdict::Fail;
    }
    reports.push(spd);

    let (i, m) = worst(samples.iter().map(|(q, v)| {
        let m_dot: DMatrix<f64> = (model.mass_matrix(&(q + v * d)) - model.mass_matrix(&(q - v * d))) / (2.0 * d);
        let residual = v.dot(&((m_dot - model.coriolis_matrix(q, v) * 2.0) * v));
        residual.abs() / (1.0 + v.norm_squared())
    }).collect());
    reports.push(CheckReport::from_margin("skew_symmetry", m, STRUCTURAL_TOL, Some(Location::Sample(i))));

    let (i, m) = worst(samples.iter().map(|(q, _)| {
        let g = model.gravity_vector(q);
        (0..n)
            .map(|k| {
                let grad = fd(&|x| DVector::from_element(1, model.potential_energy(x)), q, k)[0];
                (g[k] - grad).abs()
            })
            .fold(0.0, f64::max)
    }).collect());
    reports.push(CheckReport::from_margin("gravity_gradient", m, STRUCTURAL_TOL, Some(Location::Sample(i))));

    let (i, m) = worst(samples.iter().map(|(q, _)| {
        let j = model.jacobian(q);
        (0..n)
            .map(|k| (j.column(k) - fd(&|x| model.forward_kinematics(x).0, q, k)).amax())
            .fold(0.0, f64::max)
    }).collect());
    reports.push(CheckReport::from_margin("jacobian", m, STRUCTURAL_TOL, Some(Location::Sample(i))));

    if let Some(spec) = constraint {
        let (i, m) = worst(samples.iter().map(|(q, _)| {
            let g = spec.grad_c(model, q);
            (0..n)
                .map(|k| (g[k] - fd(&|x| DVector::from_element(1, spec.c_value(model, x)), q, k)[0]).abs())
                .fold(0.0, f64::max)
        }).collect());
        reports.push(CheckReport::from_margin("constraint_gradient", m, STRUCTURAL_TOL, Some(Location::Sample(i))));
    }
    reports
}

/// Tolerances and context for [`verify_trajectory`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub invariance_tol: f64,
    pub velocity_tol: f64,
    pub passivity_tol: f64,
    pub return_tol: f64,
    pub return_window: f64,
    /// Velocity bound; the velocity check is skipped when unknown.
    pub v_bar: Option<f64>,
}

/// Runs every applicable trajectory check.
///
/// Forward invariance is a statement about undisturbed motion, so it is
/// checked on the records before the first disturbance window.
pub fn verify_trajectory(traj: &Trajectory, cfg: &VerifyConfig) -> Vec<CheckReport> {
    let first_push = traj.records.iter().position(|r| r.mu.iter().any(|&m| m != 0.0));
    let mut reports = Vec::new();
    let prefix = match first_push {
        Some(k) => Trajectory { records: traj.records[..k.max(1)].to_vec(), ..Default::default() },
        None => traj.clone(),
    };
    let mut inv = check_forward_invariance(&prefix, cfg.invariance_tol);
    if first_push.is_some() {
        inv.note = "checked up to the first disturbance".into();
    }
    reports.push(inv);
    if let Some(v_bar) = cfg.v_bar {
        reports.push(check_velocity_bound(traj, v_bar, cfg.velocity_tol));
    }
    reports.push(check_passivity(traj, cfg.passivity_tol));
    reports.push(check_asymptotic_return(traj, cfg.return_window, cfg.return_tol));
    reports.push(check_nominal_passthrough(traj));
    reports
}

/// Renders reports as an aligned table followed by `key=value` lines.
pub fn render_reports(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out.push('\n');
    for r in reports {
        for (k, v) in r.key_values() {
            out.push_str(&format!("{k}={v}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{MechanicalModel, PointMassModel, TwoLinkArmModel};
    use crate::kinematics::{Kinematics, TaskPoint};
    use crate::simulate::SimRecord;
    use crate::constraints::ConstraintSpace;

    fn rec(t: f64, h: f64, v: &[f64], mu: &[f64]) -> SimRecord {
        let n = v.len();
        SimRecord {
            t,
            q: DVector::zeros(n),
            v: DVector::from_column_slice(v),
            x: DVector::zeros(n),
            c: h,
            h,
            phi: 0.0,
            u: DVector::zeros(n),
            u_nom: DVector::zeros(n),
            mu: DVector::from_column_slice(mu),
            storage: -h,
            hdot: 0.0,
            in_c: h >= 0.0,
            in_c_eps: h >= 0.1,
        }
    }

    fn traj(records: Vec<SimRecord>) -> Trajectory {
        Trajectory { records, ..Default::default() }
    }

    #[test]
    fn invariance_on_a_constant_state() {
        let t = traj((0..100).map(|k| rec(k as f64 * 0.01, 0.25, &[0.0], &[0.0])).collect());
        let r = check_forward_invariance(&t, 5e-3);
        assert!(r.passed());
        assert_eq!(r.margin, 0.25);
    }

    #[test]
    fn invariance_failure_and_precondition() {
        let t = traj(vec![rec(0.0, 0.1, &[0.0], &[0.0]), rec(0.1, -0.2, &[0.0], &[0.0])]);
        let r = check_forward_invariance(&t, 5e-3);
        assert!(r.failed());
        assert_eq!(r.location, Some(Location::Time(0.1)));
        let t = traj(vec![rec(0.0, -0.1, &[0.0], &[0.0])]);
        assert!(matches!(check_forward_invariance(&t, 5e-3).verdict, Verdict::PreconditionUnmet(_)));
    }

    #[test]
    fn velocity_bound_flags_impossible_records() {
        let ok = traj(vec![rec(0.0, 0.1, &[0.0, 0.0], &[0.0, 0.0]), rec(0.1, 0.1, &[0.5, 0.5], &[0.0, 0.0])]);
        assert!(check_velocity_bound(&ok, 1.0, 0.0).passed());
        // ‖v‖² = 2 v̄ with h > 0 cannot occur under an admissible gain.
        let bad = traj(vec![rec(0.0, 0.1, &[1.0, 1.0], &[0.0, 0.0])]);
        assert!(check_velocity_bound(&bad, 1.0, 0.0).failed());
        // Outside C the bound is not claimed.
        let outside = traj(vec![rec(0.0, -0.1, &[3.0, 3.0], &[0.0, 0.0])]);
        assert!(check_velocity_bound(&outside, 1.0, 0.0).passed());
    }

    #[test]
    fn passivity_segments() {
        // Inside C only: vacuous.
        let inside = traj(vec![rec(0.0, 0.2, &[1.0], &[0.0]), rec(0.1, 0.3, &[1.0], &[0.0])]);
        let r = check_passivity(&inside, 1e-3);
        assert!(r.passed() && r.margin.is_infinite());
        // μ = 0 outside C: storage must not grow.
        let decaying = traj((0..10).map(|k| rec(k as f64 * 0.1, -1.0 + 0.05 * k as f64, &[1.0], &[0.0])).collect());
        assert!(check_passivity(&decaying, 1e-3).passed());
        let growing = traj((0..10).map(|k| rec(k as f64 * 0.1, -0.1 - 0.05 * k as f64, &[1.0], &[0.0])).collect());
        let r = check_passivity(&growing, 1e-3);
        assert!(r.failed());
        assert!((r.margin + 0.45).abs() < 1e-12);
        // Growth paid for by the supplied work vᵀμ = 0.5 per second.
        let supplied = traj((0..10).map(|k| rec(k as f64 * 0.1, -0.1 - 0.05 * k as f64, &[1.0], &[0.5])).collect());
        assert!(check_passivity(&supplied, 1e-9).passed());
    }

    #[test]
    fn asymptotic_return_cases() {
        let dt = 0.01;
        let mut recs = Vec::new();
        for k in 0..1000 {
            let t = k as f64 * dt;
            let pushing = t < 1.0;
            let h = if pushing { -0.1 * t } else { -0.1 * (-(t - 1.0) * 3.0).exp() };
            recs.push(rec(t, h, &[0.5], if pushing { &[1.0] } else { &[0.0] }));
        }
        let r = check_asymptotic_return(&traj(recs.clone()), 5.0, 1e-3);
        assert!(r.passed(), "{r}");
        assert!(r.margin > -1e-3);
        // Too short a window for that decay rate.
        assert!(check_asymptotic_return(&traj(recs.clone()), 0.5, 1e-3).failed());
        // Horizon shorter than the window.
        assert!(matches!(
            check_asymptotic_return(&traj(recs[..300].to_vec()), 5.0, 1e-3).verdict,
            Verdict::PreconditionUnmet(_)
        ));
        // Never disturbed: vacuous.
        let calm = traj((0..10).map(|k| rec(k as f64, 0.2, &[0.0], &[0.0])).collect());
        assert!(check_asymptotic_return(&calm, 5.0, 1e-3).passed());
    }

    #[test]
    fn stuck_outside_is_a_precondition_violation() {
        let mut recs = vec![rec(0.0, -0.5, &[0.0], &[1.0])];
        recs.extend((1..800).map(|k| rec(k as f64 * 0.01, -0.5, &[0.0], &[0.0])));
        let r = check_asymptotic_return(&traj(recs), 5.0, 1e-3);
        assert!(matches!(r.verdict, Verdict::PreconditionUnmet(_)), "{r}");
    }

    #[test]
    fn passthrough_requires_exact_equality() {
        let mut a = rec(0.0, 0.2, &[0.0], &[0.0]);
        a.u = DVector::from_element(1, 1.0);
        a.u_nom = DVector::from_element(1, 1.0);
        let mut band = rec(0.1, 0.05, &[0.0], &[0.0]);
        band.u_nom = DVector::from_element(1, 2.0);
        assert!(check_nominal_passthrough(&traj(vec![a.clone(), band])).passed());
        let mut off = a.clone();
        off.u[0] = 1.0 + f64::EPSILON;
        let r = check_nominal_passthrough(&traj(vec![a, off]));
        assert!(r.failed());
        assert_eq!(r.location, Some(Location::Time(0.0)));
    }

    #[test]
    fn structural_sweep_on_default_models() {
        let arm = TwoLinkArmModel::default();
        let spec = EllipsoidSpec::diagonal(&[0.43, -0.12], &[1.78, 4.95], ConstraintSpace::Task).unwrap();
        let reports = check_structural(&arm, Some(&spec), 1000, 9);
        assert_eq!(reports.len(), 6);
        for r in &reports {
            assert!(r.passed(), "{r}");
        }
        let pm = PointMassModel::new(2.0, &[0.1, 0.1, 0.1], &[0.0, 0.0, -9.81]).unwrap();
        for r in check_structural(&pm, None, 1000, 9) {
            assert!(r.passed(), "{r}");
        }
    }

    #[derive(Debug)]
    struct FlippedCoriolis(TwoLinkArmModel);

    impl MechanicalModel for FlippedCoriolis {
        fn name(&self) -> &str {
            "flipped"
        }
        fn dof(&self) -> usize {
            2
        }
        fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
            self.0.mass_matrix(q)
        }
        fn coriolis_matrix(&self, q: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64> {
            -self.0.coriolis_matrix(q, v)
        }
        fn gravity_vector(&self, q: &DVector<f64>) -> DVector<f64> {
            self.0.gravity_vector(q)
        }
        fn damping(&self) -> &DMatrix<f64> {
            self.0.damping()
        }
        fn potential_energy(&self, q: &DVector<f64>) -> f64 {
            self.0.potential_energy(q)
        }
    }

    impl Kinematics for FlippedCoriolis {
        fn task_dim(&self) -> usize {
            2
        }
        fn forward_kinematics(&self, q: &DVector<f64>) -> TaskPoint {
            self.0.forward_kinematics(q)
        }
        fn jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
            self.0.jacobian(q)
        }
    }

    #[test]
    fn corrupted_coriolis_fails_skew_symmetry() {
        let reports = check_structural(&FlippedCoriolis(TwoLinkArmModel::default()), None, 1000, 10);
        let skew = reports.iter().find(|r| r.name == "skew_symmetry").unwrap();
        assert!(skew.failed());
        assert!(reports.iter().filter(|r| r.name != "skew_symmetry").all(|r| r.passed()));
    }

    #[test]
    fn key_values_carry_tolerance() {
        let t = traj(vec![rec(0.0, 0.25, &[0.0], &[0.0])]);
        let kv = check_forward_invariance(&t, 5e-4).key_values();
        assert!(kv.iter().any(|(k, v)| k == "check.forward_invariance.verdict" && v == "pass"));
        assert!(kv.iter().any(|(k, _)| k == "check.forward_invariance.tolerance"));
    }
}
