//! Fixed-step closed-loop integration with disturbance injection.

mod disturbance;
mod trajectory;

pub use disturbance::{DisturbanceProfile, DisturbanceWindow};
pub use trajectory::{csv_header, SimRecord, Summary, Trajectory, TrajectoryIoError};

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::controller::{baseline_qp_control, ClassK, SafeController};
use crate::dynamics::{acceleration, DynamicsError, JointState, PointMassModel, TwoLinkArmModel, TwoLinkParams};
use crate::kinematics::Robot;

/// Any state entry beyond this magnitude is treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("state diverged at t = {t} s (|entry| > {DIVERGENCE_LIMIT:e} or non-finite)")]
    Divergence { t: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Model selection as it appears in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    PointMass {
        mass: f64,
        damping: Vec<f64>,
        #[serde(default)]
        gravity: Option<Vec<f64>>,
    },
    TwoLink {
        #[serde(default)]
        params: TwoLinkParams,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Arc<dyn Robot>, DynamicsError> {
        Ok(match self {
            ModelSpec::PointMass { mass, damping, gravity } => {
                let zeros = vec![0.0; damping.len()];
                Arc::new(PointMassModel::new(*mass, damping, gravity.as_deref().unwrap_or(&zeros))?)
            }
            ModelSpec::TwoLink { params } => Arc::new(TwoLinkArmModel::new(params.clone())?),
        })
    }
}

/// Which torque is actually applied to the plant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlMode {
    /// Blended safety controller.
    #[default]
    Safe,
    /// The nominal controller alone; barrier quantities are still logged.
    Nominal,
    /// Nominal torque filtered by the single-constraint QP. Where the QP is
    /// infeasible the step is logged and the nominal torque is applied.
    Baseline {
        #[serde(default)]
        alpha: ClassK,
    },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model_spec: ModelSpec,
    pub model: Arc<dyn Robot>,
    pub controller: SafeController,
    pub mode: ControlMode,
    pub disturbance: DisturbanceProfile,
    pub initial: JointState,
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    /// Hold the control over each step instead of re-evaluating it per stage.
    pub zoh: bool,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        model_spec: ModelSpec,
        controller: SafeController,
        initial: JointState,
    ) -> Result<Self, SimError> {
        let model = model_spec.build()?;
        let scn = Self {
            name: name.into(),
            model_spec,
            model,
            controller,
            mode: ControlMode::Safe,
            disturbance: DisturbanceProfile::none(),
            initial,
            dt: 1e-3,
            duration: 10.0,
            seed: 0,
            zoh: false,
        };
        scn.validate()?;
        Ok(scn)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.model.dof();
        let invalid = |m: String| Err(SimError::InvalidScenario(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return invalid(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.duration.is_finite() && self.duration >= self.dt) {
            return invalid(format!("duration must be >= dt, got {}", self.duration));
        }
        if self.initial.dof() != n || !self.initial.is_finite() {
            return invalid(format!("initial state must be finite with {n} entries"));
        }
        self.controller
            .barrier
            .constraint
            .check_compatible(self.model.as_ref())
            .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        self.controller.nominal.validate(n).map_err(SimError::InvalidScenario)?;
        if let Some(w) = self.disturbance.windows().iter().find(|w| w.mu.len() != n) {
            return invalid(format!("disturbance starting at {} has wrong dimension", w.start));
        }
        if let ControlMode::Baseline { alpha: ClassK::Linear { gain } } = self.mode {
            if !(gain.is_finite() && gain > 0.0) {
                return invalid(format!("baseline alpha gain must be > 0, got {gain}"));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// SHA-256 over every field that influences the trajectory.
    pub fn digest(&self) -> String {
        let b = &self.controller.barrier;
        let canonical = format!(
            "{}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{}",
            self.name,
            self.model_spec,
            b.constraint.center().as_slice(),
            b.constraint.shape().as_slice(),
            b.constraint.space(),
            b.config,
            self.controller.nominal,
            self.mode,
            self.disturbance,
            self.initial.q.as_slice(),
            self.initial.v.as_slice(),
            self.dt,
            self.duration,
            self.seed,
            self.zoh,
            env!("CARGO_PKG_VERSION"),
        );
        let hash = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in hash.iter() {
            write!(hex, "{byte:02x}").expect("writing to a String cannot fail");
        }
        hex
    }

    pub fn command(&self, s: &JointState, t: f64) -> Command {
        let model = self.model.as_ref();
        match self.mode {
            ControlMode::Safe => {
                let out = self.controller.control(model, s, t);
                Command { u: out.u, u_nom: out.u_nom, h: out.h, phi: out.phi, infeasible: false }
            }
            ControlMode::Nominal => {
                let u_nom = self.controller.nominal.torque(model, s, t);
                let h = self.controller.barrier.h(model, s);
                Command { u: u_nom.clone(), u_nom, h, phi: self.controller.barrier.phi(h), infeasible: false }
            }
            ControlMode::Baseline { alpha } => {
                let barrier = &self.controller.barrier;
                let u_nom = self.controller.nominal.torque(model, s, t);
                let h = barrier.h(model, s);
                let (u, infeasible) = match baseline_qp_control(model, barrier, s, &u_nom, alpha) {
                    Ok(u) => (u, false),
                    Err(_) => (u_nom.clone(), true),
                };
                Command { u, u_nom, h, phi: barrier.phi(h), infeasible }
            }
        }
    }
}

/// Controller evaluation at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub u: DVector<f64>,
    pub u_nom: DVector<f64>,
    pub h: f64,
    pub phi: f64,
    pub infeasible: bool,
}

fn check_finite(s: &JointState, t: f64) -> Result<(), SimError> {
    if s.q.iter().chain(s.v.iter()).all(|x| x.is_finite() && x.abs() <= DIVERGENCE_LIMIT) {
        Ok(())
    } else {
        Err(SimError::Divergence { t })
    }
}

/// One classical RK4 step of the coupled `(q, v)` system.
///
/// `control` is evaluated at every stage; the disturbance is sampled at the
/// step midpoint and held for the whole step.
pub fn rk4_step<R, F>(
    model: &R,
    control: F,
    profile: &DisturbanceProfile,
    s: &JointState,
    t: f64,
    dt: f64,
) -> Result<JointState, SimError>
where
    R: Robot + ?Sized,
    F: Fn(&JointState, f64) -> DVector<f64>,
{
    let mu = profile.at(t + 0.5 * dt, model.dof());
    let deriv = |st: &JointState, ts: f64| -> Result<(DVector<f64>, DVector<f64>), SimError> {
        let u = control(st, ts);
        Ok((st.v.clone(), acceleration(model, st, &u, &mu)?))
    };
    let shifted = |kq: &DVector<f64>, kv: &DVector<f64>, h: f64| JointState {
        q: &s.q + kq * h,
        v: &s.v + kv * h,
    };
    let (k1q, k1v) = deriv(s, t)?;
    let (k2q, k2v) = deriv(&shifted(&k1q, &k1v, 0.5 * dt), t + 0.5 * dt)?;
    let (k3q, k3v) = deriv(&shifted(&k2q, &k2v, 0.5 * dt), t + 0.5 * dt)?;
    let (k4q, k4v) = deriv(&shifted(&k3q, &k3v, dt), t + dt)?;
    let next = JointState {
        q: &s.q + (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (dt / 6.0),
        v: &s.v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0),
    };
    check_finite(&next, t + dt)?;
    Ok(next)
}

/// Integrates the scenario on the uniform grid `t_k = k·dt`, `k = 0..=steps`.
pub fn simulate(scn: &Scenario) -> Result<Trajectory, SimError> {
    scn.validate()?;
    let model = scn.model.as_ref();
    let barrier = &scn.controller.barrier;
    let n = model.dof();
    let steps = scn.steps();
    let mut records = Vec::with_capacity(steps + 1);
    let mut infeasible_steps = Vec::new();
    let mut s = scn.initial.clone();
    check_finite(&s, 0.0)?;

    for k in 0..=steps {
        let t = k as f64 * scn.dt;
        let mu = scn.disturbance.at(t + 0.5 * scn.dt, n);
        let cmd = scn.command(&s, t);
        if cmd.infeasible {
            infeasible_steps.push(k);
        }
        let c = barrier.c(model, &s.q);
        let h = cmd.h;
        let hdot = barrier.hdot(model, &s, &(&cmd.u + &mu));
        records.push(SimRecord {
            t,
            q: s.q.clone(),
            v: s.v.clone(),
            x: model.forward_kinematics(&s.q).0,
            c,
            h,
            phi: cmd.phi,
            u: cmd.u.clone(),
            u_nom: cmd.u_nom,
            mu,
            storage: -h,
            hdot,
            in_c: h >= 0.0,
            in_c_eps: h >= barrier.config.epsilon(),
        });
        if k == steps {
            break;
        }
        s = if scn.zoh {
            let held = cmd.u;
            rk4_step(model, |_, _| held.clone(), &scn.disturbance, &s, t, scn.dt)?
        } else {
            rk4_step(model, |st, ts| scn.command(st, ts).u, &scn.disturbance, &s, t, scn.dt)?
        };
    }
    Ok(Trajectory { records, digest: Some(scn.digest()), infeasible_steps })
}
