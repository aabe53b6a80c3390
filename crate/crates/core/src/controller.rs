//! Nominal controllers, the closed-form safety controller, the admissible
//! input set `K_u`, and the single-constraint QP filter used as a baseline.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barrier::EnergyBarrier;
use crate::dynamics::{inverse_dynamics, JointState};
use crate::kinematics::Robot;

/// Joint-space reference with analytic first and second derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    Hold {
        q: Vec<f64>,
    },
    /// `q_d(t) = center + amplitude ∘ sin(omega·t + phase)`, per joint.
    Sinusoid {
        center: Vec<f64>,
        amplitude: Vec<f64>,
        omega: Vec<f64>,
        phase: Vec<f64>,
    },
}

/// `(q_d, v_d, a_d)` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePoint {
    pub q: DVector<f64>,
    pub v: DVector<f64>,
    pub a: DVector<f64>,
}

impl Reference {
    pub fn dof(&self) -> usize {
        match self {
            Reference::Hold { q } => q.len(),
            Reference::Sinusoid { center, .. } => center.len(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Reference::Hold { q } => {
                if q.iter().all(|x| x.is_finite()) {
                    Ok(())
                } else {
                    Err("hold reference must be finite".into())
                }
            }
            Reference::Sinusoid { center, amplitude, omega, phase } => {
                let n = center.len();
                if [amplitude.len(), omega.len(), phase.len()].iter().any(|&l| l != n) {
                    return Err("sinusoid center/amplitude/omega/phase lengths differ".into());
                }
                if center.iter().chain(amplitude).chain(omega).chain(phase).any(|x| !x.is_finite()) {
                    return Err("sinusoid parameters must be finite".into());
                }
                Ok(())
            }
        }
    }

    pub fn at(&self, t: f64) -> ReferencePoint {
        match self {
            Reference::Hold { q } => ReferencePoint {
                q: DVector::from_column_slice(q),
                v: DVector::zeros(q.len()),
                a: DVector::zeros(q.len()),
            },
            Reference::Sinusoid { center, amplitude, omega, phase } => {
                let n = center.len();
                let mut r = ReferencePoint {
                    q: DVector::zeros(n),
                    v: DVector::zeros(n),
                    a: DVector::zeros(n),
                };
                for i in 0..n {
                    let (s, c) = (omega[i] * t + phase[i]).sin_cos();
                    r.q[i] = center[i] + amplitude[i] * s;
                    r.v[i] = amplitude[i] * omega[i] * c;
                    r.a[i] = -amplitude[i] * omega[i] * omega[i] * s;
                }
                r
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NominalController {
    GravityCompensation,
    /// Computed torque `M(a_d + Kp e + Kd ė) + C v + F v + g`, `e = q_d − q`.
    InverseDynamics {
        kp: Vec<f64>,
        kd: Vec<f64>,
        reference: Reference,
    },
    ConstantTorque {
        torque: Vec<f64>,
    },
}

impl NominalController {
    pub fn tracker(dof: usize, reference: Reference) -> Self {
        NominalController::InverseDynamics {
            kp: vec![100.0; dof],
            kd: vec![20.0; dof],
            reference,
        }
    }

    pub fn validate(&self, dof: usize) -> Result<(), String> {
        match self {
            NominalController::GravityCompensation => Ok(()),
            NominalController::InverseDynamics { kp, kd, reference } => {
                reference.validate()?;
                if kp.len() != dof || kd.len() != dof || reference.dof() != dof {
                    return Err(format!("tracker gains and reference must have length {dof}"));
                }
                if kp.iter().chain(kd).any(|x| !x.is_finite()) {
                    return Err("tracker gains must be finite".into());
                }
                Ok(())
            }
            NominalController::ConstantTorque { torque } => {
                if torque.len() != dof {
                    return Err(format!("constant torque must have length {dof}"));
                }
                if torque.iter().any(|x| !x.is_finite()) {
                    return Err("constant torque must be finite".into());
                }
                Ok(())
            }
        }
    }

    pub fn torque<R: Robot + ?Sized>(&self, model: &R, s: &JointState, t: f64) -> DVector<f64> {
        match self {
            NominalController::GravityCompensation => model.gravity_vector(&s.q),
            NominalController::InverseDynamics { kp, kd, reference } => {
                let r = reference.at(t);
                let e = &r.q - &s.q;
                let de = &r.v - &s.v;
                let a = r.a
                    + DVector::from_column_slice(kp).component_mul(&e)
                    + DVector::from_column_slice(kd).component_mul(&de);
                inverse_dynamics(model, s, &a)
            }
            NominalController::ConstantTorque { torque } => DVector::from_column_slice(torque),
        }
    }
}

/// Everything the safety controller computed for one state.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub u: DVector<f64>,
    pub u_nom: DVector<f64>,
    pub h: f64,
    pub phi: f64,
}

/// `u = (1 − φ_ε(h))·(g + k_h∇c) + φ_ε(h)·u_nom`.
#[derive(Debug, Clone, PartialEq)]
pub struct SafeController {
    pub barrier: EnergyBarrier,
    pub nominal: NominalController,
}

impl SafeController {
    pub fn new(barrier: EnergyBarrier, nominal: NominalController) -> Self {
        Self { barrier, nominal }
    }

    pub fn control<R: Robot + ?Sized>(&self, model: &R, s: &JointState, t: f64) -> ControlOutput {
        let u_nom = self.nominal.torque(model, s, t);
        let h = self.barrier.h(model, s);
        let eps = self.barrier.config.epsilon();
        // The outer branches return their operand untouched so that u == u_nom
        // holds bit-for-bit on C_ε and u == g + k_h∇c outside C.
        if h >= eps {
            return ControlOutput { u: u_nom.clone(), u_nom, h, phi: 1.0 };
        }
        let safe = self.barrier.safe_torque(model, &s.q);
        if h <= 0.0 {
            return ControlOutput { u: safe, u_nom, h, phi: 0.0 };
        }
        let phi = self.barrier.phi(h);
        let u = safe * (1.0 - phi) + &u_nom * phi;
        ControlOutput { u, u_nom, h, phi }
    }
}

/// `u ∈ K_u(q, v)  ⇔  vᵀ(k_h∇c + g − u) ≥ 0`.
pub fn in_ku<R: Robot + ?Sized>(model: &R, barrier: &EnergyBarrier, s: &JointState, u: &DVector<f64>) -> bool {
    barrier.hdot_lower_bound(model, s, u) >= 0.0
}

/// Extended class-K function for the baseline constraint `ḣ ≥ −α(h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassK {
    Linear { gain: f64 },
}

impl Default for ClassK {
    fn default() -> Self {
        ClassK::Linear { gain: 1.0 }
    }
}

impl ClassK {
    pub fn eval(self, h: f64) -> f64 {
        match self {
            ClassK::Linear { gain } => gain * h,
        }
    }
}

/// The baseline QP has no solution: at rest outside the safe set its
/// constraint reduces to `0 ≥ −α(h) > 0`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("baseline QP infeasible: v = 0 with h = {h:.6e} (alpha(h) = {alpha_h:.6e})")]
pub struct BaselineInfeasible {
    pub h: f64,
    pub alpha_h: f64,
}

/// Closed-form solution of `min ‖u − u_nom‖²  s.t.  vᵀ(k_h∇c + g − u) ≥ −α(h)`,
/// a Euclidean projection onto a half-space in `u`.
pub fn baseline_qp_control<R: Robot + ?Sized>(
    model: &R,
    barrier: &EnergyBarrier,
    s: &JointState,
    u_nom: &DVector<f64>,
    alpha: ClassK,
) -> Result<DVector<f64>, BaselineInfeasible> {
    let h = barrier.h(model, s);
    let alpha_h = alpha.eval(h);
    let slack = barrier.hdot_lower_bound(model, s, u_nom) + alpha_h;
    if slack >= 0.0 {
        return Ok(u_nom.clone());
    }
    let v2 = s.v.norm_squared();
    if v2 == 0.0 {
        return Err(BaselineInfeasible { h, alpha_h });
    }
    Ok(u_nom + &s.v * (slack / v2))
}
