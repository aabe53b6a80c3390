//! Energy-based barrier `h(q, v) = k_h·c(q) − ½ vᵀM(q)v` and the blending
//! function `φ_ε` used by the safety controller.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{EllipsoidSpec, VelocityBound};
use crate::dynamics::JointState;
use crate::kinematics::Robot;

#[derive(Debug, Error, PartialEq)]
pub enum BarrierError {
    #[error("invalid barrier parameter: {0}")]
    Invalid(String),
}

/// Blend curve on `[0, ε]` with `κ(0) = 0` and `κ(ε) = 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kappa {
    /// `−(2/ε³)h³ + (3/ε²)h²`
    #[default]
    Cubic,
    /// `h/ε`
    Linear,
}

impl Kappa {
    pub fn eval(self, h: f64, eps: f64) -> f64 {
        match self {
            Kappa::Cubic => kappa_cubic(h, eps),
            Kappa::Linear => h / eps,
        }
    }
}

pub fn kappa_cubic(h: f64, eps: f64) -> f64 {
    let r = h / eps;
    // −2r³ + 3r², written so both endpoints are exact.
    r * r * (3.0 - 2.0 * r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierConfig {
    k_h: f64,
    epsilon: f64,
    kappa: Kappa,
    v_bar: VelocityBound,
}

impl BarrierConfig {
    pub fn new(k_h: f64, epsilon: f64, kappa: Kappa, v_bar: VelocityBound) -> Result<Self, BarrierError> {
        if !(k_h.is_finite() && k_h > 0.0) {
            return Err(BarrierError::Invalid(format!("k_h must be > 0, got {k_h}")));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(BarrierError::Invalid(format!("epsilon must be > 0, got {epsilon}")));
        }
        Ok(Self { k_h, epsilon, kappa, v_bar })
    }

    pub fn k_h(&self) -> f64 {
        self.k_h
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kappa(&self) -> Kappa {
        self.kappa
    }

    pub fn v_bar(&self) -> VelocityBound {
        self.v_bar
    }

    /// `φ_ε(h)`: 0 below the safe set, `κ(h)` on `[0, ε]`, 1 above.
    pub fn phi(&self, h: f64) -> f64 {
        if h > self.epsilon {
            1.0
        } else if h >= 0.0 {
            self.kappa.eval(h, self.epsilon).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// A constraint together with the barrier parameters built on it.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBarrier {
    pub constraint: EllipsoidSpec,
    pub config: BarrierConfig,
}

impl EnergyBarrier {
    pub fn new(constraint: EllipsoidSpec, config: BarrierConfig) -> Self {
        Self { constraint, config }
    }

    pub fn c<R: Robot + ?Sized>(&self, model: &R, q: &DVector<f64>) -> f64 {
        self.constraint.c_value(model, q)
    }

    pub fn grad_c<R: Robot + ?Sized>(&self, model: &R, q: &DVector<f64>) -> DVector<f64> {
        self.constraint.grad_c(model, q)
    }

    pub fn h<R: Robot + ?Sized>(&self, model: &R, s: &JointState) -> f64 {
        self.config.k_h * self.c(model, &s.q) - model.kinetic_energy(s)
    }

    pub fn phi(&self, h: f64) -> f64 {
        self.config.phi(h)
    }

    pub fn in_safe_set<R: Robot + ?Sized>(&self, model: &R, s: &JointState) -> bool {
        self.h(model, s) >= 0.0
    }

    pub fn in_c_eps<R: Robot + ?Sized>(&self, model: &R, s: &JointState) -> bool {
        self.h(model, s) >= self.config.epsilon
    }

    /// The passive safe torque `g(q) + k_h ∇c(q)`.
    pub fn safe_torque<R: Robot + ?Sized>(&self, model: &R, q: &DVector<f64>) -> DVector<f64> {
        model.gravity_vector(q) + self.grad_c(model, q) * self.config.k_h
    }

    /// `vᵀ(k_h∇c + g − u)`, the part of `ḣ` the input can influence.
    /// Non-negative exactly when `u` lies in the admissible set `K_u`.
    pub fn hdot_lower_bound<R: Robot + ?Sized>(&self, model: &R, s: &JointState, u: &DVector<f64>) -> f64 {
        s.v.dot(&(self.safe_torque(model, &s.q) - u))
    }

    /// Exact time derivative of `h` along the flow under total generalized
    /// force `u` (control plus any disturbance): `vᵀ(k_h∇c + g − u + Fv)`.
    pub fn hdot<R: Robot + ?Sized>(&self, model: &R, s: &JointState, u: &DVector<f64>) -> f64 {
        self.hdot_lower_bound(model, s, u) + s.v.dot(&(model.damping() * &s.v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{ConstraintSpace, EllipsoidSpec};
    use crate::dynamics::{acceleration, MechanicalModel, PointMassModel, TwoLinkArmModel};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn cfg(k_h: f64) -> BarrierConfig {
        BarrierConfig::new(k_h, 0.1, Kappa::Cubic, VelocityBound::new(1.0).unwrap()).unwrap()
    }

    fn unit_barrier() -> (PointMassModel, EnergyBarrier) {
        let pm = PointMassModel::free(1.0, 2, 0.1).unwrap();
        let spec = EllipsoidSpec::diagonal(&[0.0, 0.0], &[1.0, 1.0], ConstraintSpace::Joint).unwrap();
        (pm, EnergyBarrier::new(spec, cfg(0.25)))
    }

    fn desk_barrier() -> (TwoLinkArmModel, EnergyBarrier) {
        let spec = EllipsoidSpec::diagonal(&[0.43, -0.12], &[1.78, 4.95], ConstraintSpace::Task).unwrap();
        (TwoLinkArmModel::default(), EnergyBarrier::new(spec, cfg(0.25)))
    }

    #[test]
    fn h_on_unit_point_mass() {
        let (pm, b) = unit_barrier();
        let s = JointState::from_slices(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(b.h(&pm, &s), 0.25);
        let s = JointState::from_slices(&[0.0, 0.0], &[0.6, 0.8]).unwrap();
        assert!((b.h(&pm, &s) + 0.25).abs() < 1e-15);
        let s = JointState::from_slices(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(b.h(&pm, &s), 0.0);
    }

    #[test]
    fn cubic_kappa_endpoints_and_midpoint() {
        assert_eq!(kappa_cubic(0.0, 0.1), 0.0);
        assert_eq!(kappa_cubic(0.1, 0.1), 1.0);
        assert_eq!(kappa_cubic(0.05, 0.1), 0.5);
        assert!((Kappa::Linear.eval(0.025, 0.1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn phi_regions() {
        let c = cfg(0.25);
        assert_eq!(c.phi(0.2), 1.0);
        assert_eq!(c.phi(-0.1), 0.0);
        assert_eq!(c.phi(0.05), 0.5);
        assert!(c.phi(1e-300).abs() < 1e-12);
        assert!((c.phi(0.1 - 1e-15) - 1.0).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 0..=10_000 {
            let p = c.phi(0.1 * i as f64 / 10_000.0);
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn set_membership() {
        let (pm, b) = unit_barrier();
        let inner = JointState::from_slices(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(b.in_safe_set(&pm, &inner) && b.in_c_eps(&pm, &inner));
        // h = 0.25·c with c = 0.2
        let band = JointState::from_slices(&[0.8f64.sqrt(), 0.0], &[0.0, 0.0]).unwrap();
        assert!((b.h(&pm, &band) - 0.05).abs() < 1e-12);
        assert!(b.in_safe_set(&pm, &band) && !b.in_c_eps(&pm, &band));
        let out = JointState::from_slices(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(!b.in_safe_set(&pm, &out) && !b.in_c_eps(&pm, &out));
    }

    #[test]
    fn hdot_at_the_passive_torque_is_the_damping_power() {
        let (arm, b) = desk_barrier();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let s = JointState::from_slices(
                &[rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)],
                &[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
            )
            .unwrap();
            let u = b.safe_torque(&arm, &s.q);
            let fv = s.v.dot(&(arm.damping() * &s.v));
            assert!((b.hdot(&arm, &s, &u) - fv).abs() < 1e-12);
            assert!(b.hdot_lower_bound(&arm, &s, &u).abs() < 1e-12);
        }
        let rest = JointState::from_slices(&[0.3, 0.4], &[0.0, 0.0]).unwrap();
        assert_eq!(b.hdot(&arm, &rest, &dv(&[5.0, -3.0])), 0.0);
    }

    #[test]
    fn hdot_matches_central_difference_along_the_flow() {
        let (arm, b) = desk_barrier();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let zero = DVector::zeros(2);
        for _ in 0..100 {
            let s = JointState::from_slices(
                &[rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)],
                &[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
            )
            .unwrap();
            let u = dv(&[rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]);
            let a = acceleration(&arm, &s, &u, &zero).unwrap();
            // Second-order Taylor states along the exact flow.
            let d = 1e-5;
            let at = |t: f64| JointState {
                q: &s.q + &s.v * t + &a * (0.5 * t * t),
                v: &s.v + &a * t,
            };
            let fd = (b.h(&arm, &at(d)) - b.h(&arm, &at(-d))) / (2.0 * d);
            assert!((fd - b.hdot(&arm, &s, &u)).abs() < 1e-4);
        }
    }

    #[test]
    fn hdot_equals_the_explicit_chain_rule() {
        // −vᵀM v̇ − ½ vᵀṀ v + k_h ∇cᵀv with Ṁ by finite differences.
        let (arm, b) = desk_barrier();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let zero = DVector::zeros(2);
        for _ in 0..200 {
            let s = JointState::from_slices(
                &[rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)],
                &[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
            )
            .unwrap();
            let u = dv(&[rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]);
            let vdot = acceleration(&arm, &s, &u, &zero).unwrap();
            let d = 1e-6;
            let m_dot: DMatrix<f64> =
                (arm.mass_matrix(&(&s.q + &s.v * d)) - arm.mass_matrix(&(&s.q - &s.v * d))) / (2.0 * d);
            let chain = -s.v.dot(&(arm.mass_matrix(&s.q) * &vdot)) - 0.5 * s.v.dot(&(&m_dot * &s.v))
                + b.config.k_h() * b.grad_c(&arm, &s.q).dot(&s.v);
            assert!((chain - b.hdot(&arm, &s, &u)).abs() < 1e-5);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let vb = VelocityBound::new(1.0).unwrap();
        assert!(BarrierConfig::new(0.0, 0.1, Kappa::Cubic, vb).is_err());
        assert!(BarrierConfig::new(0.25, -0.1, Kappa::Cubic, vb).is_err());
    }
}
