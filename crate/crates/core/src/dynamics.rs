//! Rigid-body models of the form
//!
//! ```text
//! M(q) v̇ + C(q, v) v + F v + g(q) = u + μ
//! ```
//!
//! Every model keeps `M` symmetric positive definite and satisfies the
//! skew-symmetry identity `vᵀ(Ṁ − 2C)v = 0`; the barrier derivation in
//! [`crate::barrier`] depends on both.

use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("mass matrix is not positive definite at q = {0:?}")]
    SingularMassMatrix(Vec<f64>),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
}

/// Generalized positions and velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: DVector<f64>,
    pub v: DVector<f64>,
}

impl JointState {
    pub fn new(q: DVector<f64>, v: DVector<f64>) -> Result<Self, DynamicsError> {
        if q.is_empty() {
            return Err(DynamicsError::InvalidParameter("state dimension must be >= 1".into()));
        }
        if q.len() != v.len() {
            return Err(DynamicsError::DimensionMismatch { expected: q.len(), got: v.len() });
        }
        if !q.iter().all(|x| x.is_finite()) {
            return Err(DynamicsError::NonFinite("q"));
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(DynamicsError::NonFinite("v"));
        }
        Ok(Self { q, v })
    }

    pub fn from_slices(q: &[f64], v: &[f64]) -> Result<Self, DynamicsError> {
        Self::new(DVector::from_column_slice(q), DVector::from_column_slice(v))
    }

    /// State at rest at `q`.
    pub fn at_rest(q: DVector<f64>) -> Result<Self, DynamicsError> {
        let n = q.len();
        Self::new(q, DVector::zeros(n))
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

/// Evaluators for the terms of the equations of motion.
pub trait MechanicalModel: Debug + Send + Sync {
    fn name(&self) -> &str;

    fn dof(&self) -> usize;

    /// Inertia matrix `M(q)`.
    fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64>;

    /// Coriolis/centrifugal matrix `C(q, v)` in Christoffel form.
    fn coriolis_matrix(&self, q: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64>;

    /// Generalized gravity `g(q) = ∂U/∂q`.
    fn gravity_vector(&self, q: &DVector<f64>) -> DVector<f64>;

    /// Constant damping matrix `F`.
    fn damping(&self) -> &DMatrix<f64>;

    /// Potential energy `U(q)` whose gradient is [`gravity_vector`](Self::gravity_vector).
    fn potential_energy(&self, q: &DVector<f64>) -> f64;

    fn kinetic_energy(&self, s: &JointState) -> f64 {
        0.5 * s.v.dot(&(self.mass_matrix(&s.q) * &s.v))
    }

    fn total_energy(&self, s: &JointState) -> f64 {
        self.kinetic_energy(s) + self.potential_energy(&s.q)
    }
}

/// Solves `M(q) a = −C v − F v − g + u + μ` for the acceleration `a`.
pub fn acceleration<M: MechanicalModel + ?Sized>(
    model: &M,
    s: &JointState,
    u: &DVector<f64>,
    mu: &DVector<f64>,
) -> Result<DVector<f64>, DynamicsError> {
    let n = model.dof();
    for len in [s.q.len(), s.v.len(), u.len(), mu.len()] {
        if len != n {
            return Err(DynamicsError::DimensionMismatch { expected: n, got: len });
        }
    }
    let rhs = -(model.coriolis_matrix(&s.q, &s.v) * &s.v) - model.damping() * &s.v
        - model.gravity_vector(&s.q)
        + u
        + mu;
    let chol = model
        .mass_matrix(&s.q)
        .cholesky()
        .ok_or_else(|| DynamicsError::SingularMassMatrix(s.q.iter().copied().collect()))?;
    Ok(chol.solve(&rhs))
}

/// Inverse dynamics `M a + C v + F v + g`, i.e. the torque that produces
/// acceleration `a` when no disturbance acts.
pub fn inverse_dynamics<M: MechanicalModel + ?Sized>(
    model: &M,
    s: &JointState,
    a: &DVector<f64>,
) -> DVector<f64> {
    model.mass_matrix(&s.q) * a
        + model.coriolis_matrix(&s.q, &s.v) * &s.v
        + model.damping() * &s.v
        + model.gravity_vector(&s.q)
}

fn diagonal_damping(damping: &[f64], n: usize) -> Result<DMatrix<f64>, DynamicsError> {
    if damping.len() != n {
        return Err(DynamicsError::DimensionMismatch { expected: n, got: damping.len() });
    }
    if damping.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(DynamicsError::InvalidParameter(
            "damping entries must be finite and non-negative".into(),
        ));
    }
    Ok(DMatrix::from_diagonal(&DVector::from_column_slice(damping)))
}

/// Point mass moving in `n` Cartesian directions: `M = m·I`, `C = 0`,
/// constant generalized gravity.
#[derive(Debug, Clone)]
pub struct PointMassModel {
    mass: f64,
    gravity: DVector<f64>,
    damping: DMatrix<f64>,
}

impl PointMassModel {
    pub fn new(mass: f64, damping: &[f64], gravity: &[f64]) -> Result<Self, DynamicsError> {
        let n = damping.len();
        if n == 0 {
            return Err(DynamicsError::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(DynamicsError::InvalidParameter(format!("mass must be > 0, got {mass}")));
        }
        if gravity.len() != n {
            return Err(DynamicsError::DimensionMismatch { expected: n, got: gravity.len() });
        }
        if gravity.iter().any(|x| !x.is_finite()) {
            return Err(DynamicsError::NonFinite("gravity"));
        }
        Ok(Self {
            mass,
            gravity: DVector::from_column_slice(gravity),
            damping: diagonal_damping(damping, n)?,
        })
    }

    /// Zero-gravity point mass with uniform damping.
    pub fn free(mass: f64, dim: usize, damping: f64) -> Result<Self, DynamicsError> {
        Self::new(mass, &vec![damping; dim], &vec![0.0; dim])
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

impl MechanicalModel for PointMassModel {
    fn name(&self) -> &str {
        "point_mass"
    }

    fn dof(&self) -> usize {
        self.gravity.len()
    }

    fn mass_matrix(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.dof(), self.dof()) * self.mass
    }

    fn coriolis_matrix(&self, _q: &DVector<f64>, _v: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.dof(), self.dof())
    }

    fn gravity_vector(&self, _q: &DVector<f64>) -> DVector<f64> {
        self.gravity.clone()
    }

    fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    fn potential_energy(&self, q: &DVector<f64>) -> f64 {
        self.gravity.dot(q)
    }
}

/// Physical parameters of a planar two-link arm with revolute joints.
///
/// `q = 0` points both links along +x; gravity acts along −y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoLinkParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub lc1: f64,
    pub lc2: f64,
    pub i1: f64,
    pub i2: f64,
    pub g0: f64,
    pub damping: [f64; 2],
}

impl Default for TwoLinkParams {
    fn default() -> Self {
        let (m, l) = (1.0, 0.5);
        Self {
            m1: m,
            m2: m,
            l1: l,
            l2: l,
            lc1: 0.5 * l,
            lc2: 0.5 * l,
            i1: m * l * l / 12.0,
            i2: m * l * l / 12.0,
            g0: 9.81,
            damping: [0.1, 0.1],
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoLinkArmModel {
    params: TwoLinkParams,
    damping: DMatrix<f64>,
}

impl TwoLinkArmModel {
    pub fn new(params: TwoLinkParams) -> Result<Self, DynamicsError> {
        let p = &params;
        let positive = [
            ("m1", p.m1),
            ("m2", p.m2),
            ("l1", p.l1),
            ("l2", p.l2),
            ("i1", p.i1),
            ("i2", p.i2),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(DynamicsError::InvalidParameter(format!("{key} must be > 0, got {value}")));
            }
        }
        for (key, value) in [("lc1", p.lc1), ("lc2", p.lc2), ("g0", p.g0)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(DynamicsError::InvalidParameter(format!("{key} must be >= 0, got {value}")));
            }
        }
        let damping = diagonal_damping(&p.damping, 2)?;
        Ok(Self { params, damping })
    }

    pub fn params(&self) -> &TwoLinkParams {
        &self.params
    }
}

impl Default for TwoLinkArmModel {
    fn default() -> Self {
        Self::new(TwoLinkParams::default()).expect("default parameters are valid")
    }
}

impl MechanicalModel for TwoLinkArmModel {
    fn name(&self) -> &str {
        "two_link"
    }

    fn dof(&self) -> usize {
        2
    }

    fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let p = &self.params;
        let c2 = q[1].cos();
        let m22 = p.m2 * p.lc2 * p.lc2 + p.i2;
        let m12 = m22 + p.m2 * p.l1 * p.lc2 * c2;
        let m11 = p.m1 * p.lc1 * p.lc1
            + p.i1
            + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * c2)
            + p.i2;
        DMatrix::from_row_slice(2, 2, &[m11, m12, m12, m22])
    }

    fn coriolis_matrix(&self, q: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64> {
        let p = &self.params;
        let b = -p.m2 * p.l1 * p.lc2 * q[1].sin();
        DMatrix::from_row_slice(2, 2, &[b * v[1], b * (v[0] + v[1]), -b * v[0], 0.0])
    }

    fn gravity_vector(&self, q: &DVector<f64>) -> DVector<f64> {
        let p = &self.params;
        let c1 = q[0].cos();
        let c12 = (q[0] + q[1]).cos();
        let g2 = p.m2 * p.lc2 * p.g0 * c12;
        DVector::from_column_slice(&[(p.m1 * p.lc1 + p.m2 * p.l1) * p.g0 * c1 + g2, g2])
    }

    fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    fn potential_energy(&self, q: &DVector<f64>) -> f64 {
        let p = &self.params;
        let s1 = q[0].sin();
        let s12 = (q[0] + q[1]).sin();
        p.g0 * (p.m1 * p.lc1 * s1 + p.m2 * (p.l1 * s1 + p.lc2 * s12))
    }
}
