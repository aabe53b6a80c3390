//! Position constraint `c(q) ≥ 0`, velocity bound `‖v‖² ≤ v̄`, and the gain
//! calibration `k_h ≤ μ1·v̄ / (2·c̄)` that makes the barrier's zero
//! super-level set imply both.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::MechanicalModel;
use crate::kinematics::Kinematics;

/// Safety margin applied to the sampled inertia lower bound.
pub const MU1_MARGIN: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum ConstraintError {
    #[error("invalid constraint: {0}")]
    Invalid(String),
    #[error("no sample satisfies c(q) >= 0; the constraint set is empty under the sampler")]
    EmptyConstraintSet,
    #[error("invalid sampler: {0}")]
    InvalidSampler(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintSpace {
    Joint,
    Task,
}

/// `c(q) = 1 − (p − x0)ᵀ P (p − x0)` with `p = f(q)` in task space or `p = q`
/// in joint space.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSpec {
    center: DVector<f64>,
    shape: DMatrix<f64>,
    space: ConstraintSpace,
}

impl EllipsoidSpec {
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>, space: ConstraintSpace) -> Result<Self, ConstraintError> {
        let d = center.len();
        if d == 0 {
            return Err(ConstraintError::Invalid("center must be non-empty".into()));
        }
        if shape.nrows() != d || shape.ncols() != d {
            return Err(ConstraintError::Invalid(format!(
                "shape matrix is {}x{}, expected {d}x{d}",
                shape.nrows(),
                shape.ncols()
            )));
        }
        if center.iter().chain(shape.iter()).any(|x| !x.is_finite()) {
            return Err(ConstraintError::Invalid("non-finite entry".into()));
        }
        if shape != shape.transpose() {
            return Err(ConstraintError::Invalid("shape matrix must be symmetric".into()));
        }
        if shape.clone().cholesky().is_none() {
            return Err(ConstraintError::Invalid("shape matrix must be positive definite".into()));
        }
        Ok(Self { center, shape, space })
    }

    pub fn diagonal(center: &[f64], diag: &[f64], space: ConstraintSpace) -> Result<Self, ConstraintError> {
        if center.len() != diag.len() {
            return Err(ConstraintError::Invalid("center and diagonal lengths differ".into()));
        }
        Self::new(
            DVector::from_column_slice(center),
            DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
            space,
        )
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    pub fn space(&self) -> ConstraintSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn point<K: Kinematics + ?Sized>(&self, model: &K, q: &DVector<f64>) -> DVector<f64> {
        match self.space {
            ConstraintSpace::Joint => q.clone(),
            ConstraintSpace::Task => model.forward_kinematics(q).0,
        }
    }

    pub fn c_value<K: Kinematics + ?Sized>(&self, model: &K, q: &DVector<f64>) -> f64 {
        let e = self.point(model, q) - &self.center;
        1.0 - e.dot(&(&self.shape * &e))
    }

    /// `∇c = −2 Jᵀ P (f(q) − x0)` (task) or `−2 P (q − x0)` (joint).
    pub fn grad_c<K: Kinematics + ?Sized>(&self, model: &K, q: &DVector<f64>) -> DVector<f64> {
        let e = self.point(model, q) - &self.center;
        let pe = &self.shape * e * -2.0;
        match self.space {
            ConstraintSpace::Joint => pe,
            ConstraintSpace::Task => model.jacobian(q).transpose() * pe,
        }
    }

    /// Checks that the ellipsoid's dimension fits `model`.
    pub fn check_compatible<K: Kinematics + MechanicalModel + ?Sized>(&self, model: &K) -> Result<(), ConstraintError> {
        let expected = match self.space {
            ConstraintSpace::Joint => model.dof(),
            ConstraintSpace::Task => model.task_dim(),
        };
        if self.dim() != expected {
            return Err(ConstraintError::Invalid(format!(
                "{:?}-space ellipsoid has dimension {}, model {} expects {expected}",
                self.space,
                self.dim(),
                model.name()
            )));
        }
        Ok(())
    }
}

/// Upper bound `v̄` on `‖v‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityBound(f64);

impl VelocityBound {
    pub fn new(v_bar: f64) -> Result<Self, ConstraintError> {
        if v_bar.is_finite() && v_bar > 0.0 {
            Ok(Self(v_bar))
        } else {
            Err(ConstraintError::Invalid(format!("velocity bound must be > 0, got {v_bar}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn contains(self, v: &DVector<f64>) -> bool {
        v.norm_squared() <= self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleScheme {
    /// Seeded uniform draws over the box.
    Uniform { count: usize, seed: u64 },
    /// Tensor grid with `per_axis` points per joint, endpoints included.
    Grid { per_axis: usize },
}

/// Deterministic sampler over a joint-space box.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSampler {
    lower: Vec<f64>,
    upper: Vec<f64>,
    scheme: SampleScheme,
}

impl JointSampler {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, scheme: SampleScheme) -> Result<Self, ConstraintError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(ConstraintError::InvalidSampler("box bounds must be non-empty and of equal length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
            return Err(ConstraintError::InvalidSampler("box bounds must be finite with lower <= upper".into()));
        }
        match scheme {
            SampleScheme::Uniform { count: 0, .. } | SampleScheme::Grid { per_axis: 0 } => {
                return Err(ConstraintError::InvalidSampler("sample count must be positive".into()))
            }
            _ => {}
        }
        Ok(Self { lower, upper, scheme })
    }

    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>, count: usize, seed: u64) -> Result<Self, ConstraintError> {
        Self::new(lower, upper, SampleScheme::Uniform { count, seed })
    }

    pub fn grid(lower: Vec<f64>, upper: Vec<f64>, per_axis: usize) -> Result<Self, ConstraintError> {
        Self::new(lower, upper, SampleScheme::Grid { per_axis })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clamp(&self, q: &mut DVector<f64>) {
        for (i, x) in q.iter_mut().enumerate() {
            *x = x.clamp(self.lower[i], self.upper[i]);
        }
    }

    pub fn points(&self) -> Vec<DVector<f64>> {
        let n = self.dim();
        match self.scheme {
            SampleScheme::Uniform { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| {
                        DVector::from_iterator(
                            n,
                            (0..n).map(|i| {
                                if self.lower[i] == self.upper[i] {
                                    self.lower[i]
                                } else {
                                    rng.gen_range(self.lower[i]..self.upper[i])
                                }
                            }),
                        )
                    })
                    .collect()
            }
            SampleScheme::Grid { per_axis } => {
                let axis = |i: usize, k: usize| {
                    if per_axis == 1 {
                        0.5 * (self.lower[i] + self.upper[i])
                    } else {
                        self.lower[i] + (self.upper[i] - self.lower[i]) * k as f64 / (per_axis - 1) as f64
                    }
                };
                let total = per_axis.pow(n as u32);
                (0..total)
                    .map(|mut idx| {
                        DVector::from_iterator(
                            n,
                            (0..n).map(|i| {
                                let k = idx % per_axis;
                                idx /= per_axis;
                                axis(i, k)
                            }),
                        )
                    })
                    .collect()
            }
        }
    }
}

/// Upper bound `c̄` on `max c(q)` over the constraint set.
///
/// The best sample is polished with projected gradient ascent; since an
/// ellipsoidal `c` never exceeds 1, results within `1e-9` of it snap to 1.
pub fn estimate_cbar<K: Kinematics + ?Sized>(
    spec: &EllipsoidSpec,
    model: &K,
    sampler: &JointSampler,
) -> Result<f64, ConstraintError> {
    let best = sampler
        .points()
        .into_iter()
        .map(|q| (spec.c_value(model, &q), q))
        .filter(|(c, _)| *c >= 0.0)
        .max_by(|a, b| a.0.total_cmp(&b.0));
    let (mut c_best, mut q) = best.ok_or(ConstraintError::EmptyConstraintSet)?;

    let mut step = 0.1;
    for _ in 0..2000 {
        let g = spec.grad_c(model, &q);
        if g.norm() < 1e-14 || step < 1e-16 {
            break;
        }
        let mut trial = &q + &g * step;
        sampler.clamp(&mut trial);
        let c_trial = spec.c_value(model, &trial);
        if c_trial > c_best {
            c_best = c_trial;
            q = trial;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    if c_best >= 1.0 - 1e-9 {
        Ok(1.0)
    } else {
        Ok(c_best.min(1.0))
    }
}

/// Lower bound `μ1` on the spectrum of `M(q)`, shrunk by [`MU1_MARGIN`].
pub fn estimate_mu1<M: MechanicalModel + ?Sized>(model: &M, sampler: &JointSampler) -> f64 {
    let min_eig = sampler
        .points()
        .iter()
        .map(|q| model.mass_matrix(q).symmetric_eigenvalues().min())
        .fold(f64::INFINITY, f64::min);
    (1.0 - MU1_MARGIN) * min_eig
}

/// Largest barrier gain for which `h ≥ 0` implies `‖v‖² ≤ v̄`.
pub fn max_kh(mu1: f64, v_bar: f64, c_bar: f64) -> f64 {
    debug_assert!(mu1 > 0.0 && v_bar > 0.0 && c_bar > 0.0);
    mu1 * v_bar / (2.0 * c_bar)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainCalibration {
    pub mu1: f64,
    pub c_bar: f64,
    pub v_bar: f64,
    pub kh_max: f64,
    pub kh: f64,
}

impl GainCalibration {
    pub fn run<R: Kinematics + MechanicalModel + ?Sized>(
        model: &R,
        spec: &EllipsoidSpec,
        v_bar: VelocityBound,
        kh: f64,
        sampler: &JointSampler,
    ) -> Result<Self, ConstraintError> {
        let c_bar = estimate_cbar(spec, model, sampler)?;
        let mu1 = estimate_mu1(model, sampler);
        if mu1.is_nan() || mu1 <= 0.0 {
            return Err(ConstraintError::Invalid(format!("sampled inertia bound is not positive: {mu1}")));
        }
        Ok(Self {
            mu1,
            c_bar,
            v_bar: v_bar.get(),
            kh_max: max_kh(mu1, v_bar.get(), c_bar),
            kh,
        })
    }

    pub fn admissible(&self) -> bool {
        self.kh > 0.0 && self.kh <= self.kh_max
    }

    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("mu1", format!("{:.17e}", self.mu1)),
            ("c_bar", format!("{:.17e}", self.c_bar)),
            ("v_bar", format!("{:.17e}", self.v_bar)),
            ("kh_max", format!("{:.17e}", self.kh_max)),
            ("kh", format!("{:.17e}", self.kh)),
            ("admissible", self.admissible().to_string()),
        ]
    }
}

impl fmt::Display for GainCalibration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "inertia lower bound  mu1    = {:.6}", self.mu1)?;
        writeln!(f, "constraint maximum   c_bar  = {:.6}", self.c_bar)?;
        writeln!(f, "velocity bound       v_bar  = {:.6}", self.v_bar)?;
        writeln!(f, "admissible gain      kh_max = {:.6}", self.kh_max)?;
        write!(
            f,
            "configured gain      kh     = {:.6} ({})",
            self.kh,
            if self.admissible() { "admissible" } else { "NOT admissible" }
        )
    }
}
