//! Scenario files: strict JSON documents describing one closed-loop run,
//! the calibration box, verification tolerances and output paths.
//!
//! SI units throughout; angles in radians. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barrier::{BarrierConfig, EnergyBarrier, Kappa};
use crate::constraints::{ConstraintSpace, EllipsoidSpec, GainCalibration, JointSampler, SampleScheme, VelocityBound};
use crate::controller::{NominalController, SafeController};
use crate::dynamics::JointState;
use crate::simulate::{ControlMode, DisturbanceProfile, DisturbanceWindow, ModelSpec, Scenario};
use crate::verify::VerifyConfig;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("schema error: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintFile {
    pub space: ConstraintSpace,
    pub center: Vec<f64>,
    /// Row-major shape matrix.
    pub shape: Vec<Vec<f64>>,
}

impl Default for ConstraintFile {
    /// Desk-scale ellipse in the arm's task space.
    fn default() -> Self {
        Self {
            space: ConstraintSpace::Task,
            center: vec![0.43, -0.12],
            shape: vec![vec![1.78, 0.0], vec![0.0, 4.95]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierFile {
    pub k_h: f64,
    pub epsilon: f64,
    pub kappa: Kappa,
    pub v_bar: f64,
}

impl Default for BarrierFile {
    fn default() -> Self {
        Self { k_h: 0.25, epsilon: 0.1, kappa: Kappa::Cubic, v_bar: DEFAULT_V_BAR }
    }
}

/// Default squared-speed bound; large enough that `k_h = 0.25` is admissible
/// for the default arm over the full joint box.
pub const DEFAULT_V_BAR: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialFile {
    pub q: Vec<f64>,
    #[serde(default)]
    pub v: Option<Vec<f64>>,
}

/// Joint box and sample budget for the gain calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    #[serde(default)]
    pub lower: Option<Vec<f64>>,
    #[serde(default)]
    pub upper: Option<Vec<f64>>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    100_000
}

impl Default for CalibrationFile {
    fn default() -> Self {
        Self { lower: None, upper: None, samples: default_samples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesFile {
    /// Defaults to 5e-4 with stage-wise control and 5e-3 under zero-order hold.
    #[serde(default)]
    pub invariance: Option<f64>,
    #[serde(default = "default_small_tol")]
    pub velocity: f64,
    #[serde(default = "default_small_tol")]
    pub passivity: f64,
    #[serde(rename = "return", default = "default_small_tol")]
    pub return_tol: f64,
    #[serde(default = "default_window")]
    pub return_window: f64,
}

fn default_small_tol() -> f64 {
    1e-3
}

fn default_window() -> f64 {
    5.0
}

impl Default for TolerancesFile {
    fn default() -> Self {
        Self {
            invariance: None,
            velocity: default_small_tol(),
            passivity: default_small_tol(),
            return_tol: default_small_tol(),
            return_window: default_window(),
        }
    }
}

pub const INVARIANCE_TOL_STAGEWISE: f64 = 5e-4;
pub const INVARIANCE_TOL_ZOH: f64 = 5e-3;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    /// Trajectory CSV, relative to the scenario file.
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub model: ModelSpec,
    #[serde(default)]
    pub constraint: ConstraintFile,
    #[serde(default)]
    pub barrier: BarrierFile,
    #[serde(default)]
    pub mode: ControlMode,
    pub nominal: NominalController,
    #[serde(default)]
    pub disturbance: Vec<DisturbanceWindow>,
    pub initial: InitialFile,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub zoh: bool,
    #[serde(default)]
    pub calibration: CalibrationFile,
    #[serde(default)]
    pub tolerances: TolerancesFile,
    #[serde(default)]
    pub output: OutputFile,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_duration() -> f64 {
    10.0
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    pub fn constraint_spec(&self) -> Result<EllipsoidSpec, ScenarioError> {
        let c = &self.constraint;
        let d = c.center.len();
        if c.shape.len() != d || c.shape.iter().any(|row| row.len() != d) {
            return Err(ScenarioError::Invalid(format!("constraint.shape must be {d}x{d}")));
        }
        let shape = DMatrix::from_fn(d, d, |i, j| c.shape[i][j]);
        EllipsoidSpec::new(DVector::from_column_slice(&c.center), shape, c.space)
            .map_err(|e| ScenarioError::Invalid(format!("constraint: {e}")))
    }

    pub fn barrier(&self) -> Result<EnergyBarrier, ScenarioError> {
        let b = &self.barrier;
        let v_bar = VelocityBound::new(b.v_bar).map_err(|e| ScenarioError::Invalid(format!("barrier.v_bar: {e}")))?;
        let config = BarrierConfig::new(b.k_h, b.epsilon, b.kappa, v_bar)
            .map_err(|e| ScenarioError::Invalid(format!("barrier: {e}")))?;
        Ok(EnergyBarrier::new(self.constraint_spec()?, config))
    }

    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        let invalid = |e: String| ScenarioError::Invalid(e);
        let controller = SafeController::new(self.barrier()?, self.nominal.clone());
        let v = self.initial.v.clone().unwrap_or_else(|| vec![0.0; self.initial.q.len()]);
        let initial = JointState::from_slices(&self.initial.q, &v).map_err(|e| invalid(format!("initial: {e}")))?;
        let mut scn = Scenario::new(self.name.clone(), self.model.clone(), controller, initial)
            .map_err(|e| invalid(e.to_string()))?;
        scn.mode = self.mode;
        scn.disturbance = DisturbanceProfile::new(self.disturbance.clone(), scn.model.dof()).map_err(invalid)?;
        scn.dt = self.dt;
        scn.duration = self.duration;
        scn.seed = self.seed;
        scn.zoh = self.zoh;
        scn.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(scn)
    }

    /// Seeded uniform sampler over the calibration box; `[−π, π]ⁿ` by default.
    pub fn sampler(&self, dof: usize) -> Result<JointSampler, ScenarioError> {
        let pi = std::f64::consts::PI;
        let c = &self.calibration;
        let lower = c.lower.clone().unwrap_or_else(|| vec![-pi; dof]);
        let upper = c.upper.clone().unwrap_or_else(|| vec![pi; dof]);
        if lower.len() != dof || upper.len() != dof {
            return Err(ScenarioError::Invalid(format!("calibration box must have {dof} entries per bound")));
        }
        JointSampler::new(lower, upper, SampleScheme::Uniform { count: c.samples, seed: self.seed })
            .map_err(|e| ScenarioError::Invalid(format!("calibration: {e}")))
    }

    pub fn calibrate(&self) -> Result<GainCalibration, ScenarioError> {
        let scn = self.build()?;
        let sampler = self.sampler(scn.model.dof())?;
        let barrier = &scn.controller.barrier;
        GainCalibration::run(scn.model.as_ref(), &barrier.constraint, barrier.config.v_bar(), barrier.config.k_h(), &sampler)
            .map_err(|e| ScenarioError::Invalid(format!("calibration: {e}")))
    }

    pub fn verify_config(&self) -> VerifyConfig {
        let t = &self.tolerances;
        VerifyConfig {
            invariance_tol: t.invariance.unwrap_or(if self.zoh { INVARIANCE_TOL_ZOH } else { INVARIANCE_TOL_STAGEWISE }),
            velocity_tol: t.velocity,
            passivity_tol: t.passivity,
            return_tol: t.return_tol,
            return_window: t.return_window,
            v_bar: Some(self.barrier.v_bar),
        }
    }
}
