//! Energy-based barrier safety control for mechanical systems.
//!
//! The controller blends a nominal torque with the passive safe torque
//! `g(q) + k_h∇c(q)` according to the barrier `h = k_h·c(q) − ½vᵀM(q)v`.
//! It keeps the safe set forward invariant, is passive with respect to
//! external forces while outside it, and drives the state back once those
//! forces stop.

pub mod barrier;
pub mod cli;
pub mod constraints;
pub mod controller;
pub mod dynamics;
pub mod kinematics;
pub mod scenario;
pub mod simulate;
pub mod verify;

pub use barrier::{BarrierConfig, EnergyBarrier, Kappa};
pub use constraints::{ConstraintSpace, EllipsoidSpec, GainCalibration, JointSampler, VelocityBound};
pub use controller::{baseline_qp_control, ClassK, NominalController, Reference, SafeController};
pub use dynamics::{JointState, MechanicalModel, PointMassModel, TwoLinkArmModel, TwoLinkParams};
pub use kinematics::{Kinematics, Robot};
pub use scenario::ScenarioFile;
pub use simulate::{simulate, ControlMode, DisturbanceProfile, ModelSpec, Scenario, Trajectory};
pub use verify::{CheckReport, Verdict};
