//! Forward kinematics and linear Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{MechanicalModel, PointMassModel, TwoLinkArmModel};

/// End-effector position in task space.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPoint(pub DVector<f64>);

impl TaskPoint {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

pub trait Kinematics {
    fn task_dim(&self) -> usize;

    fn forward_kinematics(&self, q: &DVector<f64>) -> TaskPoint;

    /// `J(q) = ∂f/∂q`, a `task_dim × dof` matrix.
    fn jacobian(&self, q: &DVector<f64>) -> DMatrix<f64>;
}

/// A model with both dynamics and a task-space map.
pub trait Robot: MechanicalModel + Kinematics {}

impl<T: MechanicalModel + Kinematics> Robot for T {}

// The point mass lives directly in task space.
impl Kinematics for PointMassModel {
    fn task_dim(&self) -> usize {
        self.dof()
    }

    fn forward_kinematics(&self, q: &DVector<f64>) -> TaskPoint {
        TaskPoint(q.clone())
    }

    fn jacobian(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.dof(), self.dof())
    }
}

impl Kinematics for TwoLinkArmModel {
    fn task_dim(&self) -> usize {
        2
    }

    fn forward_kinematics(&self, q: &DVector<f64>) -> TaskPoint {
        let p = self.params();
        let a12 = q[0] + q[1];
        TaskPoint(DVector::from_column_slice(&[
            p.l1 * q[0].cos() + p.l2 * a12.cos(),
            p.l1 * q[0].sin() + p.l2 * a12.sin(),
        ]))
    }

    fn jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let p = self.params();
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        DMatrix::from_row_slice(
            2,
            2,
            &[
                -p.l1 * s1 - p.l2 * s12,
                -p.l2 * s12,
                p.l1 * c1 + p.l2 * c12,
                p.l2 * c12,
            ],
        )
    }
}
