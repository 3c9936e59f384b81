use nalgebra::{DMatrix, DVector};

use super::kinematics::{Kinematics, Pose};
use super::model::{Configuration, RobotModel};
use crate::error::{Error, Result};

/// A named set of active contact constraints.
///
/// Frames are resolved against a model at construction. Anchors fix the
/// world pose each frame must hold; they are optional because Jacobians and
/// projectors only need the frame list.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactConfig {
    pub name: String,
    pub frames: Vec<usize>,
    pub frame_names: Vec<String>,
    pub anchors: Option<Vec<Pose>>,
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

impl ContactConfig {
    pub fn new<S: AsRef<str>>(model: &RobotModel, name: impl Into<String>, frames: &[S]) -> Result<Self> {
        let mut idx = Vec::with_capacity(frames.len());
        for f in frames {
            let i = model
                .contact_index(f.as_ref())
                .ok_or_else(|| Error::UnknownFrame(f.as_ref().to_string()))?;
            if idx.contains(&i) {
                return Err(Error::invalid(format!("contact frame `{}` listed twice", f.as_ref())));
            }
            idx.push(i);
        }
        Ok(Self {
            name: name.into(),
            frame_names: frames.iter().map(|f| f.as_ref().to_string()).collect(),
            frames: idx,
            anchors: None,
        })
    }

    /// Contact set with no active frames.
    pub fn free(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            frames: Vec::new(),
            frame_names: Vec::new(),
            anchors: None,
        }
    }

    /// Anchor every frame at its pose in `q_ref`.
    pub fn anchored_at(mut self, model: &RobotModel, q_ref: &Configuration) -> Self {
        let kin = Kinematics::new(model, q_ref);
        self.anchors = Some(self.frames.iter().map(|&f| kin.frame_pose(model, f)).collect());
        self
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Stacked constraint row count.
    pub fn rows(&self, model: &RobotModel) -> usize {
        self.frames.iter().map(|&f| model.contacts[f].kind.rows()).sum()
    }

    pub fn jacobian_with(&self, model: &RobotModel, kin: &Kinematics) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.rows(model), model.dofs());
        let mut row = 0;
        for &f in &self.frames {
            let frame = &model.contacts[f];
            let point = kin.frame_pose(model, f).position;
            let full = kin.point_jacobian(model, frame.link, &point);
            let k = frame.kind.rows();
            jac.rows_mut(row, k).copy_from(&full.rows(0, k));
            row += k;
        }
        jac
    }

    /// Stacked pose error of every frame against its anchor. Zero-length
    /// when unanchored.
    pub fn residual_with(&self, model: &RobotModel, kin: &Kinematics) -> DVector<f64> {
        let Some(anchors) = &self.anchors else {
            return DVector::zeros(0);
        };
        let mut r = DVector::zeros(self.rows(model));
        let mut row = 0;
        for (&f, anchor) in self.frames.iter().zip(anchors) {
            let pose = kin.frame_pose(model, f);
            let d = pose.position - anchor.position;
            r[row] = d.x;
            r[row + 1] = d.y;
            if model.contacts[f].kind.rows() == 3 {
                r[row + 2] = wrap_angle(pose.angle - anchor.angle);
            }
            row += model.contacts[f].kind.rows();
        }
        r
    }

    pub fn residual(&self, model: &RobotModel, q: &Configuration) -> DVector<f64> {
        self.residual_with(model, &Kinematics::new(model, q))
    }

    /// Largest frame displacement from the anchors (m or rad).
    pub fn drift(&self, model: &RobotModel, q: &Configuration) -> f64 {
        crate::linalg::max_abs_vec(&self.residual(model, q))
    }

    /// Damped least-squares correction of `q` back onto the anchored
    /// contact manifold. Returns the restored configuration and its
    /// remaining drift.
    pub fn restore(&self, model: &RobotModel, q: &Configuration, tol: f64, max_iters: usize) -> (Configuration, f64) {
        self.restore_locked(model, q, tol, max_iters, &[])
    }

    /// [`ContactConfig::restore`] that leaves the coordinates in `locked`
    /// untouched.
    pub fn restore_locked(
        &self,
        model: &RobotModel,
        q: &Configuration,
        tol: f64,
        max_iters: usize,
        locked: &[usize],
    ) -> (Configuration, f64) {
        let mut q = q.clone();
        if self.anchors.is_none() || self.is_empty() {
            return (q, 0.0);
        }
        let damping = 1e-10;
        let mut drift = f64::INFINITY;
        for _ in 0..=max_iters {
            let kin = Kinematics::new(model, &q);
            let r = self.residual_with(model, &kin);
            drift = crate::linalg::max_abs_vec(&r);
            if drift <= tol {
                break;
            }
            let mut jac = self.jacobian_with(model, &kin);
            for &d in locked {
                jac.column_mut(d).fill(0.0);
            }
            let mut jjt = &jac * jac.transpose();
            for i in 0..jjt.nrows() {
                jjt[(i, i)] += damping;
            }
            let Some(chol) = jjt.cholesky() else { break };
            let step = jac.transpose() * chol.solve(&r);
            q -= step;
        }
        (q, drift)
    }
}
