//! Joint torque to actuator effort mapping `F_act = J_γ(q) Γ`.
//!
//! Plain revolute actuators map one-to-one. A lever pair drives a (pitch,
//! roll) joint pair with two linear pushrods:
//!
//! ```text
//! [τ_pitch]   [r·cos(pitch)  r·cos(pitch)] [F_a]
//! [τ_roll ] = [d             −d          ] [F_b]
//! ```
//!
//! with lever arm `r` and pushrod separation `d`; efforts invert this map.

use nalgebra::{DMatrix, DVector, Matrix2};

use super::model::{ActuatorMap, Configuration, RobotModel};
use crate::error::{Error, Result};

/// Determinants below this magnitude are singular.
const SINGULAR_DET: f64 = 1e-9;

/// Torque-from-force matrix of a lever pair at the given pitch angle.
pub fn lever_pair_map(pitch: f64, lever_arm: f64, separation: f64) -> Matrix2<f64> {
    let c = pitch.cos();
    Matrix2::new(lever_arm * c, lever_arm * c, separation, -separation)
}

/// `J_γ(q)`: actuator efforts per unit actuated torque (efforts × m).
pub fn effort_jacobian(model: &RobotModel, q: &Configuration) -> Result<DMatrix<f64>> {
    let ids = model.actuator_ids();
    let m = model.actuated_dofs();
    let base = model.base_dofs;
    let mut map = DMatrix::zeros(ids.len(), m);
    let mut row = 0;
    for act in &model.actuators {
        match act {
            ActuatorMap::Direct { joint, .. } => {
                let d = model.joints[*joint].dof.expect("revolute");
                map[(row, d - base)] = 1.0;
                row += 1;
            }
            ActuatorMap::LeverPair {
                pitch,
                roll,
                lever_arm,
                separation,
                ..
            } => {
                let dp = model.joints[*pitch].dof.expect("revolute");
                let dr = model.joints[*roll].dof.expect("revolute");
                let forward = lever_pair_map(q[dp], *lever_arm, *separation);
                if forward.determinant().abs() < SINGULAR_DET {
                    return Err(Error::Singularity {
                        joint: model.joints[*pitch].name.clone(),
                    });
                }
                let inv = forward.try_inverse().ok_or_else(|| Error::Singularity {
                    joint: model.joints[*pitch].name.clone(),
                })?;
                for r in 0..2 {
                    map[(row + r, dp - base)] = inv[(r, 0)];
                    map[(row + r, dr - base)] = inv[(r, 1)];
                }
                row += 2;
            }
        }
    }
    Ok(map)
}

/// Per-actuator output efforts for actuated torque `torque`.
pub fn actuator_efforts(model: &RobotModel, q: &Configuration, torque: &DVector<f64>) -> Result<DVector<f64>> {
    if torque.len() != model.actuated_dofs() {
        return Err(Error::invalid(format!(
            "torque has {} entries, model has {} actuated dofs",
            torque.len(),
            model.actuated_dofs()
        )));
    }
    Ok(effort_jacobian(model, q)? * torque)
}
