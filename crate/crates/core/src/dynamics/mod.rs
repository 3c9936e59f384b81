//! Floating-base statics of planar multi-limbed robots.

pub mod contact;
pub mod effort;
pub mod kinematics;
pub mod model;
pub mod statics;

use std::path::Path;

pub use contact::ContactConfig;
pub use effort::{actuator_efforts, effort_jacobian, lever_pair_map};
pub use kinematics::{potential_energy, Kinematics, Pose};
pub use model::{ConstraintKind, Configuration, DofBlock, JointKind, ModelDocument, RobotModel};
pub use statics::{
    actuation_selector, contact_jacobian, contact_nullspace, dyn_consistent_pinv, gravity_vector, mass_matrix,
    reaction_forces, static_torque, ConstrainedStatics, StaticsSolution,
};

use crate::error::Result;

/// Parse and validate a model description file.
pub fn load_model(path: &Path) -> Result<RobotModel> {
    RobotModel::load(path)
}
