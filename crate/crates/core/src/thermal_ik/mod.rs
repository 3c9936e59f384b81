//! Temperature potential over configurations and its contact-consistent
//! gradient descent.

pub mod descent;
pub mod scene;

pub use descent::{
    descend, gradient_nullspace_basis, gradient_projected, nullspace_basis, DescentOutcome, DescentSettings,
    EffortPotential, GradientMode, Objective, Termination, ThermalPotential, TraceEntry,
};
pub use scene::{potential, predict_node_temperatures, SceneDocument, SceneNode, SceneNodeDoc, ThermalScene};
