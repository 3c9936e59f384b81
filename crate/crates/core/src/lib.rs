//! Actuator thermal modeling, contact-consistent thermal minimization and
//! contact-switching thermal recovery for floating-base robots.
//!
//! - [`thermal_core`]: effort-driven first-order node model.
//! - [`sysid`]: identification of node parameters from telemetry.
//! - [`dynamics`]: planar floating-base statics under contact constraints.
//! - [`thermal_ik`]: temperature potential and its projected descent.
//! - [`recovery`]: contact-switching recovery policy and plant simulator.

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod recovery;
pub mod sysid;
pub mod thermal_core;
pub mod thermal_ik;

pub use error::{Error, Result};
pub use thermal_core::{ThermalNodeState, ThermalParams};
