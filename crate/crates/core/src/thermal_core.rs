//! Effort-based first-order thermal model of a single thermal node.
//!
//! A node (motor driver "bridge" or motor "core") obeys
//!
//! ```text
//! RC * dT/dt + T = F^2 * betaR - F * beta_biasR + T_offset
//! ```
//!
//! where `F` is the output effort of the actuator driving the node. The
//! offset is learned and already contains the ambient temperature, so every
//! temperature handled here is absolute (°C).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Lumped parameters of one thermal node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    /// Thermal time constant RC, seconds.
    #[serde(rename = "rc")]
    pub rc_time_constant: f64,
    /// Quadratic effort gain betaR, °C per effort-unit².
    pub beta_r: f64,
    /// Linear bias gain beta_bias*R, °C per effort-unit. May be negative.
    pub beta_bias_r: f64,
    /// Zero-effort steady temperature, °C (ambient plus bias heating).
    pub t_offset: f64,
}

impl ThermalParams {
    pub fn new(rc_time_constant: f64, beta_r: f64, beta_bias_r: f64, t_offset: f64) -> Result<Self> {
        let params = Self {
            rc_time_constant,
            beta_r,
            beta_bias_r,
            t_offset,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.rc_time_constant, "rc")?;
        ensure_finite(self.beta_r, "beta_r")?;
        ensure_finite(self.beta_bias_r, "beta_bias_r")?;
        ensure_finite(self.t_offset, "t_offset")?;
        if self.rc_time_constant <= 0.0 {
            return Err(Error::invalid(format!(
                "rc must be positive, got {}",
                self.rc_time_constant
            )));
        }
        if self.beta_r <= 0.0 {
            return Err(Error::invalid(format!(
                "beta_r must be positive, got {}",
                self.beta_r
            )));
        }
        Ok(())
    }

    /// Effort at which Joule heating is smallest.
    pub fn heating_vertex(&self) -> f64 {
        self.beta_bias_r / (2.0 * self.beta_r)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let params: Self = toml::from_str(text).map_err(|e| Error::schema(None, e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("plain float struct serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }
}

/// Current temperature of one modeled node.
///
/// A driver node and a core node may share one `actuator_id`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalNodeState {
    pub node_id: String,
    pub actuator_id: String,
    pub temperature: f64,
}

impl ThermalNodeState {
    pub fn new(node_id: impl Into<String>, actuator_id: impl Into<String>, temperature: f64) -> Result<Self> {
        ensure_finite(temperature, "node temperature")?;
        Ok(Self {
            node_id: node_id.into(),
            actuator_id: actuator_id.into(),
            temperature,
        })
    }
}

/// Effort-dependent forcing `F²·βR − F·β_bias·R` (offset excluded).
pub fn joule_heating(params: &ThermalParams, effort: f64) -> Result<f64> {
    ensure_finite(effort, "effort")?;
    Ok(heating_unchecked(params, effort))
}

#[inline]
fn heating_unchecked(params: &ThermalParams, effort: f64) -> f64 {
    effort * effort * params.beta_r - effort * params.beta_bias_r
}

/// Temperature the node settles to under a constant effort.
pub fn steady_state_temperature(params: &ThermalParams, effort: f64) -> Result<f64> {
    Ok(joule_heating(params, effort)? + params.t_offset)
}

/// Closed-form temperature after holding `effort` for `dt` seconds.
pub fn predict_temperature(params: &ThermalParams, t0: f64, effort: f64, dt: f64) -> Result<f64> {
    ensure_finite(t0, "initial temperature")?;
    ensure_finite(dt, "dt")?;
    if dt < 0.0 {
        return Err(Error::invalid(format!("dt must be non-negative, got {dt}")));
    }
    let steady = steady_state_temperature(params, effort)?;
    if dt == 0.0 {
        return Ok(t0);
    }
    let decay = (-dt / params.rc_time_constant).exp();
    Ok(t0 * decay + steady * (1.0 - decay))
}

/// One explicit Euler step of the node ODE.
pub fn step_euler(params: &ThermalParams, t: f64, effort: f64, dt: f64) -> Result<f64> {
    ensure_finite(t, "temperature")?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let steady = steady_state_temperature(params, effort)?;
    Ok(t + dt * (steady - t) / params.rc_time_constant)
}
