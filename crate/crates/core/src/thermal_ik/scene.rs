use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Configuration, ContactConfig, RobotModel, StaticsSolution};
use crate::error::{Error, Result};
use crate::thermal_core::{predict_temperature, ThermalParams};

/// One thermal node of a scene.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneNode {
    pub id: String,
    pub actuator: String,
    pub params: ThermalParams,
    /// Temperature at the start of the horizon, °C.
    pub initial_temperature: f64,
}

/// Nodes, their current temperatures, the diagonal cost `Q` and the
/// prediction horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalScene {
    pub nodes: Vec<SceneNode>,
    /// Diagonal of `Q`, one entry per node.
    pub weights: Vec<f64>,
    /// Prediction horizon Δt, seconds.
    pub horizon: f64,
}

impl ThermalScene {
    pub fn new(nodes: Vec<SceneNode>, weights: Vec<f64>, horizon: f64) -> Result<Self> {
        let scene = Self {
            nodes,
            weights,
            horizon,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.nodes.len() {
            return Err(Error::invalid(format!(
                "{} cost weights for {} nodes",
                self.weights.len(),
                self.nodes.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid(format!("cost weights must be finite and non-negative, got {w}")));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        for node in &self.nodes {
            node.params.validate()?;
            if !node.initial_temperature.is_finite() {
                return Err(Error::invalid(format!("node `{}` has a non-finite temperature", node.id)));
            }
        }
        Ok(())
    }

    pub fn node_ids(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }

    pub fn temperatures(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.initial_temperature).collect()
    }

    pub fn set_temperatures(&mut self, temps: &[f64]) {
        for (node, &t) in self.nodes.iter_mut().zip(temps) {
            node.initial_temperature = t;
        }
    }

    /// Effort-vector index of each node's actuator.
    pub fn bind(&self, model: &RobotModel) -> Result<Vec<usize>> {
        let ids = model.actuator_ids();
        self.nodes
            .iter()
            .map(|n| {
                ids.iter().position(|a| *a == n.actuator).ok_or_else(|| {
                    Error::invalid(format!("node `{}` is bound to unknown actuator `{}`", n.id, n.actuator))
                })
            })
            .collect()
    }

    /// Temperatures after holding `efforts` for the horizon.
    pub fn predict_from_efforts(&self, binding: &[usize], efforts: &DVector<f64>) -> Result<DVector<f64>> {
        let mut temps = DVector::zeros(self.nodes.len());
        for (i, (node, &a)) in self.nodes.iter().zip(binding).enumerate() {
            temps[i] = predict_temperature(&node.params, node.initial_temperature, efforts[a], self.horizon)?;
        }
        Ok(temps)
    }

    pub fn quadratic(&self, temps: &DVector<f64>) -> f64 {
        temps.iter().zip(&self.weights).map(|(t, w)| w * t * t).sum()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: SceneDocument = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        doc.into_scene(path.parent().unwrap_or(Path::new(".")))
    }
}

/// Node parameters given inline or as a path to a parameter file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsSource {
    Inline(ThermalParams),
    File(PathBuf),
}

impl ParamsSource {
    pub fn resolve(&self, base: &Path) -> Result<ThermalParams> {
        match self {
            ParamsSource::Inline(p) => {
                p.validate()?;
                Ok(*p)
            }
            ParamsSource::File(f) => ThermalParams::load(&base.join(f)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneNodeDoc {
    pub id: String,
    pub actuator: String,
    pub params: ParamsSource,
    pub initial_temperature: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub horizon: f64,
    pub nodes: Vec<SceneNodeDoc>,
}

impl SceneDocument {
    pub fn into_scene(self, base: &Path) -> Result<ThermalScene> {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let mut weights = Vec::with_capacity(self.nodes.len());
        for n in self.nodes {
            nodes.push(SceneNode {
                params: n.params.resolve(base)?,
                id: n.id,
                actuator: n.actuator,
                initial_temperature: n.initial_temperature,
            });
            weights.push(n.weight);
        }
        ThermalScene::new(nodes, weights, self.horizon)
    }
}

/// Predicted node temperatures after the horizon when the robot holds `q`
/// under `contact`.
pub fn predict_node_temperatures(
    scene: &ThermalScene,
    model: &RobotModel,
    q: &Configuration,
    contact: &ContactConfig,
) -> Result<DVector<f64>> {
    let binding = scene.bind(model)?;
    let statics = StaticsSolution::solve(model, q, contact)?;
    scene.predict_from_efforts(&binding, &statics.efforts)
}

/// Temperature potential `f(q) = TᵀQT`.
pub fn potential(scene: &ThermalScene, model: &RobotModel, q: &Configuration, contact: &ContactConfig) -> Result<f64> {
    Ok(scene.quadratic(&predict_node_temperatures(scene, model, q, contact)?))
}
