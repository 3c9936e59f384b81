//! Scenario files: model reference, thermal nodes, policy, limb groups and
//! an optional telemetry-generation schedule.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::policy::{ContactOption, HorizonRule, RecoveryMode, RecoveryPolicy};
use super::run::{LimbGroup, RecoverySetup};
use crate::dynamics::{ContactConfig, RobotModel, StaticsSolution};
use crate::error::{Error, Result};
use crate::sysid::synth::{sample_schedule, synthesize, SynthNode};
use crate::sysid::TelemetryLog;
use crate::thermal_ik::{DescentSettings, SceneNodeDoc, ThermalScene};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyDoc {
    pub warning_threshold: f64,
    pub safe_threshold: f64,
    pub reweight_threshold: Option<f64>,
    pub hot_weight: f64,
    pub nominal_weight: f64,
    pub horizon: HorizonRule,
    pub transition_duration: f64,
    pub time_budget: f64,
}

impl Default for PolicyDoc {
    fn default() -> Self {
        Self {
            warning_threshold: 75.0,
            safe_threshold: 70.0,
            reweight_threshold: None,
            hot_weight: 1e3,
            nominal_weight: 1.0,
            horizon: HorizonRule::default(),
            transition_duration: 2.0,
            time_budget: 3600.0,
        }
    }
}

/// Squat-stand telemetry schedule over the nominal contact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetryDoc {
    /// Total length, s.
    pub duration: f64,
    #[serde(default = "default_rate")]
    pub sample_rate: f64,
    #[serde(default = "default_ambient")]
    pub ambient: f64,
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
    /// One stand + squat cycle, s.
    #[serde(default = "default_period")]
    pub period: f64,
    pub stand: Vec<f64>,
    /// Squat poses cycled in order; distinct depths keep the effort
    /// columns of the regression independent.
    pub squats: Vec<Vec<f64>>,
}

fn default_rate() -> f64 {
    10.0
}
fn default_ambient() -> f64 {
    25.0
}
fn default_noise() -> f64 {
    0.1
}
fn default_period() -> f64 {
    270.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    /// Model file, relative to the scenario file.
    pub model: PathBuf,
    #[serde(default = "default_mode")]
    pub mode: RecoveryMode,
    pub nominal_configuration: Vec<f64>,
    pub nominal_contact: String,
    /// Plant step, s; defaults to `min RC / 100`.
    pub plant_step: Option<f64>,
    #[serde(default)]
    pub policy: PolicyDoc,
    #[serde(default)]
    pub descent: DescentSettings,
    pub contacts: Vec<ContactOption>,
    #[serde(default)]
    pub groups: Vec<LimbGroup>,
    pub nodes: Vec<SceneNodeDoc>,
    pub telemetry: Option<TelemetryDoc>,
}

fn default_mode() -> RecoveryMode {
    RecoveryMode::Switching
}

/// A loaded scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub setup: RecoverySetup,
    pub mode: RecoveryMode,
    pub telemetry: Option<TelemetryDoc>,
    pub model_path: PathBuf,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: ScenarioDocument = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_document(doc, base, None)
    }

    /// Build from a parsed document; `model` overrides the referenced file.
    pub fn from_document(doc: ScenarioDocument, base: &Path, model: Option<&Path>) -> Result<Self> {
        let model_path = model.map(Path::to_path_buf).unwrap_or_else(|| base.join(&doc.model));
        let model = RobotModel::load(&model_path)?;
        let scene = crate::thermal_ik::SceneDocument {
            horizon: doc.policy.horizon_seconds(),
            nodes: doc.nodes,
        }
        .into_scene(base)?;
        let q_nominal = DVector::from_vec(doc.nominal_configuration);
        let mut policy = RecoveryPolicy::new(&model, &doc.contacts, &doc.nominal_contact, q_nominal)?;
        let p = doc.policy;
        policy.warning_threshold = p.warning_threshold;
        policy.safe_threshold = p.safe_threshold;
        policy.reweight_threshold = p.reweight_threshold.unwrap_or(p.safe_threshold);
        policy.hot_weight = p.hot_weight;
        policy.nominal_weight = p.nominal_weight;
        policy.horizon = p.horizon;
        policy.transition_duration = p.transition_duration;
        policy.time_budget = p.time_budget;
        policy.descent = doc.descent;
        let setup = RecoverySetup {
            model,
            scene,
            policy,
            groups: doc.groups,
            plant_step: doc.plant_step,
        };
        setup.validate()?;
        Ok(Self {
            setup,
            mode: doc.mode,
            telemetry: doc.telemetry,
            model_path,
        })
    }

    /// Simulated squat-stand telemetry of every scene node. Efforts are
    /// the static efforts of each pose under the nominal contact frames.
    pub fn generate_telemetry(&self, seed: u64) -> Result<TelemetryLog> {
        let spec = self
            .telemetry
            .as_ref()
            .ok_or_else(|| Error::invalid("scenario has no [telemetry] section"))?;
        let setup = &self.setup;
        let model = &setup.model;
        if spec.squats.is_empty() {
            return Err(Error::invalid("telemetry needs at least one squat pose"));
        }
        let frames = setup.policy.nominal().frame_names.clone();
        let contact = ContactConfig::new(model, "telemetry", &frames)?;
        let efforts_at = |pose: &[f64]| -> Result<Vec<f64>> {
            let q = DVector::from_column_slice(pose);
            Ok(StaticsSolution::solve(model, &q, &contact)?.efforts.iter().copied().collect())
        };
        let stand = efforts_at(&spec.stand)?;
        let squats = spec.squats.iter().map(|p| efforts_at(p)).collect::<Result<Vec<_>>>()?;
        let n = (spec.duration * spec.sample_rate).round().max(0.0) as usize;
        let actuators = model.actuator_ids();
        let mut series = Vec::with_capacity(actuators.len());
        for a in 0..actuators.len() {
            let squat_levels: Vec<f64> = squats.iter().map(|s| s[a]).collect();
            let schedule = crate::sysid::synth::squat_stand_schedule(spec.duration, spec.period, stand[a], &squat_levels)?;
            series.push(sample_schedule(&schedule, spec.sample_rate, n));
        }
        let binding = setup.scene.bind(model)?;
        let nodes: Vec<SynthNode> = setup
            .scene
            .nodes
            .iter()
            .zip(binding)
            .map(|(node, a)| SynthNode {
                id: node.id.clone(),
                actuator: a,
                params: node.params,
                initial_temperature: spec.ambient,
            })
            .collect();
        synthesize(&nodes, actuators, series, spec.ambient, spec.sample_rate, spec.noise_sigma, seed)
    }
}

impl PolicyDoc {
    fn horizon_seconds(&self) -> f64 {
        match self.horizon {
            HorizonRule::Fixed { seconds } => seconds,
            HorizonRule::HalfTimeConstant { fallback } => fallback,
        }
    }
}

/// Scene over the setup's nodes with explicit temperatures, weights and horizon.
pub fn scene_with(setup: &RecoverySetup, temperatures: &[f64], weights: Vec<f64>, horizon: f64) -> ThermalScene {
    let mut scene = setup.scene.clone();
    scene.set_temperatures(temperatures);
    scene.weights = weights;
    scene.horizon = horizon;
    scene
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixtures() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
    }

    fn document() -> ScenarioDocument {
        toml::from_str(&std::fs::read_to_string(fixtures().join("hot_right_leg.toml")).unwrap()).unwrap()
    }

    #[test]
    fn reweight_threshold_defaults_to_safe() {
        let mut doc = document();
        doc.policy.reweight_threshold = None;
        let s = Scenario::from_document(doc, &fixtures(), None).unwrap();
        assert_eq!(s.setup.policy.reweight_threshold, 70.0);
    }

    #[test]
    fn unknown_nominal_contact_is_rejected() {
        let mut doc = document();
        doc.nominal_contact = "hands".into();
        assert!(Scenario::from_document(doc, &fixtures(), None).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = std::fs::read_to_string(fixtures().join("hot_right_leg.toml")).unwrap();
        let text = text.replacen("mode = \"switching\"", "mode = \"switching\"\nspeed = 2", 1);
        assert!(toml::from_str::<ScenarioDocument>(&text).is_err());
    }

    #[test]
    fn telemetry_is_seed_deterministic() {
        let mut s = Scenario::load(&fixtures().join("hot_right_leg.toml")).unwrap();
        s.telemetry.as_mut().unwrap().duration = 60.0;
        let a = s.generate_telemetry(3).unwrap();
        let b = s.generate_telemetry(3).unwrap();
        let c = s.generate_telemetry(4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 600);
        assert_eq!(a.temperatures.len(), 6);
    }

    #[test]
    fn missing_telemetry_section() {
        let mut s = Scenario::load(&fixtures().join("hot_right_leg.toml")).unwrap();
        s.telemetry = None;
        assert!(s.generate_telemetry(0).is_err());
    }
}
