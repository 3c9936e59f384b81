use std::collections::HashMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Configuration, ContactConfig, RobotModel};
use crate::error::{Error, Result};
use crate::thermal_ik::{descend, DescentOutcome, DescentSettings, EffortPotential, Objective, ThermalPotential, ThermalScene};

/// How the prediction horizon Δt is chosen at each re-evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum HorizonRule {
    Fixed { seconds: f64 },
    /// Half the smallest time constant among reweighted nodes; `fallback`
    /// when none is reweighted.
    HalfTimeConstant { fallback: f64 },
}

impl Default for HorizonRule {
    fn default() -> Self {
        HorizonRule::Fixed { seconds: 20.0 }
    }
}

/// A contact configuration the policy may select.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactOption {
    pub name: String,
    pub frames: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoveryMode {
    Switching,
    MinEffort,
}

impl std::fmt::Display for RecoveryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RecoveryMode::Switching => "switching",
            RecoveryMode::MinEffort => "min-effort",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryPolicy {
    /// Candidate contact configurations in declaration order.
    pub contacts: Vec<ContactConfig>,
    /// Index into `contacts` of the configuration held at `q_nominal`.
    pub nominal_contact: usize,
    pub q_nominal: Configuration,
    /// Recovery starts when any node exceeds this, °C.
    pub warning_threshold: f64,
    /// Recovery ends when every node is below this, °C.
    pub safe_threshold: f64,
    /// Nodes above this get the hot weight in `Q`, °C.
    pub reweight_threshold: f64,
    pub hot_weight: f64,
    pub nominal_weight: f64,
    pub horizon: HorizonRule,
    /// Duration of one transition through the nominal configuration, s.
    pub transition_duration: f64,
    /// Simulated-time budget after which recovery reports a timeout, s.
    pub time_budget: f64,
    pub descent: DescentSettings,
}

impl RecoveryPolicy {
    /// Policy with the default thresholds, weights and horizon. Every
    /// contact is anchored at `q_nominal`.
    pub fn new(
        model: &RobotModel,
        options: &[ContactOption],
        nominal_contact: &str,
        q_nominal: Configuration,
    ) -> Result<Self> {
        model.check_configuration(&q_nominal)?;
        let contacts = options
            .iter()
            .map(|o| Ok(ContactConfig::new(model, o.name.clone(), &o.frames)?.anchored_at(model, &q_nominal)))
            .collect::<Result<Vec<_>>>()?;
        let nominal_contact = contacts
            .iter()
            .position(|c| c.name == nominal_contact)
            .ok_or_else(|| Error::invalid(format!("nominal contact `{nominal_contact}` is not in the contact set")))?;
        let policy = Self {
            contacts,
            nominal_contact,
            q_nominal,
            warning_threshold: 75.0,
            safe_threshold: 70.0,
            reweight_threshold: 70.0,
            hot_weight: 1e3,
            nominal_weight: 1.0,
            horizon: HorizonRule::default(),
            transition_duration: 2.0,
            time_budget: 3600.0,
            descent: DescentSettings::default(),
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.contacts.is_empty() {
            return Err(Error::invalid("contact set is empty"));
        }
        if !(self.safe_threshold < self.warning_threshold) {
            return Err(Error::invalid(format!(
                "safe threshold {} must be below warning threshold {}",
                self.safe_threshold, self.warning_threshold
            )));
        }
        if !(self.hot_weight > 0.0 && self.nominal_weight > 0.0) {
            return Err(Error::invalid("cost weights must be positive"));
        }
        match self.horizon {
            HorizonRule::Fixed { seconds: h } | HorizonRule::HalfTimeConstant { fallback: h } if !(h > 0.0) => {
                return Err(Error::invalid(format!("horizon must be positive, got {h}")));
            }
            _ => {}
        }
        if !(self.transition_duration >= 0.0) || !(self.time_budget > 0.0) {
            return Err(Error::invalid("transition duration must be non-negative and time budget positive"));
        }
        self.descent.validate()
    }

    pub fn nominal(&self) -> &ContactConfig {
        &self.contacts[self.nominal_contact]
    }

    pub fn hot_mask(&self, temperatures: &[f64]) -> Vec<bool> {
        temperatures.iter().map(|&t| t > self.reweight_threshold).collect()
    }

    /// Prediction horizon for the current temperatures.
    pub fn horizon_for(&self, scene: &ThermalScene, temperatures: &[f64]) -> f64 {
        match self.horizon {
            HorizonRule::Fixed { seconds } => seconds,
            HorizonRule::HalfTimeConstant { fallback } => scene
                .nodes
                .iter()
                .zip(self.hot_mask(temperatures))
                .filter(|(_, hot)| *hot)
                .map(|(n, _)| n.params.rc_time_constant / 2.0)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
                .unwrap_or(fallback),
        }
    }
}

/// Diagonal of `Q`: the hot weight for nodes above the reweight threshold,
/// the nominal weight otherwise.
pub fn update_cost_matrix(policy: &RecoveryPolicy, temperatures: &[f64]) -> Vec<f64> {
    policy
        .hot_mask(temperatures)
        .into_iter()
        .map(|hot| if hot { policy.hot_weight } else { policy.nominal_weight })
        .collect()
}

/// Result of minimizing one contact configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactCandidate {
    pub contact: usize,
    pub q: Configuration,
    pub f: f64,
    /// Predicted node temperatures at the horizon.
    pub temperatures: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrategyChoice {
    pub contact: usize,
    pub q: Configuration,
    pub f: f64,
    /// Per-contact outcome in declaration order; `None` where the descent
    /// failed.
    pub candidates: Vec<Option<ContactCandidate>>,
}

impl StrategyChoice {
    pub fn chosen(&self) -> &ContactCandidate {
        self.candidates[self.contact].as_ref().expect("chosen candidate exists")
    }
}

/// Minimized configurations keyed by contact and hot-node pattern.
pub type StrategyCache = HashMap<(usize, Vec<bool>), Configuration>;

/// Nested argmin over contacts and configurations of `TᵀQT`.
///
/// `scene` carries the current temperatures, `Q` and horizon. Ties go to
/// the earlier contact in declaration order.
pub fn select_strategy(policy: &RecoveryPolicy, scene: &ThermalScene, model: &RobotModel) -> Result<StrategyChoice> {
    select_strategy_cached(policy, scene, model, None)
}

pub fn select_strategy_cached(
    policy: &RecoveryPolicy,
    scene: &ThermalScene,
    model: &RobotModel,
    mut cache: Option<&mut StrategyCache>,
) -> Result<StrategyChoice> {
    let objective = ThermalPotential::new(scene, model)?;
    let mask: Vec<bool> = scene.weights.iter().map(|&w| w >= policy.hot_weight).collect();
    let mut candidates = Vec::with_capacity(policy.contacts.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, contact) in policy.contacts.iter().enumerate() {
        let key = (i, mask.clone());
        let cached = cache.as_ref().and_then(|c| c.get(&key).cloned());
        let q = match cached {
            Some(q) => Some(q),
            None => match descend(&objective, &policy.q_nominal, contact, &policy.descent) {
                Ok(out) => {
                    if let Some(c) = cache.as_mut() {
                        c.insert(key, out.q.clone());
                    }
                    Some(out.q)
                }
                Err(_) => None,
            },
        };
        let candidate = q.and_then(|q| {
            let f = objective.value(&q, contact).ok()? * objective.report_scale();
            let temperatures = objective.temperatures(&q, contact).ok()?;
            Some(ContactCandidate {
                contact: i,
                q,
                f,
                temperatures,
            })
        });
        if let Some(c) = &candidate {
            if best.is_none_or(|(_, f)| c.f < f) {
                best = Some((i, c.f));
            }
        }
        candidates.push(candidate);
    }
    let (contact, f) = best.ok_or_else(|| Error::NoStrategy("every contact descent failed".into()))?;
    Ok(StrategyChoice {
        contact,
        q: candidates[contact].as_ref().expect("best exists").q.clone(),
        f,
        candidates,
    })
}

/// Thermally blind baseline: descent of `‖Γ(q)‖²` from `q0`.
pub fn min_effort_configuration(
    model: &RobotModel,
    q0: &Configuration,
    contact: &ContactConfig,
    settings: &DescentSettings,
) -> Result<DescentOutcome> {
    descend(&EffortPotential::new(model), q0, contact, settings)
}

/// Minimum-effort stance over every contact of the policy: the descent
/// result with the smallest `‖Γ‖²`, ties to declaration order.
pub fn min_effort_strategy(policy: &RecoveryPolicy, model: &RobotModel) -> Result<(usize, DescentOutcome)> {
    let mut best: Option<(usize, DescentOutcome)> = None;
    for (i, contact) in policy.contacts.iter().enumerate() {
        let Ok(out) = min_effort_configuration(model, &policy.q_nominal, contact, &policy.descent) else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, b)| out.f < b.f) {
            best = Some((i, out));
        }
    }
    best.ok_or_else(|| Error::NoStrategy("no contact admits a minimum-effort stance".into()))
}
