use std::path::Path;

use actuator_thermal::recovery::{HorizonRule, Scenario};
use actuator_thermal::sysid::FitConfig;
use actuator_thermal::thermal_ik::DescentSettings;
use actuator_thermal::Error;
use serde::{Deserialize, Serialize};

/// Settings overrides read from `--config`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fit: FitConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descent: Option<DescentSettings>,
    pub telemetry: TelemetryOverrides,
    pub policy: PolicyOverrides,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TelemetryOverrides {
    pub duration: Option<f64>,
    pub sample_rate: Option<f64>,
    pub ambient: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub period: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyOverrides {
    pub warning_threshold: Option<f64>,
    pub safe_threshold: Option<f64>,
    pub reweight_threshold: Option<f64>,
    pub hot_weight: Option<f64>,
    pub horizon: Option<HorizonRule>,
    pub transition_duration: Option<f64>,
    pub time_budget: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn apply_to_scenario(&self, scenario: &mut Scenario) -> Result<(), Error> {
        let policy = &mut scenario.setup.policy;
        let p = &self.policy;
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(v) = src {
                *dst = v;
            }
        };
        set(&mut policy.warning_threshold, p.warning_threshold);
        set(&mut policy.safe_threshold, p.safe_threshold);
        set(&mut policy.reweight_threshold, p.reweight_threshold);
        set(&mut policy.hot_weight, p.hot_weight);
        set(&mut policy.transition_duration, p.transition_duration);
        set(&mut policy.time_budget, p.time_budget);
        if let Some(h) = p.horizon {
            policy.horizon = h;
        }
        if let Some(d) = &self.descent {
            policy.descent = d.clone();
        }
        scenario.setup.validate()
    }

    pub fn apply_to_telemetry(&self, scenario: &mut Scenario) -> Result<(), Error> {
        let t = &self.telemetry;
        let Some(doc) = scenario.telemetry.as_mut() else {
            return Err(Error::InvalidInput("scenario has no [telemetry] section".into()));
        };
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(v) = src {
                *dst = v;
            }
        };
        set(&mut doc.duration, t.duration);
        set(&mut doc.sample_rate, t.sample_rate);
        set(&mut doc.ambient, t.ambient);
        set(&mut doc.noise_sigma, t.noise_sigma);
        set(&mut doc.period, t.period);
        Ok(())
    }
}
