//! Quasi-static robot/thermal plant: the commanded configuration is tracked
//! exactly, torques are the static gravity-compensating torques and every
//! node is advanced by an Euler step.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Configuration, ContactConfig, RobotModel, StaticsSolution};
use crate::error::{Error, Result};
use crate::thermal_core::step_euler;
use crate::thermal_ik::ThermalScene;

/// Largest contact residual a commanded configuration may have.
pub const COMMAND_RESIDUAL_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct PlantState {
    pub q: Configuration,
    /// Node temperatures, °C, in scene order.
    pub temperatures: Vec<f64>,
    /// Simulation clock, s.
    pub time: f64,
    /// Name of the active contact configuration.
    pub contact: String,
}

impl PlantState {
    pub fn validate(&self, model: &RobotModel) -> Result<()> {
        model.check_configuration(&self.q)?;
        if self.temperatures.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("plant temperatures must be finite"));
        }
        Ok(())
    }
}

/// One commanded plant step: hold `q` under `contact` for one period.
#[derive(Clone, Debug, PartialEq)]
pub struct Command<'a> {
    pub q: Configuration,
    pub contact: &'a ContactConfig,
}

/// Plant sample after one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantSample {
    pub time: f64,
    pub temperatures: Vec<f64>,
    pub efforts: Vec<f64>,
    pub contact: String,
}

/// Largest stable Euler step for the scene: `min RC / 100`.
pub fn default_step(scene: &ThermalScene) -> f64 {
    scene
        .nodes
        .iter()
        .map(|n| n.params.rc_time_constant / 100.0)
        .fold(f64::INFINITY, f64::min)
}

/// Step the plant through `commands`, one period `dt` each. `plant` ends
/// at the last command.
pub fn simulate_plant(
    plant: &mut PlantState,
    commands: &[Command<'_>],
    dt: f64,
    scene: &ThermalScene,
    model: &RobotModel,
) -> Result<Vec<PlantSample>> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("plant step must be positive, got {dt}")));
    }
    if plant.temperatures.len() != scene.nodes.len() {
        return Err(Error::invalid(format!(
            "plant has {} temperatures, scene has {} nodes",
            plant.temperatures.len(),
            scene.nodes.len()
        )));
    }
    let binding = scene.bind(model)?;
    let mut trace = Vec::with_capacity(commands.len());
    for cmd in commands {
        let residual = cmd.contact.drift(model, &cmd.q);
        if residual > COMMAND_RESIDUAL_TOL {
            return Err(Error::InfeasibleCommand {
                time: plant.time,
                residual,
                tolerance: COMMAND_RESIDUAL_TOL,
            });
        }
        let statics = StaticsSolution::solve(model, &cmd.q, cmd.contact)?;
        for ((t, node), &a) in plant.temperatures.iter_mut().zip(&scene.nodes).zip(&binding) {
            *t = step_euler(&node.params, *t, statics.efforts[a], dt)?;
        }
        plant.q = cmd.q.clone();
        plant.time += dt;
        plant.contact = cmd.contact.name.clone();
        trace.push(PlantSample {
            time: plant.time,
            temperatures: plant.temperatures.clone(),
            efforts: statics.efforts.iter().copied().collect(),
            contact: plant.contact.clone(),
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recovery::Scenario;
    use crate::thermal_core::steady_state_temperature;
    use nalgebra::DVector;

    fn scenario() -> Scenario {
        Scenario::load(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/hot_right_leg.toml")).unwrap()
    }

    fn hold<'a>(q: &Configuration, contact: &'a ContactConfig, steps: usize) -> Vec<Command<'a>> {
        (0..steps).map(|_| Command { q: q.clone(), contact }).collect()
    }

    #[test]
    fn holding_nominal_reaches_steady_state() {
        let s = scenario().setup;
        let mut plant = s.initial_plant();
        plant.temperatures = vec![25.0; 6];
        let contact = s.policy.nominal();
        let dt = default_step(&s.scene);
        assert_eq!(dt, 2.0);
        let steps = (5.0 * 200.0 / dt) as usize;
        let trace = simulate_plant(&mut plant, &hold(&s.policy.q_nominal, contact, steps), dt, &s.scene, &s.model).unwrap();
        let efforts = &trace.last().unwrap().efforts;
        let binding = s.scene.bind(&s.model).unwrap();
        for ((node, &a), t) in s.scene.nodes.iter().zip(&binding).zip(&plant.temperatures) {
            let steady = steady_state_temperature(&node.params, efforts[a]).unwrap();
            assert!((t - steady).abs() <= 0.01 * steady, "{}: {t} vs {steady}", node.id);
        }
        assert!((plant.time - 1000.0).abs() < 1e-9);
        assert_eq!(plant.contact, contact.name);
    }

    #[test]
    fn without_gravity_nodes_relax_to_offset() {
        let mut s = scenario().setup;
        s.model.gravity = 0.0;
        let mut plant = s.initial_plant();
        let before = plant.temperatures.clone();
        simulate_plant(&mut plant, &hold(&s.policy.q_nominal, s.policy.nominal(), 50), 2.0, &s.scene, &s.model).unwrap();
        for ((t, t0), node) in plant.temperatures.iter().zip(&before).zip(&s.scene.nodes) {
            let off = node.params.t_offset;
            assert!((t - off).abs() < (t0 - off).abs());
            assert!((t - off) * (t0 - off) > 0.0);
        }
    }

    #[test]
    fn deeper_squat_heats_knee_more() {
        let s = scenario().setup;
        let contact = s.policy.nominal();
        let knee = s.scene.nodes.iter().position(|n| n.id == "l_knee_core").unwrap();
        let steady_at = |q: &Configuration| {
            let c = ContactConfig::new(&s.model, "double", &["l_sole", "r_sole"]).unwrap().anchored_at(&s.model, q);
            let sol = StaticsSolution::solve(&s.model, q, &c).unwrap();
            steady_state_temperature(&s.scene.nodes[knee].params, sol.efforts[1]).unwrap()
        };
        let deep = DVector::from_column_slice(&[0.0, 0.65, 0.0, 0.75, -1.2, 0.45, -0.75, 1.2, -0.45]);
        assert!(steady_at(&deep) > steady_at(&s.policy.q_nominal));
        assert_eq!(contact.frame_names, vec!["l_sole", "r_sole"]);
    }

    #[test]
    fn off_contact_command_is_infeasible() {
        let s = scenario().setup;
        let mut plant = s.initial_plant();
        let mut q = s.policy.q_nominal.clone();
        q[1] += 0.01;
        let err = simulate_plant(&mut plant, &hold(&q, s.policy.nominal(), 1), 0.5, &s.scene, &s.model).unwrap_err();
        assert!(matches!(err, Error::InfeasibleCommand { .. }));
    }

    #[test]
    fn rejects_bad_step_and_mismatched_state() {
        let s = scenario().setup;
        let mut plant = s.initial_plant();
        let cmds = hold(&s.policy.q_nominal, s.policy.nominal(), 1);
        assert!(simulate_plant(&mut plant, &cmds, 0.0, &s.scene, &s.model).is_err());
        plant.temperatures.pop();
        assert!(simulate_plant(&mut plant, &cmds, 0.5, &s.scene, &s.model).is_err());
    }
}
