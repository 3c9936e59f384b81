#![allow(dead_code)]

use std::path::PathBuf;

use actuator_thermal::dynamics::{Configuration, ContactConfig, JointKind, RobotModel};
use actuator_thermal::recovery::Scenario;
use actuator_thermal::sysid::synth::{sample_schedule, simulate_node, squat_stand_schedule, synthesize, SynthNode};
use actuator_thermal::sysid::TelemetryLog;
use actuator_thermal::thermal_ik::{SceneNode, ThermalScene};
use actuator_thermal::ThermalParams;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn model(name: &str) -> RobotModel {
    RobotModel::load(&fixture(name)).unwrap()
}

pub fn biped() -> RobotModel {
    model("biped.toml")
}

pub fn hot_right_leg() -> Scenario {
    Scenario::load(&fixture("hot_right_leg.toml")).unwrap()
}

pub const Q_NOMINAL: [f64; 9] = [0.0, 0.8512575163133684, 0.0, 0.35, -0.5, 0.15, -0.35, 0.5, -0.15];

pub fn q_nominal() -> Configuration {
    DVector::from_column_slice(&Q_NOMINAL)
}

pub fn contact(model: &RobotModel, frames: &[&str]) -> ContactConfig {
    ContactConfig::new(model, frames.join("+"), frames).unwrap()
}

pub fn anchored(model: &RobotModel, frames: &[&str]) -> ContactConfig {
    contact(model, frames).anchored_at(model, &q_nominal())
}

/// Random biped stances: joints perturbed about the nominal pose, then
/// restored onto `frames` anchored at the nominal feet.
pub fn random_stances(model: &RobotModel, frames: &[&str], count: usize, seed: u64) -> Vec<Configuration> {
    let c = anchored(model, frames);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut q = q_nominal();
        for d in 2..q.len() {
            q[d] += rng.random_range(-0.2..0.2);
        }
        q[0] += rng.random_range(-0.05..0.05);
        let (q, drift) = c.restore(model, &q, 1e-12, 50);
        if drift <= 1e-10 && inside_limits(model, &q, 0.02) {
            out.push(q);
        }
    }
    out
}

/// Every revolute joint at least `margin` inside its limits.
pub fn inside_limits(model: &RobotModel, q: &Configuration, margin: f64) -> bool {
    model
        .joints
        .iter()
        .filter(|j| j.kind == JointKind::Revolute)
        .filter_map(|j| j.dof.map(|d| (d, j.limits)))
        .all(|(d, (lo, hi))| q[d] >= lo + margin && q[d] <= hi - margin)
        && model.check_configuration(q).is_ok()
}

pub fn oracle_params() -> ThermalParams {
    ThermalParams::new(120.0, 0.002, 0.01, 27.0).unwrap()
}

pub const ORACLE_STAND: f64 = 0.0;
pub const ORACLE_SQUATS: [f64; 3] = [150.0, 75.0, 200.0];
pub const ORACLE_PERIOD: f64 = 400.0;

/// 3000 s of 10 Hz squat-stand telemetry of one node, and its noise-free truth.
pub fn oracle_telemetry(seed: u64) -> (TelemetryLog, Vec<f64>) {
    let params = oracle_params();
    let rate = 10.0;
    let n = 30_000;
    let schedule = squat_stand_schedule(3000.0, ORACLE_PERIOD, ORACLE_STAND, &ORACLE_SQUATS).unwrap();
    let efforts = sample_schedule(&schedule, rate, n);
    let truth = simulate_node(&params, 25.0, &efforts, 1.0 / rate).unwrap();
    let node = SynthNode {
        id: "knee_core".into(),
        actuator: 0,
        params,
        initial_temperature: 25.0,
    };
    let log = synthesize(&[node], vec!["knee".into()], vec![efforts], 25.0, rate, 0.1, seed).unwrap();
    (log, truth)
}

/// One node per biped actuator with shared parameters.
pub fn biped_scene(model: &RobotModel, temps: &[f64], weights: Vec<f64>, horizon: f64) -> ThermalScene {
    let params = ThermalParams::new(200.0, 0.05, 0.01, 30.0).unwrap();
    let nodes = model
        .actuator_ids()
        .into_iter()
        .zip(temps)
        .map(|(a, &t)| SceneNode {
            id: format!("{a}_core"),
            actuator: a,
            params,
            initial_temperature: t,
        })
        .collect();
    ThermalScene::new(nodes, weights, horizon).unwrap()
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
