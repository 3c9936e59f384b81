//! Synthetic telemetry from known node parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::telemetry::TelemetryLog;
use crate::error::{Error, Result};
use crate::thermal_core::{predict_temperature, ThermalParams};

/// A node to synthesize: id, index of its actuator, parameters and
/// starting temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthNode {
    pub id: String,
    pub actuator: usize,
    pub params: ThermalParams,
    pub initial_temperature: f64,
}

/// Piecewise-constant effort schedule: `(duration s, effort)` segments.
pub type EffortSchedule = Vec<(f64, f64)>;

/// Alternating stand/squat schedule: each `period` starts with half a
/// period at `stand`, then half at the next entry of `squats` (cycled).
pub fn squat_stand_schedule(duration: f64, period: f64, stand: f64, squats: &[f64]) -> Result<EffortSchedule> {
    if !(period > 0.0) || squats.is_empty() {
        return Err(Error::invalid("squat-stand schedule needs a positive period and at least one squat level"));
    }
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut k = 0;
    while t < duration {
        let effort = if k % 2 == 0 { stand } else { squats[(k / 2) % squats.len()] };
        let len = (period / 2.0).min(duration - t);
        out.push((len, effort));
        t += len;
        k += 1;
    }
    Ok(out)
}

/// Sample a schedule at `n` instants spaced `1/sample_rate` apart.
pub fn sample_schedule(schedule: &[(f64, f64)], sample_rate: f64, n: usize) -> Vec<f64> {
    let mut bounds = Vec::with_capacity(schedule.len());
    let mut acc = 0.0;
    for &(d, e) in schedule {
        acc += d;
        bounds.push((acc, e));
    }
    (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate;
            bounds
                .iter()
                .find(|(end, _)| t < *end - 1e-9)
                .or(bounds.last())
                .map(|&(_, e)| e)
                .unwrap_or(0.0)
        })
        .collect()
}

/// Noise-free node temperatures under sampled efforts: each effort is held
/// over the following sample period and advanced in closed form.
pub fn simulate_node(params: &ThermalParams, t0: f64, efforts: &[f64], dt: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(efforts.len());
    let mut t = t0;
    for (i, &f) in efforts.iter().enumerate() {
        out.push(t);
        if i + 1 < efforts.len() {
            t = predict_temperature(params, t, f, dt)?;
        }
    }
    Ok(out)
}

/// Telemetry of `nodes` driven by per-actuator effort series, with
/// Gaussian temperature noise of standard deviation `noise_sigma`.
pub fn synthesize(
    nodes: &[SynthNode],
    actuator_ids: Vec<String>,
    efforts: Vec<Vec<f64>>,
    ambient: f64,
    sample_rate: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<TelemetryLog> {
    if !(sample_rate > 0.0) {
        return Err(Error::invalid(format!("sample rate must be positive, got {sample_rate}")));
    }
    if actuator_ids.len() != efforts.len() {
        return Err(Error::invalid("one effort series per actuator required"));
    }
    let n = efforts.first().map_or(0, Vec::len);
    if efforts.iter().any(|e| e.len() != n) {
        return Err(Error::invalid("effort series differ in length"));
    }
    let noise = Normal::new(0.0, noise_sigma.max(0.0))
        .map_err(|e| Error::invalid(format!("noise standard deviation: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 1.0 / sample_rate;
    let mut truth = Vec::with_capacity(nodes.len());
    for node in nodes {
        let series = efforts
            .get(node.actuator)
            .ok_or_else(|| Error::invalid(format!("node `{}` refers to a missing actuator", node.id)))?;
        truth.push(simulate_node(&node.params, node.initial_temperature, series, dt)?);
    }
    let mut log = TelemetryLog::empty(nodes.iter().map(|n| n.id.clone()).collect(), actuator_ids);
    let mut temps = vec![0.0; nodes.len()];
    let mut row = vec![0.0; efforts.len()];
    for i in 0..n {
        for (t, series) in temps.iter_mut().zip(&truth) {
            let e = if noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            *t = series[i] + e;
        }
        for (r, series) in row.iter_mut().zip(&efforts) {
            *r = series[i];
        }
        log.push_sample(i as f64 * dt, ambient, &temps, &row);
    }
    Ok(log)
}
