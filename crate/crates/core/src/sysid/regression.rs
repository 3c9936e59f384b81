//! Least-squares identification of [`ThermalParams`] from telemetry.
//!
//! Each filtered sample gives one row of the linear model
//!
//! ```text
//! T_i - T_amb = [RC, betaR, beta_biasR, c] . [-dT_i/dt, F_i^2, -F_i, 1]
//! ```
//!
//! The first three feature columns and the target are Z-scored, batch
//! gradient descent runs on the scaled problem from a zero start, and the
//! result is mapped back to physical parameters.

use serde::{Deserialize, Serialize};

use super::filter::{derivative_filter, lowpass, time_constant};
use super::telemetry::TelemetryLog;
use crate::error::{Error, Result};
use crate::thermal_core::{step_euler, ThermalParams};

pub const FEATURE_NAMES: [&str; 4] = ["-dT/dt", "F^2", "-F", "bias"];

/// Minimum number of samples a log must carry to be fitted.
pub const MIN_LOG_SAMPLES: usize = 100;

/// Rows `(x_i, y_i)` of the thermal regression.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionSet {
    pub features: Vec<[f64; 4]>,
    pub targets: Vec<f64>,
    /// Mean ambient temperature over the kept rows, °C.
    pub ambient: f64,
}

impl RegressionSet {
    pub fn new(features: Vec<[f64; 4]>, targets: Vec<f64>, ambient: f64) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::invalid("feature and target counts differ"));
        }
        if features.iter().flatten().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::invalid("regression rows must be finite"));
        }
        if features.iter().any(|x| x[3] != 1.0) {
            return Err(Error::invalid("bias feature column must be identically 1"));
        }
        Ok(Self {
            features,
            targets,
            ambient,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    fn column(&self, j: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        self.features.iter().map(move |x| x[j])
    }
}

/// Per-column Z-score statistics (population standard deviation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingStats {
    pub feature_mean: [f64; 3],
    pub feature_std: [f64; 3],
    pub target_mean: f64,
    pub target_std: f64,
    pub ambient: f64,
}

impl ScalingStats {
    pub fn scale_features(&self, x: &[f64; 4]) -> [f64; 4] {
        let mut z = *x;
        for j in 0..3 {
            z[j] = (x[j] - self.feature_mean[j]) / self.feature_std[j];
        }
        z
    }

    pub fn unscale_features(&self, z: &[f64; 4]) -> [f64; 4] {
        let mut x = *z;
        for j in 0..3 {
            x[j] = z[j] * self.feature_std[j] + self.feature_mean[j];
        }
        x
    }

    pub fn scale_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    pub fn unscale_target(&self, z: f64) -> f64 {
        z * self.target_std + self.target_mean
    }
}

/// Filter settings and optimizer settings of [`fit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub temp_cutoff: f64,
    pub effort_cutoff: f64,
    /// Leading samples dropped, in time constants of the temperature filter.
    pub transient_time_constants: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Actuator driving the node; inferred from the log when absent.
    pub actuator: Option<String>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            temp_cutoff: 0.015,
            effort_cutoff: 1.0,
            transient_time_constants: 3.0,
            learning_rate: 0.1,
            max_iters: 200_000,
            grad_tol: 1e-9,
            actuator: None,
        }
    }
}

/// Outcome of [`batch_gradient_descent`].
#[derive(Clone, Debug, PartialEq)]
pub struct DescentResult {
    pub theta: [f64; 4],
    pub iterations: usize,
    pub final_loss: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    /// `(iteration, loss)` samples: every iteration up to 100, then every 100th.
    pub loss_curve: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub node: String,
    pub actuator: String,
    pub rows: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Loss of the scaled problem at the returned parameters.
    pub final_loss: f64,
    pub open_loop_rmse: f64,
    pub params: ThermalParams,
    #[serde(skip)]
    pub loss_curve: Vec<(usize, f64)>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Assemble regression rows for `node` driven by `actuator`.
pub fn build_regression(
    log: &TelemetryLog,
    node: &str,
    actuator: &str,
    temp_cutoff: f64,
    effort_cutoff: f64,
    transient_time_constants: f64,
) -> Result<RegressionSet> {
    log.validate()?;
    let node_idx = log.node_index(node)?;
    let act_idx = log.actuator_index(actuator)?;
    if log.len() < MIN_LOG_SAMPLES {
        return Err(Error::invalid(format!(
            "telemetry has {} samples, at least {MIN_LOG_SAMPLES} are required",
            log.len()
        )));
    }
    let fs = log.sample_rate()?;
    // Every signal passes through both low-passes so the filtered series
    // obey the same first-order dynamics as the raw ones.
    let chain = |v: &[f64]| -> Result<Vec<f64>> { lowpass(&lowpass(v, effort_cutoff, fs)?, temp_cutoff, fs) };
    let raw_temp = &log.temperatures[node_idx];
    let temp = chain(raw_temp)?;
    let temp_rate = lowpass(&derivative_filter(raw_temp, temp_cutoff, fs)?, effort_cutoff, fs)?;
    let raw_effort = &log.efforts[act_idx];
    let effort = chain(raw_effort)?;
    let effort_sq = chain(&raw_effort.iter().map(|f| f * f).collect::<Vec<_>>())?;

    let drop = ((transient_time_constants * time_constant(temp_cutoff) * fs).ceil() as usize).max(1);
    if log.len() < drop + MIN_LOG_SAMPLES / 2 {
        return Err(Error::invalid(format!(
            "telemetry too short: {} samples, {drop} dropped as filter transient",
            log.len()
        )));
    }
    // Row i describes the sample interval (i-1, i]: the difference quotient
    // ending at i, the interval-midpoint temperature and the effort held
    // over the interval.
    let rows = drop..log.len();
    let features = rows
        .clone()
        .map(|i| [-temp_rate[i], effort_sq[i - 1], -effort[i - 1], 1.0])
        .collect();
    let targets = rows
        .clone()
        .map(|i| 0.5 * (temp[i] + temp[i - 1]) - 0.5 * (log.ambient[i] + log.ambient[i - 1]))
        .collect();
    let ambient = rows.clone().map(|i| log.ambient[i]).sum::<f64>() / rows.len() as f64;
    RegressionSet::new(features, targets, ambient)
}

/// Z-score the three physical feature columns and the target.
pub fn zscore(set: &RegressionSet) -> Result<(RegressionSet, ScalingStats)> {
    if set.is_empty() {
        return Err(Error::invalid("empty regression set"));
    }
    let degenerate = |mean: f64, std: f64| !(std > 1e-12 * mean.abs().max(1.0));
    let mut feature_mean = [0.0; 3];
    let mut feature_std = [0.0; 3];
    for j in 0..3 {
        let (m, s) = mean_std(set.column(j));
        if degenerate(m, s) {
            return Err(Error::DegenerateData {
                column: FEATURE_NAMES[j].to_string(),
            });
        }
        feature_mean[j] = m;
        feature_std[j] = s;
    }
    let (target_mean, target_std) = mean_std(set.targets.iter().copied());
    if degenerate(target_mean, target_std) {
        return Err(Error::DegenerateData {
            column: "target".to_string(),
        });
    }
    let stats = ScalingStats {
        feature_mean,
        feature_std,
        target_mean,
        target_std,
        ambient: set.ambient,
    };
    let scaled = RegressionSet {
        features: set.features.iter().map(|x| stats.scale_features(x)).collect(),
        targets: set.targets.iter().map(|&y| stats.scale_target(y)).collect(),
        ambient: set.ambient,
    };
    Ok((scaled, stats))
}

/// Mean squared-error loss `(1/2m) Σ (θᵀx − y)²`.
pub fn loss(set: &RegressionSet, theta: &[f64; 4]) -> f64 {
    let m = set.len() as f64;
    set.features
        .iter()
        .zip(&set.targets)
        .map(|(x, y)| {
            let r = dot4(theta, x) - y;
            r * r
        })
        .sum::<f64>()
        / (2.0 * m)
}

#[inline]
fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Batch gradient descent on `L = (1/2m) Σ (θᵀx − y)²` from θ = 0.
///
/// The batch gradient `(1/m) Σ (θᵀx − y) x` is evaluated through the
/// accumulated moments `XᵀX/m` and `Xᵀy/m`, which are exact rewrites of the
/// per-row sums.
pub fn batch_gradient_descent(
    set: &RegressionSet,
    learning_rate: f64,
    max_iters: usize,
    grad_tol: f64,
) -> Result<DescentResult> {
    if !(learning_rate > 0.0) || !learning_rate.is_finite() {
        return Err(Error::invalid(format!("learning rate must be positive, got {learning_rate}")));
    }
    if set.is_empty() {
        return Err(Error::invalid("empty regression set"));
    }
    let m = set.len() as f64;
    let mut gram = [[0.0; 4]; 4];
    let mut xty = [0.0; 4];
    let mut yty = 0.0;
    for (x, &y) in set.features.iter().zip(&set.targets) {
        for a in 0..4 {
            for b in 0..4 {
                gram[a][b] += x[a] * x[b];
            }
            xty[a] += x[a] * y;
        }
        yty += y * y;
    }
    for a in 0..4 {
        for b in 0..4 {
            gram[a][b] /= m;
        }
        xty[a] /= m;
    }
    yty /= m;

    let gradient = |theta: &[f64; 4]| -> [f64; 4] {
        let mut g = [0.0; 4];
        for a in 0..4 {
            g[a] = dot4(&gram[a], theta) - xty[a];
        }
        g
    };
    let moment_loss = |theta: &[f64; 4]| -> f64 {
        let mut quad = 0.0;
        for a in 0..4 {
            quad += theta[a] * dot4(&gram[a], theta);
        }
        0.5 * quad - dot4(theta, &xty) + 0.5 * yty
    };
    let norm = |g: &[f64; 4]| dot4(g, g).sqrt();
    // Loss increments smaller than this are rounding, not divergence.
    let noise_floor = 1e-12 * yty.max(1e-300);

    let mut theta = [0.0; 4];
    let mut prev_loss = moment_loss(&theta);
    let mut curve = vec![(0, prev_loss)];
    let mut increases = 0usize;
    let mut grad = gradient(&theta);
    let mut iterations = 0;
    let mut converged = norm(&grad) <= grad_tol;
    while !converged && iterations < max_iters {
        for a in 0..4 {
            theta[a] -= learning_rate * grad[a];
        }
        iterations += 1;
        let current = moment_loss(&theta);
        if !current.is_finite() {
            return Err(Error::StepSize {
                learning_rate,
                iterations,
            });
        }
        if current > prev_loss + noise_floor {
            increases += 1;
            if increases >= 10 {
                return Err(Error::StepSize {
                    learning_rate,
                    iterations,
                });
            }
        } else {
            increases = 0;
        }
        prev_loss = current;
        if iterations <= 100 || iterations % 100 == 0 {
            curve.push((iterations, current));
        }
        grad = gradient(&theta);
        converged = norm(&grad) <= grad_tol;
    }
    let final_loss = loss(set, &theta);
    if curve.last().map(|c| c.0) != Some(iterations) {
        curve.push((iterations, final_loss));
    }
    Ok(DescentResult {
        theta,
        iterations,
        final_loss,
        gradient_norm: norm(&grad),
        converged,
        loss_curve: curve,
    })
}

/// Map scaled parameters back to physical [`ThermalParams`].
///
/// The learned offset includes the ambient temperature the targets were
/// referenced to.
pub fn unscale_params(theta_z: &[f64; 4], stats: &ScalingStats) -> Result<ThermalParams> {
    let mut theta = [0.0; 3];
    for j in 0..3 {
        theta[j] = stats.target_std / stats.feature_std[j] * theta_z[j];
    }
    let intercept = stats.target_mean
        - (0..3).map(|j| theta[j] * stats.feature_mean[j]).sum::<f64>()
        + stats.target_std * theta_z[3];
    let [rc, beta_r, beta_bias_r] = theta;
    if !(rc > 0.0) {
        return Err(Error::FitRejected(format!("non-positive time constant RC = {rc}")));
    }
    if !(beta_r > 0.0) {
        return Err(Error::FitRejected(format!("non-positive effort gain betaR = {beta_r}")));
    }
    ThermalParams::new(rc, beta_r, beta_bias_r, intercept + stats.ambient)
        .map_err(|e| Error::FitRejected(e.to_string()))
}

/// Model prediction of the regression target `T − T_amb` for one unscaled row.
pub fn predict_row(params: &ThermalParams, x: &[f64; 4], ambient: f64) -> f64 {
    params.rc_time_constant * x[0] + params.beta_r * x[1] + params.beta_bias_r * x[2] + (params.t_offset - ambient) * x[3]
}

/// Full pipeline: regression rows, scaling, descent, unscaling, evaluation.
pub fn fit(log: &TelemetryLog, node: &str, config: &FitConfig) -> Result<(ThermalParams, FitReport)> {
    let actuator = match &config.actuator {
        Some(a) => a.clone(),
        None => log.infer_actuator(node)?,
    };
    let set = build_regression(
        log,
        node,
        &actuator,
        config.temp_cutoff,
        config.effort_cutoff,
        config.transient_time_constants,
    )?;
    let (scaled, stats) = zscore(&set)?;
    let descent = batch_gradient_descent(&scaled, config.learning_rate, config.max_iters, config.grad_tol)?;
    let params = unscale_params(&descent.theta, &stats)?;
    let rmse = evaluate_open_loop_with(&params, log, node, &actuator)?;
    let report = FitReport {
        node: node.to_string(),
        actuator,
        rows: set.len(),
        iterations: descent.iterations,
        converged: descent.converged,
        final_loss: descent.final_loss,
        open_loop_rmse: rmse,
        params,
        loss_curve: descent.loss_curve,
    };
    Ok((params, report))
}

/// Open-loop temperature trace: start at the first logged ambient, then
/// Euler-integrate using only the logged efforts.
pub fn open_loop_prediction(params: &ThermalParams, log: &TelemetryLog, actuator: &str) -> Result<Vec<f64>> {
    log.validate()?;
    let act_idx = log.actuator_index(actuator)?;
    if log.is_empty() {
        return Ok(Vec::new());
    }
    let efforts = &log.efforts[act_idx];
    let mut temps = Vec::with_capacity(log.len());
    let mut t = log.ambient[0];
    temps.push(t);
    for i in 1..log.len() {
        let dt = log.times[i] - log.times[i - 1];
        t = step_euler(params, t, efforts[i - 1], dt)?;
        temps.push(t);
    }
    Ok(temps)
}

fn evaluate_open_loop_with(params: &ThermalParams, log: &TelemetryLog, node: &str, actuator: &str) -> Result<f64> {
    let node_idx = log.node_index(node)?;
    let predicted = open_loop_prediction(params, log, actuator)?;
    let measured = &log.temperatures[node_idx];
    if measured.is_empty() {
        return Ok(0.0);
    }
    let sq = predicted.iter().zip(measured).map(|(p, m)| (p - m) * (p - m)).sum::<f64>();
    Ok((sq / measured.len() as f64).sqrt())
}

/// Root-mean-square open-loop prediction error for `node`, °C.
pub fn evaluate_open_loop(params: &ThermalParams, log: &TelemetryLog, node: &str) -> Result<f64> {
    let actuator = log.infer_actuator(node)?;
    evaluate_open_loop_with(params, log, node, &actuator)
}

/// [`evaluate_open_loop`] with an explicit node-to-actuator binding.
pub fn evaluate_open_loop_bound(params: &ThermalParams, log: &TelemetryLog, node: &str, actuator: &str) -> Result<f64> {
    evaluate_open_loop_with(params, log, node, actuator)
}
