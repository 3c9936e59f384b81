//! Contact-consistent gradient descent on a configuration objective.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::scene::ThermalScene;
use crate::dynamics::statics::dc_pinv_with_inverse;
use crate::dynamics::{
    Configuration, JointKind, ConstrainedStatics, ContactConfig, DofBlock, RobotModel, StaticsSolution,
};
use crate::error::{Error, Result};
use crate::linalg::{max_abs_vec, range_basis, RANK_TOLERANCE};

/// Scalar objective over configurations under a fixed contact set.
pub trait Objective {
    fn model(&self) -> &RobotModel;

    fn value(&self, q: &Configuration, contact: &ContactConfig) -> Result<f64>;

    /// Per-node quantities recorded in the descent trace.
    fn details(&self, q: &Configuration, contact: &ContactConfig) -> Result<Vec<f64>>;

    fn detail_labels(&self) -> Vec<String>;

    /// Factor that maps [`Objective::value`] back to reporting units.
    fn report_scale(&self) -> f64 {
        1.0
    }
}

/// `TᵀQT` over predicted node temperatures.
///
/// `Q` is divided by its largest entry so the iterate sequence does not
/// depend on the overall scale of `Q`.
pub struct ThermalPotential<'a> {
    model: &'a RobotModel,
    scene: ThermalScene,
    binding: Vec<usize>,
    scale: f64,
}

impl<'a> ThermalPotential<'a> {
    pub fn new(scene: &ThermalScene, model: &'a RobotModel) -> Result<Self> {
        scene.validate()?;
        let binding = scene.bind(model)?;
        let scale = scene.weights.iter().fold(0.0f64, |m, &w| m.max(w));
        let mut normalized = scene.clone();
        if scale > 0.0 {
            for w in &mut normalized.weights {
                *w /= scale;
            }
        }
        Ok(Self {
            model,
            scene: normalized,
            binding,
            scale: if scale > 0.0 { scale } else { 1.0 },
        })
    }

    pub fn temperatures(&self, q: &Configuration, contact: &ContactConfig) -> Result<DVector<f64>> {
        let statics = StaticsSolution::solve(self.model, q, contact)?;
        self.scene.predict_from_efforts(&self.binding, &statics.efforts)
    }
}

impl Objective for ThermalPotential<'_> {
    fn model(&self) -> &RobotModel {
        self.model
    }

    fn value(&self, q: &Configuration, contact: &ContactConfig) -> Result<f64> {
        Ok(self.scene.quadratic(&self.temperatures(q, contact)?))
    }

    fn details(&self, q: &Configuration, contact: &ContactConfig) -> Result<Vec<f64>> {
        Ok(self.temperatures(q, contact)?.iter().copied().collect())
    }

    fn detail_labels(&self) -> Vec<String> {
        self.scene.nodes.iter().map(|n| format!("{}_temp_c", n.id)).collect()
    }

    fn report_scale(&self) -> f64 {
        self.scale
    }
}

/// `‖Γ(q)‖²`: thermally blind effort objective.
pub struct EffortPotential<'a> {
    model: &'a RobotModel,
}

impl<'a> EffortPotential<'a> {
    pub fn new(model: &'a RobotModel) -> Self {
        Self { model }
    }
}

impl Objective for EffortPotential<'_> {
    fn model(&self) -> &RobotModel {
        self.model
    }

    fn value(&self, q: &Configuration, contact: &ContactConfig) -> Result<f64> {
        let statics = ConstrainedStatics::evaluate(self.model, q, contact)?;
        Ok(statics.torque(self.model, contact)?.norm_squared())
    }

    fn details(&self, q: &Configuration, contact: &ContactConfig) -> Result<Vec<f64>> {
        let statics = ConstrainedStatics::evaluate(self.model, q, contact)?;
        Ok(statics.torque(self.model, contact)?.iter().copied().collect())
    }

    fn detail_labels(&self) -> Vec<String> {
        let base = self.model.base_dofs;
        (base..self.model.dofs())
            .map(|d| format!("{}_torque", self.model.joints[self.model.dof_joint[d]].name))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Forward differences along the projected unit directions `N_c ε_i`.
    Projected,
    /// Directional differences along an orthonormal null-space basis.
    Basis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescentSettings {
    /// Finite-difference step, rad or m.
    pub h: f64,
    /// Largest per-iterate change of actuated coordinates, rad.
    pub delta_actuated: f64,
    /// Largest per-iterate change of base translation, m.
    pub delta_base_linear: f64,
    /// Largest per-iterate change of base rotation, rad.
    pub delta_base_rotary: f64,
    pub max_iters: usize,
    pub mode: GradientMode,
    /// Stop when `max|∇f| ≤ grad_tol · max(|f|, 1)`.
    pub grad_tol: f64,
    /// Run contact restoration every this many iterates.
    pub restore_every: usize,
    /// Largest contact-frame drift accepted in the returned configuration.
    pub drift_tol: f64,
    /// Largest start residual accepted.
    pub start_tol: f64,
}

impl Default for DescentSettings {
    fn default() -> Self {
        Self {
            h: 1e-6,
            delta_actuated: 0.02,
            delta_base_linear: 0.01,
            delta_base_rotary: 0.02,
            max_iters: 500,
            mode: GradientMode::Projected,
            grad_tol: 1e-9,
            restore_every: 1,
            drift_tol: 1e-4,
            start_tol: 1e-6,
        }
    }
}

impl DescentSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("h", self.h),
            ("delta_actuated", self.delta_actuated),
            ("delta_base_linear", self.delta_base_linear),
            ("delta_base_rotary", self.delta_base_rotary),
            ("drift_tol", self.drift_tol),
            ("start_tol", self.start_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 || self.restore_every == 0 {
            return Err(Error::invalid("max_iters and restore_every must be at least 1"));
        }
        Ok(())
    }

    pub fn delta(&self, block: DofBlock) -> f64 {
        match block {
            DofBlock::Actuated => self.delta_actuated,
            DofBlock::BaseLinear => self.delta_base_linear,
            DofBlock::BaseRotary => self.delta_base_rotary,
        }
    }
}

/// Forward-difference gradient with each probe projected into the contact
/// null space: component `i` is `[f(q + N_c h ε_i) − f(q)] / h`.
pub fn gradient_projected<O: Objective + ?Sized>(
    objective: &O,
    q: &Configuration,
    contact: &ContactConfig,
    nullspace: &DMatrix<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    let f0 = objective.value(q, contact)?;
    let n = q.len();
    let mut grad = DVector::zeros(n);
    for i in 0..n {
        let probe = q + nullspace.column(i) * h;
        grad[i] = (objective.value(&probe, contact)? - f0) / h;
    }
    Ok(grad)
}

/// Orthonormal basis of `range(N_c)`.
pub fn nullspace_basis(nullspace: &DMatrix<f64>) -> Vec<DVector<f64>> {
    range_basis(nullspace, RANK_TOLERANCE)
}

/// `Σ v_i [f(q + h v_i) − f(q)] / h` over a null-space basis.
pub fn gradient_nullspace_basis<O: Objective + ?Sized>(
    objective: &O,
    q: &Configuration,
    contact: &ContactConfig,
    nullspace: &DMatrix<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    let f0 = objective.value(q, contact)?;
    let mut grad = DVector::zeros(q.len());
    for v in nullspace_basis(nullspace) {
        let slope = (objective.value(&(q + &v * h), contact)? - f0) / h;
        grad.axpy(slope, &v, 1.0);
    }
    Ok(grad)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Gradient below tolerance.
    Converged,
    /// The next iterate would not decrease the objective.
    CostIncrease,
    /// Joint-limit clamping left no admissible step.
    JointLimit,
    IterationLimit,
    /// The objective could not be evaluated at a proposed iterate.
    EvaluationFailed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub iterate: usize,
    pub f: f64,
    /// Largest absolute coordinate change from the previous iterate.
    pub max_step: f64,
    /// Largest change per block: actuated, base linear, base rotary.
    pub block_steps: [f64; 3],
    pub details: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescentOutcome {
    pub q: Configuration,
    pub f: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<TraceEntry>,
    pub detail_labels: Vec<String>,
    /// Contact-frame drift of the returned configuration.
    pub drift: f64,
}

impl DescentOutcome {
    /// CSV with columns `iterate, f, max_dq, <details...>`.
    pub fn write_trace_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["iterate".to_string(), "f".to_string(), "max_dq".to_string()];
        header.extend(self.detail_labels.iter().cloned());
        w.write_record(&header)?;
        for e in &self.trace {
            let mut row = vec![e.iterate.to_string(), e.f.to_string(), e.max_step.to_string()];
            row.extend(e.details.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

fn block_index(block: DofBlock) -> usize {
    match block {
        DofBlock::Actuated => 0,
        DofBlock::BaseLinear => 1,
        DofBlock::BaseRotary => 2,
    }
}

const BLOCKS: [DofBlock; 3] = [DofBlock::Actuated, DofBlock::BaseLinear, DofBlock::BaseRotary];

fn block_maxima(model: &RobotModel, v: &DVector<f64>) -> [f64; 3] {
    let mut out = [0.0f64; 3];
    for (d, x) in v.iter().enumerate() {
        let b = block_index(model.dof_block(d));
        out[b] = out[b].max(x.abs());
    }
    out
}

/// Largest uniform factor ≤ 1 that keeps every block within its bound.
fn block_scale(model: &RobotModel, settings: &DescentSettings, step: &DVector<f64>) -> f64 {
    let maxima = block_maxima(model, step);
    BLOCKS.iter().fold(1.0f64, |s, &b| {
        let m = maxima[block_index(b)];
        if m > 0.0 {
            s.min(settings.delta(b) / m)
        } else {
            s
        }
    })
}

fn within_bounds(model: &RobotModel, settings: &DescentSettings, step: &DVector<f64>) -> bool {
    let maxima = block_maxima(model, step);
    BLOCKS
        .iter()
        .all(|&b| maxima[block_index(b)] <= settings.delta(b) * (1.0 + 1e-12))
}

/// Blocks whose full-bound step promises less than this fraction of the
/// largest block's first-order decrease are treated as stationary.
const STATIONARY_BLOCK: f64 = 1e-6;

/// Gain-scaled descent step `dq = −k_p ∘ ∇f`, each block's gain chosen so
/// its largest component equals that block's bound. Stationary blocks do
/// not move, so finite-difference noise is not scaled up to a full step.
fn scaled_step(model: &RobotModel, settings: &DescentSettings, grad: &DVector<f64>) -> DVector<f64> {
    let maxima = block_maxima(model, grad);
    let decrease = BLOCKS.map(|b| maxima[block_index(b)] * settings.delta(b));
    let top = decrease.iter().fold(0.0f64, |a, &b| a.max(b));
    DVector::from_iterator(
        grad.len(),
        grad.iter().enumerate().map(|(d, g)| {
            let block = model.dof_block(d);
            let m = maxima[block_index(block)];
            if m > 0.0 && decrease[block_index(block)] > STATIONARY_BLOCK * top {
                -settings.delta(block) / m * g
            } else {
                0.0
            }
        }),
    )
}

fn dof_limits(model: &RobotModel) -> Vec<(f64, f64)> {
    let mut limits = vec![(f64::NEG_INFINITY, f64::INFINITY); model.dofs()];
    for joint in &model.joints {
        if let (JointKind::Revolute, Some(d)) = (joint.kind, joint.dof) {
            limits[d] = joint.limits;
        }
    }
    limits
}

/// Null-space projector of the contacts stacked with rows that pin the
/// `locked` coordinates.
fn locked_nullspace(statics: &ConstrainedStatics, locked: &[usize]) -> DMatrix<f64> {
    let n = statics.nullspace.nrows();
    let k = statics.jacobian.nrows();
    let mut x = DMatrix::zeros(k + locked.len(), n);
    x.rows_mut(0, k).copy_from(&statics.jacobian);
    for (r, &d) in locked.iter().enumerate() {
        x[(k + r, d)] = 1.0;
    }
    let (x_bar, _) = dc_pinv_with_inverse(&x, &statics.mass_inv);
    DMatrix::identity(n, n) - x_bar * x
}

const RESTORE_TOL: f64 = 1e-11;
const RESTORE_ITERS: usize = 30;

/// Projected gradient descent from `q0` keeping `contact` satisfied.
///
/// Each iterate moves `q_{k+1} = q_k + N_c dq`, then restores the anchored
/// contacts and enforces joint limits. Descent stops at the iteration limit,
/// on a small gradient, or when the next iterate would not lower the
/// objective; in that case the last accepted iterate is returned.
pub fn descend<O: Objective + ?Sized>(
    objective: &O,
    q0: &Configuration,
    contact: &ContactConfig,
    settings: &DescentSettings,
) -> Result<DescentOutcome> {
    settings.validate()?;
    let model = objective.model();
    model.check_configuration(q0)?;
    let start_drift = contact.drift(model, q0);
    if start_drift > settings.start_tol {
        return Err(Error::InvalidStart {
            residual: start_drift,
            tolerance: settings.start_tol,
        });
    }
    let scale = objective.report_scale();
    let mut q = q0.clone();
    let mut f = objective.value(&q, contact)?;
    let mut trace = vec![TraceEntry {
        iterate: 0,
        f: f * scale,
        max_step: 0.0,
        block_steps: [0.0; 3],
        details: objective.details(&q, contact)?,
    }];
    let mut termination = Termination::IterationLimit;
    let mut iterations = 0;

    let limits = dof_limits(model);
    for k in 1..=settings.max_iters {
        iterations = k;
        let statics = match ConstrainedStatics::evaluate(model, &q, contact) {
            Ok(s) => s,
            Err(_) => {
                termination = Termination::EvaluationFailed;
                break;
            }
        };
        let nullspace = &statics.nullspace;
        let grad = match settings.mode {
            GradientMode::Projected => gradient_projected(objective, &q, contact, nullspace, settings.h),
            GradientMode::Basis => gradient_nullspace_basis(objective, &q, contact, nullspace, settings.h),
        };
        let grad = match grad {
            Ok(g) => g,
            Err(_) => {
                termination = Termination::EvaluationFailed;
                break;
            }
        };
        if max_abs_vec(&grad) <= settings.grad_tol * f.abs().max(1.0) {
            termination = Termination::Converged;
            break;
        }
        let dq = scaled_step(model, settings, &grad);

        // Coordinates the step would push past a limit are held fixed and
        // the step is re-projected with them as extra constraints.
        let mut locked: Vec<usize> = Vec::new();
        let mut step = nullspace * &dq;
        for _ in 0..model.dofs() {
            let trial = &q + &step;
            let newly: Vec<usize> = (0..model.dofs())
                .filter(|d| !locked.contains(d) && (trial[*d] < limits[*d].0 || trial[*d] > limits[*d].1))
                .collect();
            if newly.is_empty() {
                break;
            }
            locked.extend(newly);
            step = locked_nullspace(&statics, &locked) * &dq;
        }
        step *= block_scale(model, settings, &step);
        if max_abs_vec(&step) == 0.0 {
            termination = Termination::JointLimit;
            break;
        }

        let restore = k % settings.restore_every == 0;
        let mut candidate = None;
        for _ in 0..8 {
            let mut trial = &q + &step;
            if restore {
                trial = contact.restore_locked(model, &trial, RESTORE_TOL, RESTORE_ITERS, &locked).0;
                if model.clamp_to_limits(&mut trial) {
                    let mut held = locked.clone();
                    held.extend((0..model.dofs()).filter(|d| trial[*d] == limits[*d].0 || trial[*d] == limits[*d].1));
                    trial = contact.restore_locked(model, &trial, RESTORE_TOL, RESTORE_ITERS, &held).0;
                }
            } else {
                model.clamp_to_limits(&mut trial);
            }
            if within_bounds(model, settings, &(&trial - &q)) {
                candidate = Some(trial);
                break;
            }
            step *= 0.9 * block_scale(model, settings, &(&trial - &q));
        }
        let Some(candidate) = candidate else {
            termination = Termination::JointLimit;
            break;
        };
        let f_next = match objective.value(&candidate, contact) {
            Ok(v) => v,
            Err(_) => {
                termination = Termination::EvaluationFailed;
                break;
            }
        };
        if !(f_next < f) {
            termination = Termination::CostIncrease;
            break;
        }
        let change = &candidate - &q;
        let details = match objective.details(&candidate, contact) {
            Ok(d) => d,
            Err(_) => {
                termination = Termination::EvaluationFailed;
                break;
            }
        };
        q = candidate;
        f = f_next;
        trace.push(TraceEntry {
            iterate: k,
            f: f * scale,
            max_step: max_abs_vec(&change),
            block_steps: block_maxima(model, &change),
            details,
        });
    }

    if settings.restore_every > 1 {
        let (restored, _) = contact.restore(model, &q, RESTORE_TOL, RESTORE_ITERS);
        if let Ok(v) = objective.value(&restored, contact) {
            q = restored;
            f = v;
        }
    }
    let drift = contact.drift(model, &q);
    Ok(DescentOutcome {
        q,
        f: f * scale,
        iterations,
        termination,
        trace,
        detail_labels: objective.detail_labels(),
        drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Configuration;
    use crate::thermal_core::ThermalParams;
    use crate::thermal_ik::scene::SceneNode;
    use crate::linalg::rank;

    fn fixture(name: &str) -> RobotModel {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
        RobotModel::load(&path).unwrap()
    }

    fn stance() -> Configuration {
        DVector::from_column_slice(&[0.0, 0.8512575163133684, 0.0, 0.35, -0.5, 0.15, -0.35, 0.5, -0.15])
    }

    fn biped_scene(model: &RobotModel, temps: &[f64], weights: Vec<f64>) -> ThermalScene {
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
        ThermalScene::new(nodes, weights, 20.0).unwrap()
    }

    fn double(model: &RobotModel) -> ContactConfig {
        ContactConfig::new(model, "double", &["l_sole", "r_sole"])
            .unwrap()
            .anchored_at(model, &stance())
    }

    #[test]
    fn free_basis_spans_everything() {
        let basis = nullspace_basis(&DMatrix::identity(4, 4));
        assert_eq!(basis.len(), 4);
    }

    #[test]
    fn double_support_basis_is_orthonormal_and_tangent() {
        let m = fixture("biped.toml");
        let c = double(&m);
        let s = ConstrainedStatics::evaluate(&m, &stance(), &c).unwrap();
        let basis = nullspace_basis(&s.nullspace);
        assert_eq!(basis.len(), 3);
        assert_eq!(basis.len(), m.dofs() - rank(&s.jacobian, RANK_TOLERANCE));
        for (i, u) in basis.iter().enumerate() {
            assert!((&s.jacobian * u).amax() <= 1e-9);
            for (j, v) in basis.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((u.dot(v) - expect).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn basis_gradient_lies_in_nullspace_range() {
        let m = fixture("biped.toml");
        let c = double(&m);
        let scene = biped_scene(&m, &[60.0, 60.0, 60.0, 78.0, 80.0, 78.0], vec![1.0, 1.0, 1.0, 1e3, 1e3, 1e3]);
        let obj = ThermalPotential::new(&scene, &m).unwrap();
        let s = ConstrainedStatics::evaluate(&m, &stance(), &c).unwrap();
        let g = gradient_nullspace_basis(&obj, &stance(), &c, &s.nullspace, 1e-6).unwrap();
        let outside = (DMatrix::identity(9, 9) - &s.nullspace) * &g;
        assert!(outside.amax() <= 1e-9 * g.amax().max(1.0));
    }

    #[test]
    fn free_projected_gradient_is_plain_forward_difference() {
        let m = fixture("pendulum.toml");
        let obj = EffortPotential::new(&m);
        let c = ContactConfig::free("none");
        let q = DVector::from_element(1, 0.4);
        let h = 1e-6;
        let g = gradient_projected(&obj, &q, &c, &DMatrix::identity(1, 1), h).unwrap();
        let fd = (obj.value(&DVector::from_element(1, 0.4 + h), &c).unwrap() - obj.value(&q, &c).unwrap()) / h;
        assert_eq!(g[0], fd);
    }

    #[test]
    fn single_direction_basis_gradient() {
        let m = fixture("pendulum.toml");
        let obj = EffortPotential::new(&m);
        let c = ContactConfig::free("none");
        let q = DVector::from_element(1, 0.4);
        let g = gradient_nullspace_basis(&obj, &q, &c, &DMatrix::identity(1, 1), 1e-6).unwrap();
        let f0 = obj.value(&q, &c).unwrap();
        let basis = nullspace_basis(&DMatrix::identity(1, 1));
        let slope = (obj.value(&(&q + &basis[0] * 1e-6), &c).unwrap() - f0) / 1e-6;
        assert_eq!(g, &basis[0] * slope);
    }

    #[test]
    fn minimizer_start_stops_after_one_iteration() {
        let m = fixture("pendulum.toml");
        let obj = EffortPotential::new(&m);
        let settings = DescentSettings {
            grad_tol: 1e-3,
            ..DescentSettings::default()
        };
        let q0 = DVector::from_element(1, 0.0);
        let out = descend(&obj, &q0, &ContactConfig::free("none"), &settings).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.termination, Termination::Converged);
        assert_eq!(out.q, q0);
    }

    #[test]
    fn pendulum_descends_towards_hanging() {
        let m = fixture("pendulum.toml");
        let obj = EffortPotential::new(&m);
        let q0 = DVector::from_element(1, 0.5);
        let out = descend(&obj, &q0, &ContactConfig::free("none"), &DescentSettings::default()).unwrap();
        assert!(out.q[0].abs() < 0.02);
        for w in out.trace.windows(2) {
            assert!(w[1].f < w[0].f);
            assert!(w[1].max_step <= 0.02 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn off_contact_start_is_rejected() {
        let m = fixture("biped.toml");
        let mut q = stance();
        q[1] += 0.01;
        let obj = EffortPotential::new(&m);
        assert!(matches!(
            descend(&obj, &q, &double(&m), &DescentSettings::default()),
            Err(Error::InvalidStart { .. })
        ));
    }

    #[test]
    fn weight_scale_does_not_change_iterates() {
        let m = fixture("biped.toml");
        let c = ContactConfig::new(&m, "left", &["l_sole"]).unwrap().anchored_at(&m, &stance());
        let temps = [60.0, 68.0, 60.0, 78.0, 80.0, 78.0];
        let w = vec![1.0, 1.0, 1.0, 1e3, 1e3, 1e3];
        let settings = DescentSettings {
            max_iters: 15,
            ..DescentSettings::default()
        };
        let a = ThermalPotential::new(&biped_scene(&m, &temps, w.clone()), &m).unwrap();
        let b = ThermalPotential::new(&biped_scene(&m, &temps, w.iter().map(|x| x * 7.5).collect()), &m).unwrap();
        let ra = descend(&a, &stance(), &c, &settings).unwrap();
        let rb = descend(&b, &stance(), &c, &settings).unwrap();
        assert_eq!(ra.q, rb.q);
        assert_eq!(ra.iterations, rb.iterations);
    }

    #[test]
    fn settings_validation() {
        let bad = DescentSettings {
            h: 0.0,
            ..DescentSettings::default()
        };
        assert!(bad.validate().is_err());
        let bad = DescentSettings {
            max_iters: 0,
            ..DescentSettings::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let m = fixture("pendulum.toml");
        let obj = EffortPotential::new(&m);
        let out = descend(&obj, &DVector::from_element(1, 0.3), &ContactConfig::free("none"), &DescentSettings::default()).unwrap();
        let mut buf = Vec::new();
        out.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iterate,f,max_dq,pivot_torque"));
        assert_eq!(lines.count(), out.trace.len());
    }
}
