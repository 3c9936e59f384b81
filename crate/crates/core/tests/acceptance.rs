//! Acceptance checks, one PASS/FAIL line each.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use actuator_thermal::dynamics::{
    actuation_selector, gravity_vector, potential_energy, ConstrainedStatics, ContactConfig, StaticsSolution,
};
use actuator_thermal::recovery::{
    compare_modes, min_effort_strategy, run_recovery, select_strategy, update_cost_matrix, RecoveryMode,
};
use actuator_thermal::sysid::{fit, open_loop_prediction, FitConfig};
use actuator_thermal::thermal_core::{predict_temperature, steady_state_temperature, step_euler};
use actuator_thermal::thermal_ik::{
    descend, gradient_nullspace_basis, gradient_projected, nullspace_basis, DescentOutcome, DescentSettings,
    EffortPotential, ThermalPotential,
};
use actuator_thermal::ThermalParams;
use common::*;
use nalgebra::{DMatrix, DVector};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn parameter_recovery() -> Check {
    let start = Instant::now();
    let (log, _) = oracle_telemetry(11);
    let (p, report) = fit(&log, "knee_core", &FitConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let truth = oracle_params();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let errs = [
        rel(p.rc_time_constant, truth.rc_time_constant),
        rel(p.beta_r, truth.beta_r),
        rel(p.beta_bias_r, truth.beta_bias_r),
    ];
    let detail = format!(
        "RC {:.2} βR {:.5} bias {:.5} (rel err {:.3}/{:.3}/{:.3}), RMSE {:.3} °C, {:.1} s",
        p.rc_time_constant, p.beta_r, p.beta_bias_r, errs[0], errs[1], errs[2], report.open_loop_rmse, elapsed
    );
    ensure(errs.iter().all(|&e| e <= 0.05), format!("parameter error above 5%: {detail}"))?;
    ensure(report.open_loop_rmse <= 0.5, format!("RMSE above 0.5 °C: {detail}"))?;
    ensure(elapsed <= 30.0, format!("runtime above 30 s: {detail}"))?;
    Ok(detail)
}

fn open_loop_tracking() -> Check {
    let (log, truth) = oracle_telemetry(11);
    let (p, _) = fit(&log, "knee_core", &FitConfig::default()).map_err(|e| e.to_string())?;
    let predicted = open_loop_prediction(&p, &log, "knee").map_err(|e| e.to_string())?;
    ensure(predicted[0] == 25.0, "prediction does not start at ambient")?;
    let worst = predicted.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(worst <= 2.0, format!("max deviation {worst:.3} °C"))?;
    Ok(format!("max |prediction − truth| {worst:.3} °C over {} samples", truth.len()))
}

fn integrator_fidelity() -> Check {
    let p = ThermalParams::new(120.0, 0.002, 0.01, 27.0).unwrap();
    let dt = p.rc_time_constant / 100.0;
    let mut worst_end = 0.0f64;
    for &(t0, effort) in &[(25.0, 100.0), (25.0, 150.0), (60.0, 0.0), (40.0, 80.0)] {
        let mut t = t0;
        for _ in 0..500 {
            t = step_euler(&p, t, effort, dt).unwrap();
        }
        let exact = predict_temperature(&p, t0, effort, 5.0 * p.rc_time_constant).unwrap();
        worst_end = worst_end.max((t - exact).abs() / exact.abs());
    }
    ensure(worst_end <= 1e-3, format!("relative error {worst_end:.2e} at 5·RC"))?;
    let mut worst_ss = 0.0f64;
    for effort in [0.0, 50.0, 120.0] {
        let ss = steady_state_temperature(&p, effort).unwrap();
        let far = predict_temperature(&p, 25.0, effort, 1e6).unwrap();
        let mut t = ss;
        for _ in 0..1000 {
            t = step_euler(&p, t, effort, dt).unwrap();
        }
        worst_ss = worst_ss.max((far - ss).abs()).max((t - ss).abs());
    }
    ensure(worst_ss <= 1e-9, format!("steady-state error {worst_ss:.2e}"))?;
    Ok(format!("5·RC relative error {worst_end:.2e}, steady-state error {worst_ss:.1e}"))
}

fn statics_identities() -> Check {
    let model = biped();
    let n = model.dofs();
    let weight = model.total_mass() * model.gravity;
    let sa = actuation_selector(&model);
    let mut worst = [0.0f64; 5];
    for (frames, seed) in [(&["l_sole", "r_sole"][..], 1), (&["l_sole"][..], 2), (&["r_sole"][..], 3)] {
        let c = contact(&model, frames);
        for q in random_stances(&model, frames, 100, seed) {
            let s = ConstrainedStatics::evaluate(&model, &q, &c).map_err(|e| e.to_string())?;
            let sol = StaticsSolution::solve(&model, &q, &c).map_err(|e| e.to_string())?;
            let nc = &s.nullspace;
            worst[0] = worst[0].max((nc * nc - nc).norm());
            worst[1] = worst[1].max((&s.jacobian * nc).norm());
            let x = &sa * nc;
            worst[2] = worst[2].max((nc.transpose() * &s.gravity - x.transpose() * &sol.torque).norm());
            ensure(s.contact_rank == s.jacobian.nrows(), "contact Jacobian lost row rank")?;
            let balance = &s.gravity - sa.transpose() * &sol.torque - s.jacobian.transpose() * &sol.reactions;
            worst[3] = worst[3].max(balance.norm());
            let vertical: f64 = (0..frames.len()).map(|k| sol.reactions[3 * k + 1]).sum();
            worst[4] = worst[4].max((vertical - weight).abs());
            ensure(nc.nrows() == n, "projector shape")?;
        }
    }
    let detail = format!(
        "‖N²−N‖ {:.1e}, ‖JN‖ {:.1e}, static {:.1e}, balance {:.1e}, vertical {:.1e} N",
        worst[0], worst[1], worst[2], worst[3], worst[4]
    );
    ensure(
        worst[0] <= 1e-9 && worst[1] <= 1e-9 && worst[2] <= 1e-6 && worst[3] <= 1e-6 && worst[4] <= 1e-6,
        detail.clone(),
    )?;
    Ok(detail + " over 300 stances")
}

fn gradient_cross_check() -> Check {
    let model = biped();
    let scene = biped_scene(&model, &[60.0, 68.0, 60.0, 78.0, 80.0, 78.0], vec![1.0, 1.0, 1.0, 1e3, 1e3, 1e3], 20.0);
    let objective = ThermalPotential::new(&scene, &model).map_err(|e| e.to_string())?;
    let h = DescentSettings::default().h;
    let mut worst = 0.0f64;
    let mut stances = random_stances(&model, &["l_sole", "r_sole"], 10, 21);
    stances.extend(random_stances(&model, &["l_sole"], 10, 22));
    for (i, q) in stances.iter().enumerate() {
        let c = if i < 10 { contact(&model, &["l_sole", "r_sole"]) } else { contact(&model, &["l_sole"]) };
        let s = ConstrainedStatics::evaluate(&model, q, &c).map_err(|e| e.to_string())?;
        let basis = nullspace_basis(&s.nullspace);
        let v = DMatrix::from_columns(&basis);
        let projector = &v * v.transpose();
        let gp = gradient_projected(&objective, q, &c, &s.nullspace, h).map_err(|e| e.to_string())?;
        let gb = gradient_nullspace_basis(&objective, q, &c, &s.nullspace, h).map_err(|e| e.to_string())?;
        worst = worst.max(rel_err(&(&projector * gp), &(&projector * gb)));
    }
    ensure(worst <= 1e-4, format!("gradient relative disagreement {worst:.2e}"))?;
    let mut worst_g = 0.0f64;
    for q in random_stances(&model, &["l_sole"], 20, 23) {
        let g = gravity_vector(&model, &q);
        let eps = 1e-6;
        let fd = DVector::from_iterator(
            q.len(),
            (0..q.len()).map(|i| {
                let mut a = q.clone();
                let mut b = q.clone();
                a[i] += eps;
                b[i] -= eps;
                (potential_energy(&model, &a) - potential_energy(&model, &b)) / (2.0 * eps)
            }),
        );
        worst_g = worst_g.max(rel_err(&fd, &g));
    }
    ensure(worst_g <= 1e-5, format!("gravity vs potential relative error {worst_g:.2e}"))?;
    Ok(format!("gradient agreement {worst:.2e}, gravity vs ∂U/∂q {worst_g:.2e} (20 stances each)"))
}

fn check_contract(label: &str, out: &DescentOutcome, s: &DescentSettings, model_block: impl Fn(usize) -> f64) -> Result<(), String> {
    for w in out.trace.windows(2) {
        ensure(w[1].f < w[0].f, format!("{label}: f not strictly decreasing at iterate {}", w[1].iterate))?;
    }
    for e in &out.trace[1..] {
        ensure(e.block_steps[0] <= model_block(0) * (1.0 + 1e-12), format!("{label}: actuated step {}", e.block_steps[0]))?;
        ensure(e.block_steps[1] <= model_block(1) * (1.0 + 1e-12), format!("{label}: linear step {}", e.block_steps[1]))?;
        ensure(e.block_steps[2] <= model_block(2) * (1.0 + 1e-12), format!("{label}: rotary step {}", e.block_steps[2]))?;
    }
    ensure(out.drift <= 1e-4, format!("{label}: drift {:.2e}", out.drift))?;
    ensure(out.iterations <= s.max_iters, format!("{label}: {} iterations", out.iterations))?;
    Ok(())
}

fn descent_contract() -> Check {
    let s = DescentSettings::default();
    let bound = |b: usize| [s.delta_actuated, s.delta_base_linear, s.delta_base_rotary][b];
    let mut runs = 0;
    let mut iters = 0;
    let model = biped();
    let scenes = [
        biped_scene(&model, &[60.0, 68.0, 60.0, 78.0, 80.0, 78.0], vec![1.0, 1.0, 1.0, 1e3, 1e3, 1e3], 20.0),
        biped_scene(&model, &[80.0, 80.0, 80.0, 60.0, 60.0, 60.0], vec![1e3, 1e3, 1e3, 1.0, 1.0, 1.0], 20.0),
        biped_scene(&model, &[50.0; 6], vec![1.0; 6], 60.0),
    ];
    for frames in [&["l_sole", "r_sole"][..], &["l_sole"][..], &["r_sole"][..]] {
        let c = anchored(&model, frames);
        let mut outs = Vec::new();
        for scene in &scenes {
            let obj = ThermalPotential::new(scene, &model).map_err(|e| e.to_string())?;
            outs.push(("thermal", descend(&obj, &q_nominal(), &c, &s).map_err(|e| e.to_string())?));
        }
        outs.push(("effort", descend(&EffortPotential::new(&model), &q_nominal(), &c, &s).map_err(|e| e.to_string())?));
        for (kind, out) in outs {
            check_contract(&format!("{kind} {}", frames.join("+")), &out, &s, bound)?;
            runs += 1;
            iters += out.iterations;
        }
    }
    let torso = common::model("torso_pair.toml");
    let free = ContactConfig::free("none");
    let q0 = DVector::from_column_slice(&[0.4, -0.3]);
    let out = descend(&EffortPotential::new(&torso), &q0, &free, &s).map_err(|e| e.to_string())?;
    check_contract("torso_pair", &out, &s, bound)?;
    runs += 1;
    iters += out.iterations;
    let pendulum = common::model("pendulum.toml");
    let out = descend(&EffortPotential::new(&pendulum), &DVector::from_column_slice(&[0.7]), &free, &s)
        .map_err(|e| e.to_string())?;
    check_contract("pendulum", &out, &s, bound)?;
    runs += 1;
    iters += out.iterations;

    let scenario = hot_right_leg();
    let report = run_recovery(&scenario.setup, RecoveryMode::Switching).map_err(|e| e.to_string())?;
    for d in &report.decisions {
        ensure(d.candidate_f.iter().flatten().all(|f| f.is_finite()), "non-finite candidate cost")?;
    }
    Ok(format!("{runs} descents ({iters} iterates) monotone, step-bounded, drift ≤ 1e-4"))
}

fn schedule_shape() -> Check {
    let scenario = hot_right_leg();
    let report = run_recovery(&scenario.setup, RecoveryMode::Switching).map_err(|e| e.to_string())?;
    let contacts = report.strategy_contacts();
    ensure(report.recovered, format!("switching did not recover: {contacts:?}"))?;
    let first_left = contacts.iter().position(|c| *c == "left_support").ok_or("no left-support phase")?;
    let double_after = contacts[first_left..].iter().any(|c| *c == "double_support");
    ensure(double_after, format!("no double support after left support: {contacts:?}"))?;
    let last = report.schedule.last().ok_or("empty schedule")?;
    ensure(!last.strategy && last.contact == "double_support", "schedule does not end at the nominal stance")?;
    let g = report.group_index("right_leg").ok_or("no right_leg group")?;
    let mean_rate = |name: &str| {
        let (sum, dur) = report
            .schedule
            .iter()
            .filter(|e| e.strategy && e.contact == name)
            .filter_map(|e| report.mean_group_rate(g, e).map(|r| (r * (e.end - e.start), e.end - e.start)))
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        sum / dur
    };
    let (left, double) = (mean_rate("left_support"), mean_rate("double_support"));
    ensure(left < double, format!("right-leg norm rate {left:.3} (left) vs {double:.3} (double)"))?;
    Ok(format!(
        "schedule {}; right-leg norm rate {left:.3} °C/s in left support vs {double:.3} °C/s in double support",
        contacts.join(" → ")
    ))
}

fn comparison_inequality() -> Check {
    let scenario = hot_right_leg();
    let start = Instant::now();
    let cmp = compare_modes(&scenario.setup, Some("right_leg")).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let (ts, tm) = cmp.group_time_to_safe();
    let (ts, tm) = (ts.ok_or("switching never safe")?, tm.ok_or("min-effort never safe")?);
    let (ps, pm) = cmp.peak_cooling_rates();
    let detail = format!(
        "time-to-safe {ts:.1} s vs {tm:.1} s, peak cooling {:.4} vs {:.4} °C/s, {elapsed:.1} s wall",
        ps.abs(),
        pm.abs()
    );
    ensure(ts < tm, format!("switching not faster: {detail}"))?;
    ensure(ps.abs() > pm.abs(), format!("peak rate not larger: {detail}"))?;
    ensure(elapsed <= 60.0, format!("too slow: {detail}"))?;
    Ok(detail)
}

fn policy_properties() -> Check {
    let scenario = hot_right_leg();
    let setup = &scenario.setup;
    let policy = &setup.policy;
    let thr = policy.reweight_threshold;
    let cases: [&[f64]; 4] = [
        &[thr - 1.0, thr, thr + 1e-9, 90.0, 25.0, thr + 5.0],
        &[thr; 6],
        &[100.0; 6],
        &[20.0, 30.0, 40.0, 50.0, 60.0, 70.0],
    ];
    for temps in cases {
        let w = update_cost_matrix(policy, temps);
        for (t, w) in temps.iter().zip(&w) {
            let expect = if *t > thr { policy.hot_weight } else { policy.nominal_weight };
            ensure(*w == expect, format!("weight {w} at {t} °C"))?;
        }
    }
    let temps = setup.scene.temperatures();
    let mut scene = setup.scene.clone();
    scene.weights = update_cost_matrix(policy, &temps);
    let choice = select_strategy(policy, &scene, &setup.model).map_err(|e| e.to_string())?;
    let objective = ThermalPotential::new(&scene, &setup.model).map_err(|e| e.to_string())?;
    for (i, c) in policy.contacts.iter().enumerate() {
        let out = descend(&objective, &policy.q_nominal, c, &policy.descent).map_err(|e| e.to_string())?;
        let f = out.f;
        ensure(choice.f <= f, format!("contact {} reaches {f} below chosen {}", c.name, choice.f))?;
        let cand = choice.candidates[i].as_ref().ok_or("missing candidate")?;
        ensure(cand.f == f, format!("candidate {} cost {} vs enumerated {f}", c.name, cand.f))?;
    }
    let mut other = setup.clone();
    other.scene.set_temperatures(&[99.0, 20.0, 85.0, 76.0, 30.0, 95.0]);
    other.scene.weights = vec![5.0, 1.0, 2.0, 7.0, 1.0, 3.0];
    other.scene.horizon = 3.0;
    let (ia, a) = min_effort_strategy(policy, &setup.model).map_err(|e| e.to_string())?;
    let (ib, b) = min_effort_strategy(&other.policy, &other.model).map_err(|e| e.to_string())?;
    let same = ia == ib && a.q.iter().zip(b.q.iter()).all(|(x, y)| x.to_bits() == y.to_bits()) && a.f.to_bits() == b.f.to_bits();
    ensure(same, "min-effort stance depends on the thermal scene")?;
    let ra = run_recovery(setup, RecoveryMode::MinEffort).map_err(|e| e.to_string())?;
    let rb = run_recovery(&other, RecoveryMode::MinEffort).map_err(|e| e.to_string())?;
    let contacts = |r: &actuator_thermal::recovery::RecoveryReport| r.decisions.iter().map(|d| d.contact.clone()).collect::<Vec<_>>();
    ensure(contacts(&ra).iter().chain(&contacts(&rb)).all(|c| *c == policy.contacts[ia].name), "min-effort run switched stance")?;
    Ok(format!(
        "threshold rule exact on 4 vectors; argmin over {} contacts = {}; min-effort bitwise scene-independent",
        policy.contacts.len(),
        policy.contacts[choice.contact].name
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("parameter recovery", parameter_recovery),
        ("open-loop prediction", open_loop_tracking),
        ("integrator fidelity", integrator_fidelity),
        ("statics identities", statics_identities),
        ("gradient cross-check", gradient_cross_check),
        ("descent contract", descent_contract),
        ("recovery schedule shape", schedule_shape),
        ("switching vs min-effort", comparison_inequality),
        ("policy properties", policy_properties),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
