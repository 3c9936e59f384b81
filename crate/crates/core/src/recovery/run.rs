use std::io::Write;

use serde::{Deserialize, Serialize};

use super::plant::{default_step, simulate_plant, Command, PlantSample, PlantState};
use super::policy::{
    min_effort_strategy, select_strategy_cached, update_cost_matrix, RecoveryMode, RecoveryPolicy, StrategyCache,
};
use crate::dynamics::{Configuration, ContactConfig, RobotModel};
use crate::error::{Error, Result};
use crate::sysid::derivative_filter;
use crate::thermal_ik::{potential, ThermalScene};

/// Nodes whose temperatures are summarized together (e.g. one leg).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimbGroup {
    pub name: String,
    pub nodes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Start,
    Transition,
    Hold,
    Return,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoverySample {
    pub time: f64,
    pub temperatures: Vec<f64>,
    pub group_norms: Vec<f64>,
    pub contact: String,
    pub phase: Phase,
    /// `TᵀQT` at the plant configuration under the current `Q` and horizon.
    pub f: f64,
}

/// One held strategy, or the final return to the nominal configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub start: f64,
    pub end: f64,
    pub contact: String,
    /// `false` for the final return to the nominal configuration.
    pub strategy: bool,
}

/// One re-evaluation of the policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub time: f64,
    pub contact: String,
    pub horizon: f64,
    /// Objective per candidate contact (`None` where its descent failed).
    pub candidate_f: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryReport {
    pub mode: RecoveryMode,
    pub node_ids: Vec<String>,
    pub group_names: Vec<String>,
    pub contact_names: Vec<String>,
    pub samples: Vec<RecoverySample>,
    pub schedule: Vec<ScheduleEntry>,
    pub decisions: Vec<Decision>,
    /// First time each node is below the safe threshold, s from start.
    pub time_to_safe_nodes: Vec<Option<f64>>,
    /// First time every node of each group is below the safe threshold.
    pub time_to_safe_groups: Vec<Option<f64>>,
    /// Every node ended below the safe threshold.
    pub recovered: bool,
    pub timed_out: bool,
    pub end_time: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    mode: String,
    recovered: bool,
    timed_out: bool,
    end_time: f64,
    time_to_safe: Vec<TimeToSafe<'a>>,
    groups: Vec<TimeToSafe<'a>>,
    schedule: &'a [ScheduleEntry],
    decisions: &'a [Decision],
}

#[derive(Serialize)]
struct TimeToSafe<'a> {
    name: &'a str,
    /// Absent when never reached.
    #[serde(skip_serializing_if = "Option::is_none")]
    seconds: Option<f64>,
}

impl RecoveryReport {
    /// Sequence of contacts held as strategies, in order.
    pub fn strategy_contacts(&self) -> Vec<&str> {
        self.schedule
            .iter()
            .filter(|e| e.strategy)
            .map(|e| e.contact.as_str())
            .collect()
    }

    pub fn group_index(&self, name: &str) -> Option<usize> {
        self.group_names.iter().position(|g| g == name)
    }

    /// Group-norm trace of one group.
    pub fn group_trace(&self, group: usize) -> (Vec<f64>, Vec<f64>) {
        self.samples
            .iter()
            .map(|s| (s.time, s.group_norms[group]))
            .unzip()
    }

    /// Mean rate of change of a group norm over a schedule entry, °C/s.
    pub fn mean_group_rate(&self, group: usize, entry: &ScheduleEntry) -> Option<f64> {
        let inside: Vec<&RecoverySample> = self
            .samples
            .iter()
            .filter(|s| s.time >= entry.start - 1e-9 && s.time <= entry.end + 1e-9)
            .collect();
        let (first, last) = (inside.first()?, inside.last()?);
        if last.time <= first.time {
            return None;
        }
        Some((last.group_norms[group] - first.group_norms[group]) / (last.time - first.time))
    }

    /// CSV trace: time, per-node temperature, per-group norm, contact,
    /// phase, f.
    pub fn write_trace_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["time_s".to_string()];
        header.extend(self.node_ids.iter().map(|n| format!("{n}_temp_c")));
        header.extend(self.group_names.iter().map(|g| format!("{g}_norm_c")));
        header.extend(["contact".to_string(), "phase".to_string(), "f".to_string()]);
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![s.time.to_string()];
            row.extend(s.temperatures.iter().map(f64::to_string));
            row.extend(s.group_norms.iter().map(f64::to_string));
            row.push(s.contact.clone());
            row.push(phase_name(s.phase).to_string());
            row.push(s.f.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    /// Summary document: time-to-safe per node and group, contact schedule
    /// and policy decisions.
    pub fn summary_toml(&self) -> String {
        let summary = Summary {
            mode: self.mode.to_string(),
            recovered: self.recovered,
            timed_out: self.timed_out,
            end_time: self.end_time,
            time_to_safe: named(&self.node_ids, &self.time_to_safe_nodes),
            groups: named(&self.group_names, &self.time_to_safe_groups),
            schedule: &self.schedule,
            decisions: &self.decisions,
        };
        toml::to_string(&summary).expect("summary serializes")
    }
}

fn named<'a>(names: &'a [String], values: &[Option<f64>]) -> Vec<TimeToSafe<'a>> {
    names
        .iter()
        .zip(values)
        .map(|(n, &v)| TimeToSafe { name: n, seconds: v })
        .collect()
}

fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::Start => "start",
        Phase::Transition => "transition",
        Phase::Hold => "hold",
        Phase::Return => "return",
    }
}

/// Everything a recovery run needs.
#[derive(Clone, Debug)]
pub struct RecoverySetup {
    pub model: RobotModel,
    /// Node parameters and initial temperatures; weights and horizon are
    /// overwritten by the policy.
    pub scene: ThermalScene,
    pub policy: RecoveryPolicy,
    pub groups: Vec<LimbGroup>,
    /// Plant step, s; `None` uses `min RC / 100`.
    pub plant_step: Option<f64>,
}

impl RecoverySetup {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.scene.bind(&self.model)?;
        self.policy.validate()?;
        for g in &self.groups {
            self.group_indices(g)?;
        }
        if let Some(dt) = self.plant_step {
            let bound = default_step(&self.scene);
            if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
                return Err(Error::invalid(format!("plant step {dt} s must lie in (0, {bound}] (min RC / 100)")));
            }
        }
        Ok(())
    }

    fn group_indices(&self, group: &LimbGroup) -> Result<Vec<usize>> {
        let ids = self.scene.node_ids();
        group
            .nodes
            .iter()
            .map(|n| {
                ids.iter().position(|i| i == n).ok_or_else(|| Error::UnknownNode {
                    node: n.clone(),
                    available: ids.clone(),
                })
            })
            .collect()
    }

    pub fn step(&self) -> f64 {
        self.plant_step.unwrap_or_else(|| default_step(&self.scene))
    }

    /// Plant at rest in the nominal configuration with the scene's initial
    /// temperatures.
    pub fn initial_plant(&self) -> PlantState {
        PlantState {
            q: self.policy.q_nominal.clone(),
            temperatures: self.scene.temperatures(),
            time: 0.0,
            contact: self.policy.nominal().name.clone(),
        }
    }

    /// Group containing the hottest node of the initial plant.
    pub fn hottest_group(&self) -> Option<usize> {
        let temps = self.scene.temperatures();
        let hottest = (0..temps.len()).max_by(|&a, &b| temps[a].total_cmp(&temps[b]))?;
        let ids = self.scene.node_ids();
        self.groups.iter().position(|g| g.nodes.iter().any(|n| *n == ids[hottest]))
    }
}

struct Recorder<'a> {
    setup: &'a RecoverySetup,
    groups: Vec<Vec<usize>>,
    samples: Vec<RecoverySample>,
    weights: Vec<f64>,
    horizon: f64,
}

impl Recorder<'_> {
    fn record(&mut self, time: f64, temperatures: &[f64], q: &Configuration, contact: &ContactConfig, phase: Phase) {
        let group_norms = self
            .groups
            .iter()
            .map(|g| g.iter().map(|&i| temperatures[i] * temperatures[i]).sum::<f64>().sqrt())
            .collect();
        let mut scene = self.setup.scene.clone();
        scene.set_temperatures(temperatures);
        scene.weights = self.weights.clone();
        scene.horizon = self.horizon;
        let f = potential(&scene, &self.setup.model, q, contact).unwrap_or(f64::NAN);
        self.samples.push(RecoverySample {
            time,
            temperatures: temperatures.to_vec(),
            group_norms,
            contact: contact.name.clone(),
            phase,
            f,
        });
    }

    fn record_trace(&mut self, trace: &[PlantSample], commands: &[Command<'_>], phase: Phase) {
        for (s, c) in trace.iter().zip(commands) {
            self.record(s.time, &s.temperatures, &c.q, c.contact, phase);
        }
    }
}

fn all_safe(policy: &RecoveryPolicy, temperatures: &[f64]) -> bool {
    temperatures.iter().all(|&t| t < policy.safe_threshold)
}

/// Linear path from `from` to `to` in `steps` samples (ending at `to`),
/// each restored onto `contact`.
fn interpolate(
    model: &RobotModel,
    from: &Configuration,
    to: &Configuration,
    steps: usize,
    contact: &ContactConfig,
) -> Vec<Configuration> {
    (1..=steps)
        .map(|k| {
            let s = k as f64 / steps as f64;
            let q = from + (to - from) * s;
            let (mut q, _) = contact.restore(model, &q, 1e-12, 30);
            model.clamp_to_limits(&mut q);
            q
        })
        .collect()
}

/// Run the recovery loop on the quasi-static plant.
///
/// At every re-evaluation `Q` is reweighted from the sensed temperatures,
/// a target stance is chosen (nested argmin over contacts in switching
/// mode, the fixed minimum-effort stance otherwise) and reached through
/// the nominal configuration. Targets are held for one horizon before the
/// next re-evaluation. Once every node is safe the plant returns to the
/// nominal configuration. Exceeding the simulated-time budget ends the
/// run with `timed_out` set.
pub fn run_recovery(setup: &RecoverySetup, mode: RecoveryMode) -> Result<RecoveryReport> {
    setup.validate()?;
    let policy = &setup.policy;
    let model = &setup.model;
    let mut plant = setup.initial_plant();
    if !plant.temperatures.iter().any(|&t| t > policy.warning_threshold) {
        return Err(Error::invalid(format!(
            "no node is above the warning threshold of {} °C",
            policy.warning_threshold
        )));
    }
    let dt = setup.step();
    let groups = setup
        .groups
        .iter()
        .map(|g| setup.group_indices(g))
        .collect::<Result<Vec<_>>>()?;
    let mut rec = Recorder {
        setup,
        groups,
        samples: Vec::new(),
        weights: update_cost_matrix(policy, &plant.temperatures),
        horizon: policy.horizon_for(&setup.scene, &plant.temperatures),
    };
    rec.record(0.0, &plant.temperatures, &plant.q, policy.nominal(), Phase::Start);

    let min_effort = match mode {
        RecoveryMode::MinEffort => Some(min_effort_strategy(policy, model)?),
        RecoveryMode::Switching => None,
    };
    let mut cache = StrategyCache::new();
    let mut schedule: Vec<ScheduleEntry> = Vec::new();
    let mut decisions = Vec::new();
    let mut current: Option<(usize, Configuration)> = None;
    let mut contact_idx = policy.nominal_contact;
    let mut timed_out = false;
    let half_steps = (policy.transition_duration / 2.0 / dt).ceil() as usize;

    loop {
        if all_safe(policy, &plant.temperatures) {
            break;
        }
        if plant.time >= policy.time_budget {
            timed_out = true;
            break;
        }
        rec.weights = update_cost_matrix(policy, &plant.temperatures);
        rec.horizon = policy.horizon_for(&setup.scene, &plant.temperatures);
        let (target_contact, target_q, candidate_f) = match &min_effort {
            Some((c, out)) => (*c, out.q.clone(), vec![]),
            None => {
                let mut scene = setup.scene.clone();
                scene.set_temperatures(&plant.temperatures);
                scene.weights = rec.weights.clone();
                scene.horizon = rec.horizon;
                let choice = select_strategy_cached(policy, &scene, model, Some(&mut cache))?;
                let fs = choice.candidates.iter().map(|c| c.as_ref().map(|c| c.f)).collect();
                (choice.contact, choice.q, fs)
            }
        };
        decisions.push(Decision {
            time: plant.time,
            contact: policy.contacts[target_contact].name.clone(),
            horizon: rec.horizon,
            candidate_f,
        });

        let unchanged = current
            .as_ref()
            .is_some_and(|(c, q)| *c == target_contact && *q == target_q);
        if !unchanged {
            if let Some(last) = schedule.last_mut() {
                last.end = plant.time;
            }
            transition(
                setup,
                &mut plant,
                &mut rec,
                contact_idx,
                target_contact,
                &target_q,
                half_steps,
                dt,
                Phase::Transition,
            )?;
            contact_idx = target_contact;
            current = Some((target_contact, target_q.clone()));
            schedule.push(ScheduleEntry {
                start: plant.time,
                end: plant.time,
                contact: policy.contacts[target_contact].name.clone(),
                strategy: true,
            });
        }

        let hold_steps = ((rec.horizon / dt).round() as usize).max(1);
        let contact = &policy.contacts[contact_idx];
        for _ in 0..hold_steps {
            let cmd = [Command {
                q: plant.q.clone(),
                contact,
            }];
            let trace = simulate_plant(&mut plant, &cmd, dt, &setup.scene, model)?;
            rec.record_trace(&trace, &cmd, Phase::Hold);
            if all_safe(policy, &plant.temperatures) || plant.time >= policy.time_budget {
                break;
            }
        }
        if let Some(last) = schedule.last_mut() {
            last.end = plant.time;
        }
    }

    if !timed_out {
        let start = plant.time;
        let q_nom = policy.q_nominal.clone();
        transition(
            setup,
            &mut plant,
            &mut rec,
            contact_idx,
            policy.nominal_contact,
            &q_nom,
            half_steps,
            dt,
            Phase::Return,
        )?;
        schedule.push(ScheduleEntry {
            start,
            end: plant.time,
            contact: policy.nominal().name.clone(),
            strategy: false,
        });
    }

    let samples = rec.samples;
    let nodes = setup.scene.nodes.len();
    let time_to_safe_nodes = (0..nodes)
        .map(|i| {
            samples
                .iter()
                .find(|s| s.temperatures[i] < policy.safe_threshold)
                .map(|s| s.time)
        })
        .collect();
    let time_to_safe_groups = rec
        .groups
        .iter()
        .map(|g| {
            samples
                .iter()
                .find(|s| g.iter().all(|&i| s.temperatures[i] < policy.safe_threshold))
                .map(|s| s.time)
        })
        .collect();
    Ok(RecoveryReport {
        mode,
        node_ids: setup.scene.node_ids(),
        group_names: setup.groups.iter().map(|g| g.name.clone()).collect(),
        contact_names: policy.contacts.iter().map(|c| c.name.clone()).collect(),
        recovered: all_safe(policy, &plant.temperatures),
        timed_out,
        end_time: plant.time,
        time_to_safe_nodes,
        time_to_safe_groups,
        schedule,
        decisions,
        samples,
    })
}

/// Move the plant from its configuration under `from_contact` through the
/// nominal configuration to `target` under `to_contact`.
#[allow(clippy::too_many_arguments)]
fn transition(
    setup: &RecoverySetup,
    plant: &mut PlantState,
    rec: &mut Recorder<'_>,
    from_contact: usize,
    to_contact: usize,
    target: &Configuration,
    half_steps: usize,
    dt: f64,
    phase: Phase,
) -> Result<()> {
    let policy = &setup.policy;
    let model = &setup.model;
    let q_nom = &policy.q_nominal;
    if half_steps == 0 {
        plant.q = target.clone();
        plant.contact = policy.contacts[to_contact].name.clone();
        return Ok(());
    }
    let legs = [
        (plant.q.clone(), q_nom.clone(), &policy.contacts[from_contact]),
        (q_nom.clone(), target.clone(), &policy.contacts[to_contact]),
    ];
    for (from, to, contact) in legs {
        if from == to {
            continue;
        }
        let commands: Vec<Command<'_>> = interpolate(model, &from, &to, half_steps, contact)
            .into_iter()
            .map(|q| Command { q, contact })
            .collect();
        let trace = simulate_plant(plant, &commands, dt, &setup.scene, model)?;
        rec.record_trace(&trace, &commands, phase);
    }
    Ok(())
}

/// Both recovery modes from the same initial plant, aligned at the start
/// of recovery.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub switching: RecoveryReport,
    pub min_effort: RecoveryReport,
    /// Group whose recovery is compared.
    pub group: usize,
    /// 0.1 Hz-filtered rate of the group norm, per mode, °C/s.
    pub switching_rate: Vec<f64>,
    pub min_effort_rate: Vec<f64>,
}

/// Cutoff of the norm-rate filter, Hz.
pub const NORM_RATE_CUTOFF: f64 = 0.1;

fn norm_rate(report: &RecoveryReport, group: usize, dt: f64) -> Result<Vec<f64>> {
    let (_, norms) = report.group_trace(group);
    derivative_filter(&norms, NORM_RATE_CUTOFF, 1.0 / dt)
}

impl Comparison {
    /// Most negative filtered norm rate of each mode: (switching, min-effort).
    pub fn peak_cooling_rates(&self) -> (f64, f64) {
        let peak = |r: &[f64]| r.iter().copied().fold(0.0f64, f64::min);
        (peak(&self.switching_rate), peak(&self.min_effort_rate))
    }

    pub fn group_time_to_safe(&self) -> (Option<f64>, Option<f64>) {
        (
            self.switching.time_to_safe_groups[self.group],
            self.min_effort.time_to_safe_groups[self.group],
        )
    }

    /// Mode that brought the compared group below the safe threshold first.
    pub fn faster(&self) -> Option<RecoveryMode> {
        match self.group_time_to_safe() {
            (Some(s), Some(m)) if s < m => Some(RecoveryMode::Switching),
            (Some(s), Some(m)) if m < s => Some(RecoveryMode::MinEffort),
            (Some(_), None) => Some(RecoveryMode::Switching),
            (None, Some(_)) => Some(RecoveryMode::MinEffort),
            _ => None,
        }
    }

    /// Aligned CSV: time, group norm and filtered rate for each mode. The
    /// shorter run is padded with empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let g = &self.switching.group_names[self.group];
        w.write_record([
            "time_s".to_string(),
            format!("switching_{g}_norm_c"),
            format!("switching_{g}_rate_c_per_s"),
            format!("min_effort_{g}_norm_c"),
            format!("min_effort_{g}_rate_c_per_s"),
        ])?;
        let (ts, ns) = self.switching.group_trace(self.group);
        let (tm, nm) = self.min_effort.group_trace(self.group);
        let rows = ts.len().max(tm.len());
        let cell = |v: Option<&f64>| v.map(f64::to_string).unwrap_or_default();
        for i in 0..rows {
            let time = ts.get(i).or(tm.get(i)).copied().unwrap_or_default();
            w.write_record([
                time.to_string(),
                cell(ns.get(i)),
                cell(self.switching_rate.get(i)),
                cell(nm.get(i)),
                cell(self.min_effort_rate.get(i)),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn summary_toml(&self) -> String {
        #[derive(Serialize)]
        struct ModeSummary {
            recovered: bool,
            timed_out: bool,
            #[serde(skip_serializing_if = "Option::is_none")]
            group_time_to_safe: Option<f64>,
            peak_cooling_rate: f64,
            schedule: Vec<String>,
        }
        #[derive(Serialize)]
        struct Doc {
            group: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            faster: Option<String>,
            switching: ModeSummary,
            min_effort: ModeSummary,
        }
        let (ps, pm) = self.peak_cooling_rates();
        let (ts, tm) = self.group_time_to_safe();
        let mode = |r: &RecoveryReport, t, p| ModeSummary {
            recovered: r.recovered,
            timed_out: r.timed_out,
            group_time_to_safe: t,
            peak_cooling_rate: p,
            schedule: r.schedule.iter().map(|e| e.contact.clone()).collect(),
        };
        let doc = Doc {
            group: self.switching.group_names[self.group].clone(),
            faster: self.faster().map(|m| m.to_string()),
            switching: mode(&self.switching, ts, ps),
            min_effort: mode(&self.min_effort, tm, pm),
        };
        toml::to_string(&doc).expect("comparison serializes")
    }
}

/// Run both modes from the setup's initial plant and compare `group`
/// (default: the group holding the hottest node).
pub fn compare_modes(setup: &RecoverySetup, group: Option<&str>) -> Result<Comparison> {
    let group = match group {
        Some(name) => setup
            .groups
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| Error::invalid(format!("unknown limb group `{name}`")))?,
        None => setup
            .hottest_group()
            .ok_or_else(|| Error::invalid("no limb group contains the hottest node"))?,
    };
    let switching = run_recovery(setup, RecoveryMode::Switching)?;
    let min_effort = run_recovery(setup, RecoveryMode::MinEffort)?;
    let dt = setup.step();
    Ok(Comparison {
        switching_rate: norm_rate(&switching, group, dt)?,
        min_effort_rate: norm_rate(&min_effort, group, dt)?,
        switching,
        min_effort,
        group,
    })
}
