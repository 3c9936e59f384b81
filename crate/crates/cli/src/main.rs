//! `athermal`: telemetry generation, thermal fitting, prediction,
//! thermal minimization and recovery experiments.

mod config;
mod exit;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use actuator_thermal::dynamics::{Configuration, ContactConfig, RobotModel};
use actuator_thermal::recovery::{compare_modes, run_recovery, scene_with, update_cost_matrix, RecoveryMode, Scenario};
use actuator_thermal::sysid::{fit, open_loop_prediction, TelemetryLog};
use actuator_thermal::thermal_ik::{descend, DescentOutcome, EffortPotential, ThermalPotential, ThermalScene};
use actuator_thermal::{Error, ThermalParams};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use config::RunConfig;
use exit::Outcome;

#[derive(Parser, Debug)]
#[command(name = "athermal", version, about = "Actuator thermal modeling and thermal recovery experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Robot model file; overrides the model referenced by a scenario.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Scenario file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Settings overrides (TOML with optional [fit], [descent],
    /// [telemetry] and [policy] tables).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Simulate squat-stand telemetry for every node of a scenario.
    Generate,
    /// Fit thermal parameters per node from a telemetry CSV.
    Fit {
        /// Telemetry CSV.
        #[arg(long)]
        log: PathBuf,
        /// Nodes to fit (default: every node in the log).
        #[arg(long, value_delimiter = ',')]
        nodes: Vec<String>,
    },
    /// Open-loop prediction of one node from logged efforts only.
    Predict {
        /// Parameter file of the node.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        node: String,
        /// Actuator driving the node (default: inferred from the log).
        #[arg(long)]
        actuator: Option<String>,
    },
    /// Minimize the temperature (or effort) potential under one contact.
    Minimize {
        /// Thermal scene file (needed without --scenario).
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Start configuration file (needed without --scenario).
        #[arg(long)]
        start: Option<PathBuf>,
        /// Contact configuration name from the scenario.
        #[arg(long)]
        contact: Option<String>,
        /// Contact frames (without --scenario).
        #[arg(long, value_delimiter = ',')]
        frames: Vec<String>,
        #[arg(long, value_enum, default_value_t = ObjectiveKind::Thermal)]
        objective: ObjectiveKind,
    },
    /// Run thermal recovery on the quasi-static plant.
    Recover {
        /// Recovery mode (default: the scenario's).
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Run both recovery modes from the same plant and compare a limb group.
    Compare {
        /// Limb group to compare (default: the group of the hottest node).
        #[arg(long)]
        group: Option<String>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ObjectiveKind {
    Thermal,
    Effort,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Switching,
    MinEffort,
}

impl From<ModeArg> for RecoveryMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Switching => RecoveryMode::Switching,
            ModeArg::MinEffort => RecoveryMode::MinEffort,
        }
    }
}

/// Record of one invocation, written next to its outputs.
#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a Command,
    inputs: &'a Common,
    config: &'a RunConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => outcome.code(),
        Err(err) => {
            eprintln!("error: {err:#}");
            exit::classify(&err).code()
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let config = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let out = &cli.common.out;
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    let outcome = match &cli.command {
        Command::Generate => cmd_generate(&cli.common, &config)?,
        Command::Fit { log, nodes } => cmd_fit(&cli.common, &config, log, nodes)?,
        Command::Predict {
            params,
            log,
            node,
            actuator,
        } => cmd_predict(out, params, log, node, actuator.as_deref())?,
        Command::Minimize {
            scene,
            start,
            contact,
            frames,
            objective,
        } => cmd_minimize(&cli.common, &config, scene.as_deref(), start.as_deref(), contact.as_deref(), frames, *objective)?,
        Command::Recover { mode } => cmd_recover(&cli.common, &config, mode.map(Into::into))?,
        Command::Compare { group } => cmd_compare(&cli.common, &config, group.as_deref())?,
    };
    let manifest = RunManifest {
        subcommand: &cli.command,
        inputs: &cli.common,
        config: &config,
    };
    write(&out.join("run_manifest.toml"), toml::to_string(&manifest)?)?;
    Ok(outcome)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> actuator_thermal::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    write(path, buf)
}

fn load_scenario(common: &Common, config: &RunConfig) -> Result<Scenario> {
    let Some(path) = &common.scenario else {
        bail!(Error::InvalidInput("--scenario is required".into()));
    };
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let doc = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut scenario = Scenario::from_document(doc, base, common.model.as_deref())?;
    config.apply_to_scenario(&mut scenario)?;
    Ok(scenario)
}

fn cmd_generate(common: &Common, config: &RunConfig) -> Result<Outcome> {
    let mut scenario = load_scenario(common, config)?;
    config.apply_to_telemetry(&mut scenario)?;
    let log = scenario.generate_telemetry(common.seed)?;
    let path = common.out.join("telemetry.csv");
    write_with(&path, |buf| log.write_csv(buf))?;
    println!("wrote {} samples of {} nodes to {}", log.len(), log.node_ids.len(), path.display());
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct FitSummary {
    nodes: Vec<NodeFit>,
}

#[derive(Serialize)]
struct NodeFit {
    node: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<actuator_thermal::sysid::FitReport>,
}

fn cmd_fit(common: &Common, config: &RunConfig, log_path: &Path, nodes: &[String]) -> Result<Outcome> {
    let log = TelemetryLog::load(log_path)?;
    let bindings = match &common.scenario {
        Some(_) => {
            let s = load_scenario(common, config)?;
            s.setup.scene.nodes.iter().map(|n| (n.id.clone(), n.actuator.clone())).collect()
        }
        None => Vec::new(),
    };
    let nodes = if nodes.is_empty() {
        log.node_ids.clone()
    } else {
        nodes.to_vec()
    };
    let params_dir = common.out.join("params");
    fs::create_dir_all(&params_dir).with_context(|| format!("creating {}", params_dir.display()))?;
    let mut summary = FitSummary { nodes: Vec::new() };
    let mut failures = Vec::new();
    for node in &nodes {
        let mut fit_config = config.fit.clone();
        if let Some((_, a)) = bindings.iter().find(|(n, _)| n == node) {
            fit_config.actuator.get_or_insert_with(|| a.clone());
        }
        match fit(&log, node, &fit_config) {
            Ok((params, report)) => {
                params.save(&params_dir.join(format!("{node}.toml")))?;
                println!(
                    "{node}: rc {:.4} s, beta_r {:.6}, beta_bias_r {:.6}, t_offset {:.4} °C, open-loop RMSE {:.4} °C",
                    params.rc_time_constant, params.beta_r, params.beta_bias_r, params.t_offset, report.open_loop_rmse
                );
                summary.nodes.push(NodeFit {
                    node: node.clone(),
                    error: None,
                    report: Some(report),
                });
            }
            Err(e) => {
                eprintln!("{node}: {e}");
                summary.nodes.push(NodeFit {
                    node: node.clone(),
                    error: Some(e.to_string()),
                    report: None,
                });
                failures.push(e);
            }
        }
    }
    write(&common.out.join("fit_report.toml"), toml::to_string(&summary)?)?;
    match failures.into_iter().next() {
        None => Ok(Outcome::Success),
        Some(first) => Ok(exit::classify_core(&first)),
    }
}

fn cmd_predict(out: &Path, params: &Path, log_path: &Path, node: &str, actuator: Option<&str>) -> Result<Outcome> {
    let params = ThermalParams::load(params)?;
    let log = TelemetryLog::load(log_path)?;
    let node_idx = log.node_index(node)?;
    let actuator = match actuator {
        Some(a) => a.to_string(),
        None => log.infer_actuator(node)?,
    };
    let predicted = open_loop_prediction(&params, &log, &actuator)?;
    let measured = &log.temperatures[node_idx];
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["time_s", "measured_c", "predicted_c"])?;
    for ((t, m), p) in log.times.iter().zip(measured).zip(&predicted) {
        w.write_record([t.to_string(), m.to_string(), p.to_string()])?;
    }
    write(&out.join("prediction.csv"), w.into_inner()?)?;
    let rmse = if measured.is_empty() {
        0.0
    } else {
        (measured.iter().zip(&predicted).map(|(m, p)| (m - p) * (m - p)).sum::<f64>() / measured.len() as f64).sqrt()
    };
    println!("{node}: open-loop RMSE {rmse:.6} °C over {} samples", measured.len());
    Ok(Outcome::Success)
}

/// Configuration file: `q = [...]` plus descent metadata on output.
#[derive(Serialize, Deserialize)]
struct ConfigurationDoc {
    q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    objective: Option<ObjectiveKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    termination: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    drift: Option<f64>,
}

fn load_configuration(path: &Path) -> Result<Configuration> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let doc: ConfigurationDoc = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(DVector::from_vec(doc.q))
}

fn cmd_minimize(
    common: &Common,
    config: &RunConfig,
    scene: Option<&Path>,
    start: Option<&Path>,
    contact: Option<&str>,
    frames: &[String],
    objective: ObjectiveKind,
) -> Result<Outcome> {
    let (model, scene, q0, contact, settings): (RobotModel, ThermalScene, Configuration, ContactConfig, _) =
        match &common.scenario {
            Some(_) => {
                let s = load_scenario(common, config)?;
                let setup = s.setup;
                let policy = &setup.policy;
                let q0 = match start {
                    Some(p) => load_configuration(p)?,
                    None => policy.q_nominal.clone(),
                };
                let contact = match contact {
                    Some(name) => policy
                        .contacts
                        .iter()
                        .find(|c| c.name == name)
                        .cloned()
                        .ok_or_else(|| {
                            Error::InvalidInput(format!(
                                "unknown contact `{name}`; available: {}",
                                policy.contacts.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ")
                            ))
                        })?,
                    None => policy.nominal().clone(),
                };
                let temps = setup.scene.temperatures();
                let horizon = policy.horizon_for(&setup.scene, &temps);
                let scene = scene_with(&setup, &temps, update_cost_matrix(policy, &temps), horizon);
                let settings = policy.descent.clone();
                (setup.model, scene, q0, contact, settings)
            }
            None => {
                let model_path = common
                    .model
                    .as_deref()
                    .ok_or_else(|| Error::InvalidInput("--model or --scenario is required".into()))?;
                let model = RobotModel::load(model_path)?;
                let scene = ThermalScene::load(
                    scene.ok_or_else(|| Error::InvalidInput("--scene is required without --scenario".into()))?,
                )?;
                let q0 = load_configuration(
                    start.ok_or_else(|| Error::InvalidInput("--start is required without --scenario".into()))?,
                )?;
                let name = contact.map(str::to_string).unwrap_or_else(|| frames.join("+"));
                let contact = ContactConfig::new(&model, name, frames)?.anchored_at(&model, &q0);
                (model, scene, q0, contact, config.descent.clone().unwrap_or_default())
            }
        };
    let settings = config.descent.clone().unwrap_or(settings);
    let outcome: DescentOutcome = match objective {
        ObjectiveKind::Thermal => descend(&ThermalPotential::new(&scene, &model)?, &q0, &contact, &settings)?,
        ObjectiveKind::Effort => descend(&EffortPotential::new(&model), &q0, &contact, &settings)?,
    };
    write_with(&common.out.join("descent_trace.csv"), |buf| outcome.write_trace_csv(buf))?;
    let doc = ConfigurationDoc {
        q: outcome.q.iter().copied().collect(),
        contact: Some(contact.name.clone()),
        objective: Some(objective),
        f: Some(outcome.f),
        iterations: Some(outcome.iterations),
        termination: Some(format!("{:?}", outcome.termination)),
        drift: Some(outcome.drift),
    };
    write(&common.out.join("configuration.toml"), toml::to_string(&doc)?)?;
    println!(
        "{}: f {:.6} -> {:.6} after {} iterations ({:?})",
        contact.name,
        outcome.trace[0].f,
        outcome.f,
        outcome.iterations,
        outcome.termination
    );
    Ok(Outcome::Success)
}

fn cmd_recover(common: &Common, config: &RunConfig, mode: Option<RecoveryMode>) -> Result<Outcome> {
    let scenario = load_scenario(common, config)?;
    let mode = mode.unwrap_or(scenario.mode);
    let report = run_recovery(&scenario.setup, mode)?;
    write_with(&common.out.join("recovery_trace.csv"), |buf| report.write_trace_csv(buf))?;
    write(&common.out.join("recovery_summary.toml"), report.summary_toml())?;
    println!(
        "{mode}: schedule {}; end time {:.1} s",
        report.schedule.iter().map(|e| e.contact.as_str()).collect::<Vec<_>>().join(" -> "),
        report.end_time
    );
    if report.timed_out {
        eprintln!("recovery did not reach the safe threshold within the time budget");
        return Ok(Outcome::Timeout);
    }
    Ok(Outcome::Success)
}

fn cmd_compare(common: &Common, config: &RunConfig, group: Option<&str>) -> Result<Outcome> {
    let scenario = load_scenario(common, config)?;
    let cmp = compare_modes(&scenario.setup, group)?;
    write_with(&common.out.join("comparison.csv"), |buf| cmp.write_csv(buf))?;
    write(&common.out.join("comparison_summary.toml"), cmp.summary_toml())?;
    write_with(&common.out.join("switching_trace.csv"), |buf| cmp.switching.write_trace_csv(buf))?;
    write_with(&common.out.join("min_effort_trace.csv"), |buf| cmp.min_effort.write_trace_csv(buf))?;
    let (ts, tm) = cmp.group_time_to_safe();
    let fmt = |t: Option<f64>| t.map_or("never".to_string(), |t| format!("{t:.1} s"));
    println!(
        "{}: time-to-safe switching {}, min-effort {}; faster: {}",
        cmp.switching.group_names[cmp.group],
        fmt(ts),
        fmt(tm),
        cmp.faster().map_or("neither".to_string(), |m| m.to_string())
    );
    if cmp.switching.timed_out || cmp.min_effort.timed_out {
        eprintln!("a recovery mode did not reach the safe threshold within the time budget");
        return Ok(Outcome::Timeout);
    }
    Ok(Outcome::Success)
}
