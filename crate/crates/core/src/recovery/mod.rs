//! Contact-switching thermal recovery and its quasi-static plant.

pub mod plant;
pub mod policy;
pub mod run;
pub mod scenario;

pub use plant::{default_step, simulate_plant, Command, PlantSample, PlantState, COMMAND_RESIDUAL_TOL};
pub use policy::{
    min_effort_configuration, min_effort_strategy, select_strategy, select_strategy_cached, update_cost_matrix,
    ContactCandidate, ContactOption, HorizonRule, RecoveryMode, RecoveryPolicy, StrategyCache, StrategyChoice,
};
pub use run::{
    compare_modes, run_recovery, Comparison, Decision, LimbGroup, Phase, RecoveryReport, RecoverySample,
    RecoverySetup, ScheduleEntry, NORM_RATE_CUTOFF,
};
pub use scenario::{scene_with, Scenario, ScenarioDocument, TelemetryDoc};
