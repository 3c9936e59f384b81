//! Thermal system identification from telemetry.

pub mod filter;
pub mod regression;
pub mod synth;
pub mod telemetry;

pub use filter::{derivative_filter, lowpass, LowPass};
pub use regression::{
    batch_gradient_descent, build_regression, evaluate_open_loop, evaluate_open_loop_bound, fit, loss,
    open_loop_prediction, predict_row, unscale_params, zscore, DescentResult, FitConfig, FitReport, RegressionSet,
    ScalingStats,
};
pub use telemetry::TelemetryLog;
