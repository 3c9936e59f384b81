//! Single-pole IIR low-pass and low-pass derivative filters.
//!
//! The low-pass is the bilinear-transform discretization of
//! `H(s) = wc / (s + wc)` with the cutoff prewarped, written in increment
//! form so a constant input is reproduced bit-exactly.

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check_band(cutoff: f64, sample_rate: f64) -> Result<()> {
    if !(sample_rate > 0.0) || !sample_rate.is_finite() {
        return Err(Error::invalid(format!("sample rate must be positive, got {sample_rate}")));
    }
    if !(cutoff > 0.0) || cutoff >= sample_rate / 2.0 {
        return Err(Error::invalid(format!(
            "cutoff {cutoff} Hz must lie in (0, {}) Hz",
            sample_rate / 2.0
        )));
    }
    Ok(())
}

/// Continuous-time time constant of the low-pass for a given cutoff.
pub fn time_constant(cutoff: f64) -> f64 {
    1.0 / (2.0 * PI * cutoff)
}

/// First-order low-pass filter state.
#[derive(Clone, Debug)]
pub struct LowPass {
    gain: f64,
    prev_input: f64,
    output: f64,
}

impl LowPass {
    pub fn new(cutoff: f64, sample_rate: f64) -> Result<Self> {
        check_band(cutoff, sample_rate)?;
        let k = (PI * cutoff / sample_rate).tan();
        Ok(Self {
            gain: k / (1.0 + k),
            prev_input: 0.0,
            output: 0.0,
        })
    }

    /// Seed the state as if `value` had been applied forever.
    pub fn reset(&mut self, value: f64) {
        self.prev_input = value;
        self.output = value;
    }

    pub fn update(&mut self, x: f64) -> f64 {
        self.output += self.gain * (x + self.prev_input - 2.0 * self.output);
        self.prev_input = x;
        self.output
    }
}

/// Low-pass filter a whole series, starting at rest on its first sample.
pub fn lowpass(signal: &[f64], cutoff: f64, sample_rate: f64) -> Result<Vec<f64>> {
    let mut filter = LowPass::new(cutoff, sample_rate)?;
    let Some(&first) = signal.first() else {
        return Ok(Vec::new());
    };
    filter.reset(first);
    Ok(signal.iter().map(|&x| filter.update(x)).collect())
}

/// Backward-difference derivative followed by [`lowpass`].
///
/// The filter starts at rest with zero rate: the first sample has no
/// difference, and seeding the state with a single noisy difference would
/// leave a transient of order `σ·fs` decaying over the filter time constant.
pub fn derivative_filter(signal: &[f64], cutoff: f64, sample_rate: f64) -> Result<Vec<f64>> {
    let mut filter = LowPass::new(cutoff, sample_rate)?;
    filter.reset(0.0);
    let mut out = Vec::with_capacity(signal.len());
    let mut prev = signal.first().copied();
    for &x in signal {
        let d = prev.map_or(0.0, |p| (x - p) * sample_rate);
        prev = Some(x);
        out.push(filter.update(d));
    }
    Ok(out)
}
