//! Canned temperature sweeps: SNR (`fig1`) and effective QFI (`fig2`)
//! for every combination of coupling and selection angle.

use std::f64::consts::PI;

use crate::config::{Axis, AxisName, Quantity, SelectionConfig, Spacing, SweepConfig};

pub const THETAS: [f64; 3] = [0.025, 0.5, 2.0];

/// Selection angles; `atan(2.31)` gives `A_w = 2.31 i` in the qubit family.
pub fn phis() -> [f64; 4] {
    [PI / 6.0, PI / 4.0, PI / 3.0, 2.31f64.atan()]
}

pub const DEFAULT_T_STOP: f64 = 300.0;
pub const DEFAULT_T_POINTS: usize = 61;
pub const FIG1_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Snr,
    EffectiveQfi,
}

/// Temperature range shared by all series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for TemperatureRange {
    fn default() -> Self {
        Self { start: 0.0, stop: DEFAULT_T_STOP, points: DEFAULT_T_POINTS }
    }
}

pub fn series_label(theta: f64, phi: f64) -> String {
    format!("theta={theta}/phi={phi:.6}")
}

/// Twelve labelled sweeps built on top of `base` (probe, trials, grid
/// overrides); the quantity, axis, coupling and selection are replaced.
pub fn figure_sweeps(figure: Figure, base: &SweepConfig, range: TemperatureRange) -> Vec<(String, SweepConfig)> {
    let quantity = match figure {
        Figure::Snr => Quantity::SnrNumeric,
        Figure::EffectiveQfi => Quantity::QfiEffective,
    };
    let mut out = Vec::with_capacity(THETAS.len() * 4);
    for theta in THETAS {
        for phi in phis() {
            let mut cfg = base.clone();
            cfg.quantity = quantity;
            cfg.axis = Axis {
                name: AxisName::Temperature,
                start: range.start,
                stop: range.stop,
                points: range.points,
                spacing: Spacing::Linear,
            };
            cfg.selection = SelectionConfig::Phi { phi };
            cfg.run.theta = theta;
            out.push((series_label(theta, phi), cfg));
        }
    }
    out
}
