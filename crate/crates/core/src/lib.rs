//! Weak measurements with post-selection on a thermal Gaussian probe.
//!
//! A qubit (pre-selected in `|i>`, post-selected on `|f>`) is coupled to a
//! continuous meter through `exp(-i theta A P)`. The meter starts in a
//! Gaussian packet whose initial momentum is Maxwell-Boltzmann distributed.
//! This crate evaluates, at any coupling strength `theta`:
//!
//! - the probe kernels and purity ([`probe`]),
//! - weak values from trace moments ([`selection`]),
//! - the post-selected meter state, pointer shift and signal-to-noise ratio ([`meter`]),
//! - weak-regime Gaussian QFI closed forms ([`gaussian_qfi`]),
//! - the numeric QFI from the symmetric logarithmic derivative, a Bures
//!   fidelity cross-check and a flat-probe high-temperature model ([`numeric_qfi`]).
//!
//! Units default to atomic units.

pub mod error;
pub mod gaussian_qfi;
pub mod grid;
pub mod meter;
pub mod numeric_qfi;
pub mod probe;
pub mod selection;

pub use error::{Error, Result};
pub use grid::MomentumGrid;
pub use meter::PostSelectedMeterState;
pub use num_complex::Complex64;
pub use probe::ThermalGaussianProbe;
pub use selection::SelectionContext;
