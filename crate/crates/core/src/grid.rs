use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::probe::ThermalGaussianProbe;

/// Smallest allowed number of grid points.
pub const MIN_POINTS: usize = 64;

/// Default point count for one-dimensional meter quadrature.
pub const DEFAULT_QUADRATURE_POINTS: usize = 2048;

/// Window half-width in units of the probe's momentum standard deviation.
pub const WINDOW_SIGMAS: f64 = 10.0;

/// Symmetric uniform momentum grid on `[-p_max, p_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    p_max: f64,
    n_points: usize,
}

impl MomentumGrid {
    pub fn new(p_max: f64, n_points: usize) -> Result<Self> {
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(invalid("p_max", format!("must be finite and > 0, got {p_max}")));
        }
        if n_points < MIN_POINTS || n_points % 2 != 0 {
            return Err(invalid("n_points", format!("must be even and >= {MIN_POINTS}, got {n_points}")));
        }
        Ok(Self { p_max, n_points })
    }

    /// Quadrature grid for the meter: `10` standard deviations of the probe's
    /// momentum distribution, 2048 points.
    pub fn for_probe(probe: &ThermalGaussianProbe) -> Self {
        Self { p_max: default_p_max(probe), n_points: DEFAULT_QUADRATURE_POINTS }
    }

    /// Grid for dense density matrices.
    ///
    /// The spacing resolves both the coherence length `hbar / sigma` of the
    /// probe kernel and the period `pi / |theta|` of the interaction, so the
    /// point count grows with the thermal width instead of being fixed.
    pub fn for_matrix(probe: &ThermalGaussianProbe, theta: f64) -> Self {
        let p_max = default_p_max(probe);
        let mut dp = probe.hbar() / (2.0 * probe.sigma());
        if theta != 0.0 {
            dp = dp.min(PI / (2.0 * theta.abs()));
        }
        dp /= 5.0;
        let n = ((2.0 * p_max / dp).ceil() as usize + 1).max(MIN_POINTS);
        Self { p_max, n_points: n + n % 2 }
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.p_max / (self.n_points - 1) as f64
    }

    /// `p_i`, with `p_{n-1-i} = -p_i` exactly.
    pub fn point(&self, i: usize) -> f64 {
        let half = self.n_points / 2;
        if i < half {
            -self.p_max + self.spacing() * i as f64
        } else {
            -self.point(self.n_points - 1 - i)
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_points)
            .map(|i| if i == 0 || i == self.n_points - 1 { 0.5 * h } else { h })
            .collect()
    }

    /// Trapezoid rule for `f` on the grid. Mirror points are summed in
    /// pairs, so odd integrands give exactly zero.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.spacing();
        let half = self.n_points / 2;
        let inner: f64 = (1..half)
            .map(|i| {
                let p = self.point(i);
                f(p) + f(-p)
            })
            .sum();
        h * (inner + 0.5 * (f(-self.p_max) + f(self.p_max)))
    }

    /// Same window, twice the points.
    pub fn doubled(&self) -> Self {
        Self { p_max: self.p_max, n_points: 2 * self.n_points }
    }

    pub fn with_p_max(&self, p_max: f64) -> Result<Self> {
        Self::new(p_max, self.n_points)
    }
}

fn default_p_max(probe: &ThermalGaussianProbe) -> f64 {
    WINDOW_SIGMAS * probe.momentum_variance().sqrt()
}

/// Upper bound on `int_{|p| > p_max} |p|^order N(p; 0, variance) dp`,
/// divided by `variance^(order / 2)`.
pub fn gaussian_tail_bound(variance: f64, p_max: f64, order: u32) -> f64 {
    let s = variance.sqrt();
    let z = p_max / s;
    let gauss = (-0.5 * z * z).exp();
    // erfc(u) <= exp(-u^2) / (u sqrt(pi)) with u = z / sqrt(2)
    let erfc = gauss * (2.0 / PI).sqrt() / z;
    match order {
        0 => erfc,
        1 => (2.0 / PI).sqrt() * gauss,
        _ => erfc + (2.0 / PI).sqrt() * z * gauss,
    }
}
