//! Thermal Gaussian probe.
//!
//! Every trial prepares the same Gaussian packet of width `sigma`, but with an
//! initial momentum drawn from a Maxwell-Boltzmann distribution at
//! temperature `T`. The ensemble average over that momentum is carried out
//! analytically, leaving a mixed Gaussian state whose kernels in position and
//! momentum representation are evaluated here.
//!
//! Units default to atomic units (`hbar = 1`, `k_B = 3.167e-6` per kelvin,
//! masses in electron masses); both constants can be overridden.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Boltzmann constant in hartree per kelvin.
pub const K_BOLTZMANN_AU: f64 = 3.167e-6;

/// Mixed Gaussian probe state prepared at a finite temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalGaussianProbe {
    sigma: f64,
    mass: f64,
    temperature: f64,
    hbar: f64,
    k_boltzmann: f64,
}

impl ThermalGaussianProbe {
    /// Probe in atomic units (`hbar = 1`, `k_B = 3.167e-6`).
    pub fn new(sigma: f64, mass: f64, temperature: f64) -> Result<Self> {
        Self::with_constants(sigma, mass, temperature, 1.0, K_BOLTZMANN_AU)
    }

    pub fn with_constants(
        sigma: f64,
        mass: f64,
        temperature: f64,
        hbar: f64,
        k_boltzmann: f64,
    ) -> Result<Self> {
        positive("sigma", sigma)?;
        positive("mass", mass)?;
        positive("hbar", hbar)?;
        positive("k_boltzmann", k_boltzmann)?;
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(invalid("temperature", format!("must be finite and >= 0, got {temperature}")));
        }
        Ok(Self { sigma, mass, temperature, hbar, k_boltzmann })
    }

    /// Same probe at another temperature.
    pub fn at_temperature(&self, temperature: f64) -> Result<Self> {
        Self::with_constants(self.sigma, self.mass, temperature, self.hbar, self.k_boltzmann)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn k_boltzmann(&self) -> f64 {
        self.k_boltzmann
    }

    /// Variance of the Maxwell-Boltzmann momentum distribution, `m k_B T`.
    pub fn thermal_momentum_variance(&self) -> f64 {
        self.mass * self.k_boltzmann * self.temperature
    }

    /// `alpha = 2 m k_B T sigma^2`.
    pub fn alpha(&self) -> f64 {
        2.0 * self.thermal_momentum_variance() * self.sigma * self.sigma
    }

    /// `beta = hbar^2 + 2 alpha`.
    pub fn beta(&self) -> f64 {
        self.hbar * self.hbar + 2.0 * self.alpha()
    }

    /// Variance of the momentum distribution, `beta / (4 sigma^2)`.
    pub fn momentum_variance(&self) -> f64 {
        self.beta() / (4.0 * self.sigma * self.sigma)
    }

    /// `<x|rho|x'>`.
    ///
    /// The thermal factor enters as `exp(-m k_B T (x - x')^2 / (2 hbar^2))`;
    /// it is the characteristic function of the momentum distribution and
    /// damps off-diagonal coherence.
    pub fn density_kernel_x(&self, x: f64, x_prime: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let d = x - x_prime;
        let exponent = -(x * x + x_prime * x_prime) / (4.0 * s2)
            - self.thermal_momentum_variance() * d * d / (2.0 * self.hbar * self.hbar);
        exponent.exp() / (2.0 * PI * s2).sqrt()
    }

    /// `<p|rho|p'>`.
    pub fn density_kernel_p(&self, p: f64, p_prime: f64) -> f64 {
        let h2 = self.hbar * self.hbar;
        let s2 = self.sigma * self.sigma;
        let kmt = self.thermal_momentum_variance();
        let d = p - p_prime;
        let numerator = h2 * s2 * (p * p + p_prime * p_prime) + 2.0 * kmt * s2 * s2 * d * d;
        let denominator = h2 * h2 + 4.0 * h2 * kmt * s2;
        (2.0 * s2).sqrt() / (PI * self.beta()).sqrt() * (-numerator / denominator).exp()
    }

    /// Momentum probability density `<p|rho|p>`.
    pub fn momentum_density(&self, p: f64) -> f64 {
        self.density_kernel_p(p, p)
    }

    /// `Tr[rho^2] = hbar / sqrt(hbar^2 + 4 m k_B T sigma^2)`.
    pub fn purity(&self) -> f64 {
        self.hbar / self.beta().sqrt()
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {value}")))
    }
}
