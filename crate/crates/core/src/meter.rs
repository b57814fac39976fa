//! Meter state after the interaction `exp(-i theta A P)` and post-selection.
//!
//! With `A^2 = I` the interaction factorizes as `cos(theta p) - i sin(theta p) A`,
//! which is diagonal in momentum. Projecting the system onto `|f>` leaves the
//! meter in
//!
//! ```text
//! rho_ps(p, p') = a(p) rho_d(p, p') a*(p') / P,    a(p) = <f|i> cos(theta p) - i <f|A|i> sin(theta p)
//! ```
//!
//! where `a(p) = <f|i> K(p)` with `K(p) = cos(theta p) - i A_w sin(theta p)`.
//! The amplitude form stays finite for orthogonal selections; everything that
//! needs `A_w` goes through [`SelectionContext::weak_value`].

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::grid::{gaussian_tail_bound, MomentumGrid};
use crate::probe::ThermalGaussianProbe;
use crate::selection::SelectionContext;

/// Post-selection probabilities below this leave no usable ensemble.
pub const MIN_POSTSELECTION: f64 = 1e-14;

/// Largest tolerated probability mass outside the momentum window.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// Refinement stops once successive `Z_1` values agree this closely.
pub const REFINEMENT_TOLERANCE: f64 = 1e-10;

const MAX_REFINED_POINTS: usize = 1 << 22;

/// Probe-weighted integrals of `cos^2`, `2 sin cos` and `sin^2` of `theta p`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct AngularIntegrals {
    cc: f64,
    cs: f64,
    ss: f64,
}

impl AngularIntegrals {
    fn compute(probe: &ThermalGaussianProbe, theta: f64, grid: &MomentumGrid) -> Self {
        let (mut cc, mut cs, mut ss) = (0.0, 0.0, 0.0);
        let h = grid.spacing();
        let n = grid.n_points();
        for i in 0..n {
            let p = grid.point(i);
            let w = if i == 0 || i == n - 1 { 0.5 * h } else { h } * probe.momentum_density(p);
            let (s, c) = (theta * p).sin_cos();
            cc += w * c * c;
            cs += w * 2.0 * s * c;
            ss += w * s * s;
        }
        Self { cc, cs, ss }
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.cc - other.cc).abs().max((self.cs - other.cs).abs()).max((self.ss - other.ss).abs())
    }
}

/// Doubles the default quadrature grid until the angular integrals, and
/// hence `Z_1` for every selection, are stable to [`REFINEMENT_TOLERANCE`].
pub fn refined_quadrature_grid(probe: &ThermalGaussianProbe, theta: f64) -> MomentumGrid {
    let mut grid = MomentumGrid::for_probe(probe);
    let mut prev = AngularIntegrals::compute(probe, theta, &grid);
    while grid.n_points() < MAX_REFINED_POINTS {
        let next_grid = grid.doubled();
        let next = AngularIntegrals::compute(probe, theta, &next_grid);
        let converged = next.max_abs_diff(&prev) < REFINEMENT_TOLERANCE;
        grid = next_grid;
        prev = next;
        if converged {
            break;
        }
    }
    grid
}

/// Normalized post-selected meter state.
#[derive(Debug, Clone)]
pub struct PostSelectedMeterState {
    probe: ThermalGaussianProbe,
    ctx: SelectionContext,
    theta: f64,
    grid: MomentumGrid,
    // a(p) up to a global phase: |<f|i>| cos(theta p) - i u sin(theta p)
    c_amp: f64,
    u: C64,
    probability: f64,
}

impl PostSelectedMeterState {
    /// Requires an involutive observable and a finite coupling.
    pub fn new(
        probe: ThermalGaussianProbe,
        ctx: SelectionContext,
        theta: f64,
        grid: MomentumGrid,
    ) -> Result<Self> {
        ctx.require_involutive()?;
        if !theta.is_finite() {
            return Err(invalid("theta", format!("must be finite, got {theta}")));
        }
        let o = ctx.overlap_amplitude();
        let t = ctx.transition_amplitude();
        // Remove the global phase shared by <f|i> and <f|A|i>.
        let phase = if o.norm() > 0.0 {
            o / o.norm()
        } else if t.norm() > 0.0 {
            t / t.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let c_amp = o.norm();
        let mut u = t * phase.conj();
        if u.re.abs() <= 1e-14 * u.norm() {
            u.re = 0.0;
        }
        let ang = AngularIntegrals::compute(&probe, theta, &grid);
        // |a|^2 = |o|^2 cos^2 + Im(u)|o| 2 sin cos + |u|^2 sin^2
        let probability = c_amp * c_amp * ang.cc + c_amp * u.im * ang.cs + u.norm_sqr() * ang.ss;
        Ok(Self { probe, ctx, theta, grid, c_amp, u, probability })
    }

    /// Uses [`refined_quadrature_grid`].
    pub fn with_refined_grid(probe: ThermalGaussianProbe, ctx: SelectionContext, theta: f64) -> Result<Self> {
        let grid = refined_quadrature_grid(&probe, theta);
        Self::new(probe, ctx, theta, grid)
    }

    pub fn probe(&self) -> &ThermalGaussianProbe {
        &self.probe
    }

    pub fn ctx(&self) -> &SelectionContext {
        &self.ctx
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    /// Same state on another grid.
    pub fn with_grid(&self, grid: MomentumGrid) -> Result<Self> {
        Self::new(self.probe, self.ctx, self.theta, grid)
    }

    /// Same state at another coupling.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.probe, self.ctx, theta, self.grid)
    }

    /// `|<f|i>|^2 Z_1`.
    pub fn postselection_probability_allorder(&self) -> f64 {
        self.probability
    }

    /// `Z_1 = int |K(p)|^2_gen rho_d(p, p) dp`.
    pub fn z1(&self) -> Result<f64> {
        let overlap = self.ctx.postselection_overlap();
        self.ctx.weak_value()?;
        Ok(self.probability / overlap)
    }

    /// `K(p) = cos(theta p) - i A_w sin(theta p)`.
    pub fn interaction_factor(&self, p: f64) -> Result<C64> {
        let aw = self.ctx.weak_value()?;
        let (s, c) = (self.theta * p).sin_cos();
        Ok(C64::new(c, 0.0) - C64::new(0.0, 1.0) * aw * s)
    }

    /// `|K(p)|^2_gen = cos^2 + 2 Im(A_w) sin cos + |A_w|^2 sin^2`, with the
    /// trace form of `|A_w|^2`.
    pub fn generalized_weight(&self, p: f64) -> Result<f64> {
        let aw = self.ctx.weak_value()?;
        let abs_sq = self.ctx.weak_value_abs_sq()?;
        let (s, c) = (self.theta * p).sin_cos();
        Ok(c * c + 2.0 * aw.im * s * c + abs_sq * s * s)
    }

    /// Whether the kernel is real up to the removed global phase, which
    /// happens exactly when `Re(A_w) = 0`.
    pub fn is_real(&self) -> bool {
        self.u.re == 0.0
    }

    pub(crate) fn amplitude(&self, p: f64) -> C64 {
        let (s, c) = (self.theta * p).sin_cos();
        C64::new(self.c_amp * c + self.u.im * s, -self.u.re * s)
    }

    pub(crate) fn amplitude_derivative(&self, p: f64) -> C64 {
        let (s, c) = (self.theta * p).sin_cos();
        // d/dtheta [c_amp cos - i u sin] = -p (c_amp sin + i u cos)
        C64::new(-p * (self.c_amp * s - self.u.im * c), -p * self.u.re * c)
    }

    pub(crate) fn require_postselection(&self) -> Result<f64> {
        if self.probability < MIN_POSTSELECTION {
            Err(Error::ZeroPostselection { probability: self.probability })
        } else {
            Ok(self.probability)
        }
    }

    /// Bound on the normalized integrand mass outside the grid window for
    /// moments of the given order.
    pub fn tail_mass(&self, order: u32) -> f64 {
        let bound = (self.c_amp + self.u.norm()).powi(2);
        let v = self.probe.momentum_variance();
        bound * gaussian_tail_bound(v, self.grid.p_max(), order) / self.probability
    }

    pub(crate) fn require_resolved(&self, order: u32) -> Result<()> {
        let tail_mass = self.tail_mass(order);
        if tail_mass > TAIL_TOLERANCE || !tail_mass.is_finite() {
            Err(Error::GridUnderresolved { tail_mass, p_max: self.grid.p_max() })
        } else {
            Ok(())
        }
    }

    /// `<p|rho_ps|p'> = K(p) rho_d(p, p') K*(p') / Z_1`.
    pub fn meter_kernel(&self, p: f64, p_prime: f64) -> Result<C64> {
        let prob = self.require_postselection()?;
        Ok(self.raw_kernel(p, p_prime) / prob)
    }

    fn raw_kernel(&self, p: f64, p_prime: f64) -> C64 {
        self.amplitude(p) * self.amplitude(p_prime).conj() * self.probe.density_kernel_p(p, p_prime)
    }

    /// `int p^order rho_ps(p, p) dp` for `order` 1 or 2.
    pub fn momentum_moment(&self, order: u32) -> Result<f64> {
        if !(order == 1 || order == 2) {
            return Err(invalid("order", format!("must be 1 or 2, got {order}")));
        }
        let prob = self.require_postselection()?;
        self.require_resolved(order)?;
        let k = order as i32;
        Ok(self.grid.integrate(|p| p.powi(k) * self.amplitude(p).norm_sqr() * self.probe.momentum_density(p)) / prob)
    }

    /// Momentum shift and spread of the post-selected ensemble.
    pub fn momentum_shift_and_spread(&self) -> Result<(f64, f64)> {
        let m1 = self.momentum_moment(1)?;
        let m2 = self.momentum_moment(2)?;
        Ok((m1, (m2 - m1 * m1).max(0.0).sqrt()))
    }

    /// `sqrt(N P) |<P>_ps| / Delta p_ps` by quadrature, with the all-order
    /// post-selection probability.
    pub fn snr_postselected_numeric(&self, n_trials: u64) -> Result<f64> {
        positive_trials(n_trials)?;
        let (shift, spread) = self.momentum_shift_and_spread()?;
        if spread <= 0.0 {
            return Err(invalid("state", "momentum spread vanishes"));
        }
        Ok((n_trials as f64 * self.probability).sqrt() * shift.abs() / spread)
    }
}

fn positive_trials(n: u64) -> Result<()> {
    if n == 0 {
        Err(invalid("n_trials", "must be >= 1"))
    } else {
        Ok(())
    }
}

/// Mixed-probe SNR closed form, transcribed exactly as it was published.
///
/// The published denominator carries an un-squared `Im(A_w)` and does not
/// reduce to [`snr_pure_closed_form`] at `T = 0`; it is kept only for
/// comparison. [`snr_gaussian_exact`] is the consistent closed form.
pub fn snr_mixed_closed_form(
    probe: &ThermalGaussianProbe,
    ctx: &SelectionContext,
    theta: f64,
    n_trials: u64,
) -> Result<f64> {
    positive_trials(n_trials)?;
    let aw = ctx.weak_value()?;
    let abs_sq = ctx.weak_value_abs_sq()?;
    let (h2, s2) = (probe.hbar().powi(2), probe.sigma().powi(2));
    let (alpha, beta) = (probe.alpha(), probe.beta());
    let eps = abs_sq - 1.0;
    let omega = beta / (2.0 * s2);
    let e = (theta * theta * omega).exp();
    let t2 = theta * theta;
    let radicand = (h2 * t2 - s2 + 2.0 * alpha * t2) * eps + e * s2 * (1.0 + abs_sq) * (eps + e * (1.0 + abs_sq))
        - 4.0 * (h2 + 2.0 * alpha) * t2 * aw.im;
    if radicand < 0.0 {
        return Err(Error::ImaginaryDenominator { radicand });
    }
    let numerator = (n_trials as f64).sqrt() * ctx.postselection_overlap().sqrt() * beta.sqrt() * theta * aw.im;
    Ok(numerator / radicand.sqrt())
}

/// Pure-probe SNR closed form as published (the temperature is ignored).
pub fn snr_pure_closed_form(
    probe: &ThermalGaussianProbe,
    ctx: &SelectionContext,
    theta: f64,
    n_trials: u64,
) -> Result<f64> {
    positive_trials(n_trials)?;
    let aw = ctx.weak_value()?;
    let abs_sq = ctx.weak_value_abs_sq()?;
    let (h2, s2) = (probe.hbar().powi(2), probe.sigma().powi(2));
    let t2 = theta * theta;
    let e = (h2 * t2 / (2.0 * s2)).exp();
    let radicand = ((h2 * t2 - s2) * (abs_sq - 1.0) + e * s2 * (1.0 + abs_sq)) * (1.0 + e * (1.0 + abs_sq) - abs_sq)
        - 4.0 * h2 * h2 * t2 * aw.im * aw.im;
    if radicand < 0.0 {
        return Err(Error::ImaginaryDenominator { radicand });
    }
    let numerator =
        2.0 * probe.hbar() * theta * (n_trials as f64).sqrt() * ctx.postselection_overlap().sqrt() * aw.im.abs();
    Ok(numerator / radicand.sqrt())
}

/// Exact Gaussian moments of the post-selected meter, evaluated in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMeterMoments {
    /// `Z_1`.
    pub z1: f64,
    /// Unnormalized first moment `int p |K|^2_gen rho_d`.
    pub first: f64,
    /// Unnormalized second moment `int p^2 |K|^2_gen rho_d`.
    pub second: f64,
}

/// With `V = beta / (4 sigma^2)` and `g = exp(-2 theta^2 V)`:
/// `Z_1 = (1 + |A_w|^2)/2 + (1 - |A_w|^2) g / 2`,
/// first moment `2 Im(A_w) theta V g`,
/// second moment `[(1 + |A_w|^2) V + (1 - |A_w|^2)(V - 4 theta^2 V^2) g] / 2`.
pub fn gaussian_meter_moments(probe: &ThermalGaussianProbe, ctx: &SelectionContext, theta: f64) -> Result<GaussianMeterMoments> {
    let aw = ctx.weak_value()?;
    let a2 = ctx.weak_value_abs_sq()?;
    let v = probe.momentum_variance();
    let g = (-2.0 * theta * theta * v).exp();
    Ok(GaussianMeterMoments {
        z1: 0.5 * (1.0 + a2) + 0.5 * (1.0 - a2) * g,
        first: 2.0 * aw.im * theta * v * g,
        second: 0.5 * ((1.0 + a2) * v + (1.0 - a2) * (v - 4.0 * theta * theta * v * v) * g),
    })
}

/// Closed-form SNR with the all-order post-selection probability, valid at
/// any coupling and temperature:
/// `sqrt(N) |<f|i>| sqrt(Z_1) |X| / sqrt(Z_1 M_2 - X^2)`.
pub fn snr_gaussian_exact(
    probe: &ThermalGaussianProbe,
    ctx: &SelectionContext,
    theta: f64,
    n_trials: u64,
) -> Result<f64> {
    positive_trials(n_trials)?;
    let m = gaussian_meter_moments(probe, ctx, theta)?;
    let radicand = m.z1 * m.second - m.first * m.first;
    if radicand <= 0.0 {
        return Err(Error::ImaginaryDenominator { radicand });
    }
    Ok((n_trials as f64).sqrt() * ctx.postselection_overlap().sqrt() * m.z1.sqrt() * m.first.abs() / radicand.sqrt())
}

/// Default bound on `theta |Im A_w| sqrt(2 omega')` for the weak limit.
pub const WEAK_VALIDITY_THRESHOLD: f64 = 0.1;

/// First-order SNR together with its validity diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakLimitSnr {
    pub value: f64,
    /// `theta |Im A_w| sqrt(2 omega')`, `omega' = beta / (2 sigma^2)`.
    pub validity: f64,
    /// `validity < threshold`; when false the value should carry a warning.
    pub valid: bool,
}

/// `sqrt(N) |<f|i>| theta |Im A_w| sqrt(1 + 4 m k_B T sigma^2 / hbar^2) hbar / sigma`.
pub fn snr_weak_limit(
    probe: &ThermalGaussianProbe,
    ctx: &SelectionContext,
    theta: f64,
    n_trials: u64,
    threshold: f64,
) -> Result<WeakLimitSnr> {
    positive_trials(n_trials)?;
    let aw = ctx.weak_value()?;
    let root_two_omega = probe.beta().sqrt() / probe.sigma();
    let validity = (theta * aw.im).abs() * root_two_omega;
    let value = (n_trials as f64).sqrt() * ctx.postselection_overlap().sqrt() * validity;
    Ok(WeakLimitSnr { value, validity, valid: validity < threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::K_BOLTZMANN_AU;
    use crate::selection::{pauli_x, QubitState};
    use std::f64::consts::PI;

    fn probe(t: f64) -> ThermalGaussianProbe {
        ThermalGaussianProbe::new(1.0, 50.0, t).unwrap()
    }

    fn spot_ctx() -> SelectionContext {
        SelectionContext::from_weak_value(C64::new(0.0, 2.31), 0.001).unwrap()
    }

    fn state(t: f64, ctx: SelectionContext, theta: f64) -> PostSelectedMeterState {
        PostSelectedMeterState::with_refined_grid(probe(t), ctx, theta).unwrap()
    }

    #[test]
    fn zero_coupling_leaves_probe_untouched() {
        let s = state(100.0, spot_ctx(), 0.0);
        assert!((s.z1().unwrap() - s.grid().integrate(|p| s.probe().momentum_density(p))).abs() < 1e-14);
        assert!((s.z1().unwrap() - 1.0).abs() < 1e-12);
        assert!((s.postselection_probability_allorder() - 0.001).abs() < 1e-14);
        for &(p, q) in &[(0.0, 0.0), (0.4, -0.3), (1.1, 0.9)] {
            let k = s.meter_kernel(p, q).unwrap();
            assert!((k.re - s.probe().density_kernel_p(p, q)).abs() < 1e-12);
            assert!(k.im.abs() < 1e-15);
        }
        assert_eq!(s.momentum_moment(1).unwrap(), 0.0);
        assert!((s.momentum_moment(2).unwrap() - s.probe().momentum_variance()).abs() < 1e-12);
        assert_eq!(s.snr_postselected_numeric(1000).unwrap(), 0.0);
    }

    #[test]
    fn unshifted_second_moment_is_appendix_value() {
        let s = state(300.0, spot_ctx(), 0.0);
        let expected = 0.25 + 50.0 * K_BOLTZMANN_AU * 300.0;
        assert!((s.momentum_moment(2).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn kernel_is_hermitian_and_normalized() {
        let ctx = SelectionContext::from_weak_value(C64::new(0.7, -1.3), 0.05).unwrap();
        let s = state(100.0, ctx, 0.8);
        assert!(!s.is_real());
        for &(p, q) in &[(0.2, -0.5), (1.0, 0.3), (-1.4, 0.8)] {
            let a = s.meter_kernel(p, q).unwrap();
            let b = s.meter_kernel(q, p).unwrap();
            assert!((a - b.conj()).norm() < 1e-15);
            let direct = s.interaction_factor(p).unwrap()
                * s.interaction_factor(q).unwrap().conj()
                * s.probe().density_kernel_p(p, q)
                / s.z1().unwrap();
            assert!((a - direct).norm() < 1e-13, "{a} vs {direct}");
        }
        let trace = s.grid().integrate(|p| s.meter_kernel(p, p).unwrap().re);
        assert!((trace - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generalized_weight_matches_modulus_of_interaction_factor() {
        let ctx = SelectionContext::from_weak_value(C64::new(-0.4, 2.0), 0.02).unwrap();
        let s = state(50.0, ctx, 1.3);
        for p in [-2.0, -0.3, 0.0, 0.9, 1.7] {
            let g = s.generalized_weight(p).unwrap();
            assert!((g - s.interaction_factor(p).unwrap().norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_is_nonnegative() {
        let s = state(0.0, spot_ctx(), 0.025);
        for p in s.grid().points() {
            assert!(s.meter_kernel(p, p).unwrap().re >= 0.0);
        }
    }

    #[test]
    fn real_weak_value_gives_no_shift() {
        let ctx = SelectionContext::from_weak_value(C64::new(3.0, 0.0), 0.05).unwrap();
        for theta in [0.025, 0.5, 2.0] {
            let s = state(100.0, ctx, theta);
            assert!(s.momentum_moment(1).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn weak_regime_shift() {
        // <p>_ps ~ 2 theta Im(A_w) Var(p)
        let s = state(0.0, spot_ctx(), 0.025);
        let expected = 2.0 * 0.025 * 2.31 * 0.25;
        let rel = (s.momentum_moment(1).unwrap() / expected - 1.0).abs();
        assert!(rel < 2e-3, "{rel}");
    }

    #[test]
    fn orthogonal_selection_has_zero_probability() {
        let ctx = SelectionContext::new(QubitState::zero(), QubitState::one(), pauli_x()).unwrap();
        let s = PostSelectedMeterState::new(probe(0.0), ctx, 0.0, MomentumGrid::for_probe(&probe(0.0))).unwrap();
        assert_eq!(s.postselection_probability_allorder(), 0.0);
        assert!(matches!(s.meter_kernel(0.0, 0.0), Err(Error::ZeroPostselection { .. })));
        assert!(matches!(s.z1(), Err(Error::OrthogonalSelection { .. })));
        // the phi -> pi/2 family limit
        let ctx = SelectionContext::qubit_family(PI / 2.0).unwrap();
        let s = state(0.0, ctx, 0.0);
        assert!(s.postselection_probability_allorder() < 1e-30);
    }

    #[test]
    fn probability_matches_dense_reference() {
        let ctx = SelectionContext::qubit_family(1f64.atan()).unwrap();
        let s = state(300.0, ctx, 2.0);
        let dense = s.with_grid(MomentumGrid::new(s.grid().p_max(), 8192).unwrap()).unwrap();
        let diff = s.postselection_probability_allorder() - dense.postselection_probability_allorder();
        assert!(diff.abs() < 1e-6);
        // closed form oracle
        let m = gaussian_meter_moments(s.probe(), &ctx, 2.0).unwrap();
        assert!((dense.postselection_probability_allorder() - 0.5 * m.z1).abs() < 1e-12);
    }

    #[test]
    fn quadrature_moments_match_gaussian_closed_form() {
        for (aw, p, theta, t) in [
            (C64::new(0.0, 2.31), 0.001, 0.025, 0.0),
            (C64::new(0.0, 1.0), 0.5, 2.0, 300.0),
            (C64::new(1.2, -0.8), 0.1, 0.7, 100.0),
        ] {
            let ctx = SelectionContext::from_weak_value(aw, p).unwrap();
            let s = state(t, ctx, theta);
            let m = gaussian_meter_moments(s.probe(), &ctx, theta).unwrap();
            assert!((s.z1().unwrap() - m.z1).abs() < 1e-12);
            assert!((s.momentum_moment(1).unwrap() - m.first / m.z1).abs() < 1e-12);
            assert!((s.momentum_moment(2).unwrap() - m.second / m.z1).abs() < 1e-12);
            let exact = snr_gaussian_exact(s.probe(), &ctx, theta, 1000).unwrap();
            let numeric = s.snr_postselected_numeric(1000).unwrap();
            assert!((exact / numeric - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn pure_spot_value() {
        let s = state(0.0, spot_ctx(), 0.025);
        let snr = s.snr_postselected_numeric(1000).unwrap();
        assert!((snr / 0.058 - 1.0).abs() < 0.05, "{snr}");
    }

    #[test]
    fn printed_pure_form_is_zeroth_order_probability_version_of_exact() {
        // exact SNR uses P = |<f|i>|^2 Z_1; the printed pure form uses |<f|i>|^2
        let ctx = SelectionContext::qubit_family(0.9).unwrap();
        for theta in [0.025, 0.3, 1.0, 2.0] {
            let exact = snr_gaussian_exact(&probe(0.0), &ctx, theta, 10_000).unwrap();
            let z1 = gaussian_meter_moments(&probe(0.0), &ctx, theta).unwrap().z1;
            let printed = snr_pure_closed_form(&probe(0.0), &ctx, theta, 10_000).unwrap();
            assert!((printed * z1.sqrt() / exact - 1.0).abs() < 1e-12, "theta={theta}");
        }
    }

    #[test]
    fn printed_mixed_form_does_not_reduce_to_printed_pure_form() {
        let ctx = spot_ctx();
        let mixed = snr_mixed_closed_form(&probe(0.0), &ctx, 0.025, 1000).unwrap();
        let pure = snr_pure_closed_form(&probe(0.0), &ctx, 0.025, 1000).unwrap();
        assert!((pure - 0.0577).abs() < 1e-3);
        // the published mixed form is off by more than a factor of 5 at T = 0
        assert!(mixed < pure / 5.0, "{mixed} vs {pure}");
    }

    #[test]
    fn weak_limit_values() {
        let ctx = spot_ctx();
        let w0 = snr_weak_limit(&probe(0.0), &ctx, 0.025, 1000, WEAK_VALIDITY_THRESHOLD).unwrap();
        assert!((w0.value - 0.05775).abs() < 1e-12);
        assert!(w0.valid);
        let w100 = snr_weak_limit(&probe(100.0), &ctx, 0.025, 1000, WEAK_VALIDITY_THRESHOLD).unwrap();
        let expected = 0.05775 * (1.0 + 4.0 * 50.0 * K_BOLTZMANN_AU * 100.0f64).sqrt();
        assert!((w100.value - expected).abs() < 1e-12);
        assert!((w100.value - 0.0595).abs() < 5e-4);
        let strong = snr_weak_limit(&probe(0.0), &ctx, 2.0, 1000, WEAK_VALIDITY_THRESHOLD).unwrap();
        assert!(!strong.valid);
    }

    #[test]
    fn weak_limit_increases_with_temperature() {
        let ctx = spot_ctx();
        let mut prev = 0.0;
        for t in [0.0, 10.0, 100.0, 300.0, 1000.0] {
            let w = snr_weak_limit(&probe(t), &ctx, 0.01, 1000, WEAK_VALIDITY_THRESHOLD).unwrap().value;
            assert!(w > prev);
            prev = w;
        }
    }

    #[test]
    fn weak_limit_agrees_with_numeric_for_small_coupling() {
        let ctx = spot_ctx();
        for theta in [0.002, 0.01] {
            for t in [0.0, 300.0] {
                let w = snr_weak_limit(&probe(t), &ctx, theta, 1000, WEAK_VALIDITY_THRESHOLD).unwrap();
                assert!(w.validity < 0.05);
                let n = state(t, ctx, theta).snr_postselected_numeric(1000).unwrap();
                assert!((w.value / n - 1.0).abs() < 0.01);
            }
        }
    }

    #[test]
    fn weak_limit_ratio_tends_to_one() {
        let ctx = spot_ctx();
        let ratio = |theta: f64| {
            let w = snr_weak_limit(&probe(100.0), &ctx, theta, 1000, 1.0).unwrap().value;
            w / state(100.0, ctx, theta).snr_postselected_numeric(1000).unwrap()
        };
        let (a, b, c) = (ratio(0.04), ratio(0.01), ratio(0.0025));
        assert!((c - 1.0).abs() < (b - 1.0).abs() && (b - 1.0).abs() < (a - 1.0).abs());
        assert!((c - 1.0).abs() < 1e-4);
    }

    #[test]
    fn underresolved_window_is_reported() {
        let p = probe(300.0);
        let s = PostSelectedMeterState::new(p, spot_ctx(), 0.025, MomentumGrid::new(2.0, 256).unwrap()).unwrap();
        assert!(matches!(s.momentum_moment(2), Err(Error::GridUnderresolved { .. })));
        assert!(matches!(s.momentum_moment(3), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn refinement_converges_for_strong_coupling() {
        let g = refined_quadrature_grid(&probe(0.0), 200.0);
        assert!(g.spacing() < PI / 200.0);
        let s = PostSelectedMeterState::new(probe(0.0), spot_ctx(), 200.0, g).unwrap();
        let m = gaussian_meter_moments(s.probe(), s.ctx(), 200.0).unwrap();
        assert!((s.z1().unwrap() - m.z1).abs() < 1e-9);
    }

    #[test]
    fn kernel_converges_to_probe_linearly() {
        let ctx = spot_ctx();
        let sup = |theta: f64| {
            let s = state(0.0, ctx, theta);
            let pts: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.1).collect();
            pts.iter()
                .flat_map(|&p| pts.iter().map(move |&q| (p, q)))
                .map(|(p, q)| (s.meter_kernel(p, q).unwrap() - s.probe().density_kernel_p(p, q)).norm())
                .fold(0.0, f64::max)
        };
        let (a, b) = (sup(1e-3), sup(2e-3));
        assert!((b / a - 2.0).abs() < 0.05, "{a} {b}");
    }
}
