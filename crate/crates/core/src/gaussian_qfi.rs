//! Weak-regime Gaussian description of the post-selected meter.
//!
//! Covariances follow the convention in which the position variance of the
//! probe's Wigner function is `4 sigma^2` and the momentum variance is
//! `hbar^2 / (4 sigma^2) + m k_B T`; the purity is then `1 / sqrt(det Sigma)`.

use crate::error::{invalid, Error, Result};
use crate::grid::MomentumGrid;
use crate::numeric_qfi;
use crate::probe::ThermalGaussianProbe;
use crate::selection::SelectionContext;

/// First and second moments of a single-mode Gaussian state and their
/// derivatives with respect to the coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSummary {
    /// `(<x>, <p>)`.
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    pub purity: f64,
    pub mean_derivative: [f64; 2],
    pub covariance_derivative: [[f64; 2]; 2],
    pub purity_derivative: f64,
}

impl GaussianSummary {
    /// Builds a summary, deriving the purity and its derivative from the
    /// covariance.
    pub fn from_moments(
        mean: [f64; 2],
        covariance: [[f64; 2]; 2],
        mean_derivative: [f64; 2],
        covariance_derivative: [[f64; 2]; 2],
    ) -> Result<Self> {
        for m in [&covariance, &covariance_derivative] {
            if m[0][1] != m[1][0] {
                return Err(invalid("covariance", "must be symmetric"));
            }
        }
        let det = det2(&covariance);
        if det <= 0.0 {
            return Err(Error::SingularCovariance { determinant: det });
        }
        let c = &covariance;
        let d = &covariance_derivative;
        let ddet = d[0][0] * c[1][1] + c[0][0] * d[1][1] - 2.0 * c[0][1] * d[0][1];
        Ok(Self {
            mean,
            covariance,
            purity: 1.0 / det.sqrt(),
            mean_derivative,
            covariance_derivative,
            purity_derivative: -0.5 * ddet / det.powf(1.5),
        })
    }

    pub fn determinant(&self) -> f64 {
        det2(&self.covariance)
    }
}

fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inv2(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

fn mul2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Weak-regime summary of the post-selected meter to first order in `theta`.
///
/// `Sigma = diag(4 sigma^2, hbar^2/(4 sigma^2) + m k_B T)` with vanishing
/// derivative, and mean derivative
/// `(2 hbar Re A_w, Im A_w (hbar^2 + 4 m k_B T sigma^2) / (2 sigma^2))`.
pub fn gaussian_summary_weak(
    probe: &ThermalGaussianProbe,
    ctx: &SelectionContext,
    theta: f64,
) -> Result<GaussianSummary> {
    let aw = ctx.weak_value()?;
    let s2 = probe.sigma().powi(2);
    let cov = [[4.0 * s2, 0.0], [0.0, probe.momentum_variance()]];
    let dmean = [2.0 * probe.hbar() * aw.re, aw.im * probe.beta() / (2.0 * s2)];
    GaussianSummary::from_moments([theta * dmean[0], theta * dmean[1]], cov, dmean, [[0.0; 2]; 2])
}

/// Gaussian-state QFI
/// `Tr[(Sigma^-1 Sigma')^2] / (2 (1 + P^2)) + 2 P'^2 / (1 - P^4) + dX^T Sigma^-1 dX`.
pub fn gaussian_qfi(summary: &GaussianSummary) -> Result<f64> {
    let det = summary.determinant();
    if det < 1e-14 {
        return Err(Error::SingularCovariance { determinant: det });
    }
    let inv = inv2(&summary.covariance);
    let m = mul2(&inv, &summary.covariance_derivative);
    let m2 = mul2(&m, &m);
    let p = summary.purity;
    let covariance_term = (m2[0][0] + m2[1][1]) / (2.0 * (1.0 + p * p));
    let purity_term = if summary.purity_derivative == 0.0 {
        0.0
    } else if p < 1.0 {
        2.0 * summary.purity_derivative.powi(2) / (1.0 - p.powi(4))
    } else {
        return Err(invalid("purity", "purity derivative is nonzero for a pure state"));
    };
    let d = summary.mean_derivative;
    let mean_term = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
    Ok(covariance_term + purity_term + mean_term)
}

/// `hbar^2 |A_w|^2 / sigma^2`.
pub fn qfi_weak_pure(probe: &ThermalGaussianProbe, ctx: &SelectionContext) -> Result<f64> {
    Ok(probe.hbar().powi(2) * ctx.weak_value_abs_sq()? / probe.sigma().powi(2))
}

/// `(hbar^2 |A_w|^2 + 2 alpha Im(A_w)^2) / sigma^2`, linear in temperature.
pub fn qfi_weak_mixed(probe: &ThermalGaussianProbe, ctx: &SelectionContext) -> Result<f64> {
    let im = ctx.weak_value()?.im;
    Ok(qfi_weak_pure(probe, ctx)? + 2.0 * probe.alpha() * im * im / probe.sigma().powi(2))
}

/// Which linear tilt the weak-regime Wigner function uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WignerTilt {
    /// Tilts `2 theta Im(A_w) p + hbar theta Re(A_w) x / (2 sigma^2)`, whose
    /// first moments reproduce the mean derivative of
    /// [`gaussian_summary_weak`].
    #[default]
    MomentConsistent,
    /// Tilts `4 theta Im(A_w) p + hbar theta Re(A_w) x / sigma^2` as
    /// published; they shift both means by twice the moment-consistent value.
    AsPrinted,
}

/// First-order Wigner function of the post-selected meter,
/// `exp[-x^2/(8 sigma^2) - 2 p^2 sigma^2 / beta + b x + c p]`, normalized to
/// unit integral.
pub fn wigner_weak(
    probe: &ThermalGaussianProbe,
    ctx: &SelectionContext,
    theta: f64,
    x: f64,
    p: f64,
    tilt: WignerTilt,
) -> Result<f64> {
    let aw = ctx.weak_value()?;
    let s2 = probe.sigma().powi(2);
    let (vx, vp) = (4.0 * s2, probe.momentum_variance());
    let scale = match tilt {
        WignerTilt::MomentConsistent => 1.0,
        WignerTilt::AsPrinted => 2.0,
    };
    let b = scale * probe.hbar() * theta * aw.re / (2.0 * s2);
    let c = scale * 2.0 * theta * aw.im;
    // completing the square: the tilted envelope is a Gaussian centred at (vx b, vp c)
    let (dx, dp) = (x - vx * b, p - vp * c);
    let norm = 2.0 * std::f64::consts::PI * (vx * vp).sqrt();
    Ok((-dx * dx / (2.0 * vx) - dp * dp / (2.0 * vp)).exp() / norm)
}

/// QFI of the meter without post-selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoPostselectionQfi {
    /// `hbar^2 <A^2>_i / sigma^2`, exact for a pure probe.
    pub pure_closed_form: f64,
    /// `hbar^2 <A>_i^2 / sigma^2`.
    pub mixed_low_temperature: f64,
    /// Numeric QFI of the joint system-meter state.
    pub joint_numeric: f64,
    /// Numeric QFI of the meter alone, `Tr_s` of the joint state, at `theta = 0`.
    pub meter_numeric: f64,
}

/// Closed forms alongside numeric QFIs of the unselected state at `theta = 0`.
pub fn qfi_no_postselection(
    probe: &ThermalGaussianProbe,
    ctx: &SelectionContext,
    grid: &MomentumGrid,
) -> Result<NoPostselectionQfi> {
    let scale = probe.hbar().powi(2) / probe.sigma().powi(2);
    Ok(NoPostselectionQfi {
        pure_closed_form: scale * ctx.expectation_sq(),
        mixed_low_temperature: scale * ctx.expectation().powi(2),
        joint_numeric: numeric_qfi::joint_state_qfi(probe, ctx, 0.0, grid)?,
        meter_numeric: numeric_qfi::unselected_meter_qfi(probe, ctx, 0.0, grid)?,
    })
}

/// Ratios of weak-regime QFIs with and without post-selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiRatios {
    /// `|<f|A|i>|^2`: post-selected over unselected QFI, weighted by `|<f|i>|^2`.
    pub r_pure: f64,
    /// Mixed over pure post-selected QFI in the published weighted form
    /// `1 + 4 m k_B T sigma^2 Im(<f|A|i>)^2 |<f|i>|^2 / (hbar^2 |A_w|^2)`,
    /// with `<f|A|i>` taken in the gauge where `<f|i>` is real and positive.
    pub r_post: f64,
    /// `1 + 2 alpha Im(A_w)^2 / (hbar^2 |A_w|^2)`, the ratio of
    /// [`qfi_weak_mixed`] to [`qfi_weak_pure`].
    pub r_post_unweighted: f64,
}

pub fn qfi_ratios(probe: &ThermalGaussianProbe, ctx: &SelectionContext) -> Result<QfiRatios> {
    let aw = ctx.weak_value()?;
    let abs_sq = ctx.weak_value_abs_sq()?;
    let overlap = ctx.postselection_overlap();
    let h2 = probe.hbar().powi(2);
    let im_transition = overlap.sqrt() * aw.im;
    let thermal = 4.0 * probe.thermal_momentum_variance() * probe.sigma().powi(2);
    let (r_post, r_post_unweighted) = if abs_sq == 0.0 {
        (1.0, 1.0)
    } else {
        (
            1.0 + thermal * im_transition.powi(2) * overlap / (h2 * abs_sq),
            1.0 + 2.0 * probe.alpha() * aw.im * aw.im / (h2 * abs_sq),
        )
    };
    Ok(QfiRatios { r_pure: ctx.trace_pi_a_rho_a(), r_post, r_post_unweighted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::K_BOLTZMANN_AU;
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn probe(t: f64) -> ThermalGaussianProbe {
        ThermalGaussianProbe::new(1.0, 50.0, t).unwrap()
    }

    /// 2-D trapezoid moments of the Wigner function: (norm, <x>, <p>, var x, var p, cov xp).
    fn wigner_moments(f: impl Fn(f64, f64) -> f64, cx: f64, cp: f64, hx: f64, hp: f64) -> [f64; 6] {
        let n = 401;
        let (dx, dp) = (2.0 * hx / (n - 1) as f64, 2.0 * hp / (n - 1) as f64);
        let mut m = [0.0; 6];
        for i in 0..n {
            let x = cx - hx + dx * i as f64;
            for j in 0..n {
                let p = cp - hp + dp * j as f64;
                let w = f(x, p) * dx * dp;
                m[0] += w;
                m[1] += w * x;
                m[2] += w * p;
                m[3] += w * x * x;
                m[4] += w * p * p;
                m[5] += w * x * p;
            }
        }
        let (mx, mp) = (m[1] / m[0], m[2] / m[0]);
        [m[0], mx, mp, m[3] / m[0] - mx * mx, m[4] / m[0] - mp * mp, m[5] / m[0] - mx * mp]
    }

    #[test]
    fn wigner_at_zero_coupling_has_probe_variances() {
        let pr = probe(0.0);
        let ctx = SelectionContext::qubit_family(0.7).unwrap();
        let m = wigner_moments(
            |x, p| wigner_weak(&pr, &ctx, 0.0, x, p, WignerTilt::default()).unwrap(),
            0.0,
            0.0,
            20.0,
            5.0,
        );
        assert!((m[0] - 1.0).abs() < 1e-8);
        assert!((m[3] - 4.0).abs() < 1e-6);
        assert!((m[4] - 0.25).abs() < 1e-6);
    }

    #[test]
    fn wigner_moments_match_summary() {
        let pr = probe(150.0);
        let ctx = SelectionContext::from_weak_value(C64::new(0.8, 1.7), 0.05).unwrap();
        let theta = 0.02;
        let s = gaussian_summary_weak(&pr, &ctx, theta).unwrap();
        let m = wigner_moments(
            |x, p| wigner_weak(&pr, &ctx, theta, x, p, WignerTilt::MomentConsistent).unwrap(),
            s.mean[0],
            s.mean[1],
            20.0,
            6.0,
        );
        assert!((m[0] - 1.0).abs() < 1e-8);
        assert!((m[1] - s.mean[0]).abs() < 1e-8);
        assert!((m[2] - s.mean[1]).abs() < 1e-8);
        // <p> = theta Im(A_w) beta / (2 sigma^2)
        assert!((m[2] - theta * 1.7 * pr.beta() / 2.0).abs() < 1e-8);
        assert!((m[3] - s.covariance[0][0]).abs() < 1e-6);
        assert!((m[4] - s.covariance[1][1]).abs() < 1e-6);
        assert!(m[5].abs() < 1e-6);

        let printed = wigner_moments(
            |x, p| wigner_weak(&pr, &ctx, theta, x, p, WignerTilt::AsPrinted).unwrap(),
            2.0 * s.mean[0],
            2.0 * s.mean[1],
            20.0,
            6.0,
        );
        assert!((printed[1] - 2.0 * s.mean[0]).abs() < 1e-8);
        assert!((printed[2] - 2.0 * s.mean[1]).abs() < 1e-8);
    }

    #[test]
    fn summary_entries() {
        let ctx = SelectionContext::qubit_family(1.0).unwrap();
        let s = gaussian_summary_weak(&probe(0.0), &ctx, 0.01).unwrap();
        assert!((s.purity - 1.0).abs() < 1e-15);
        assert!((s.mean_derivative[1] - 1f64.tan() / 2.0).abs() < 1e-15);
        assert_eq!(s.purity_derivative, 0.0);
        let hot = gaussian_summary_weak(&probe(100.0), &ctx, 0.01).unwrap();
        assert!((hot.purity - 1.0 / (1.0 + 4.0 * 50.0 * K_BOLTZMANN_AU * 100.0f64).sqrt()).abs() < 1e-15);
        assert!((hot.purity - 1.0 / hot.determinant().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn qfi_closed_forms() {
        let ctx = SelectionContext::qubit_family(2.31f64.atan()).unwrap();
        let pure = gaussian_qfi(&gaussian_summary_weak(&probe(0.0), &ctx, 0.025).unwrap()).unwrap();
        assert!((pure - 2.31f64.powi(2)).abs() < 1e-12);
        let t = 300.0;
        let mixed = gaussian_qfi(&gaussian_summary_weak(&probe(t), &ctx, 0.025).unwrap()).unwrap();
        let alpha = 2.0 * 50.0 * K_BOLTZMANN_AU * t;
        assert!((mixed - (2.31f64.powi(2) + 2.0 * alpha * 2.31f64.powi(2))).abs() < 1e-12);
    }

    #[test]
    fn no_parameter_dependence_gives_zero() {
        let s = GaussianSummary::from_moments([0.0; 2], [[2.0, 0.3], [0.3, 1.0]], [0.0; 2], [[0.0; 2]; 2]).unwrap();
        assert_eq!(gaussian_qfi(&s).unwrap(), 0.0);
    }

    #[test]
    fn covariance_and_purity_terms() {
        // Sigma = diag(a, b) with a, b scaled by (1 + k theta): Sigma^-1 Sigma' = k I
        let (a, b, k) = (3.0, 2.0, 0.4);
        let s = GaussianSummary::from_moments([0.0; 2], [[a, 0.0], [0.0, b]], [0.0; 2], [[k * a, 0.0], [0.0, k * b]]).unwrap();
        let p = 1.0 / (a * b).sqrt();
        assert!((s.purity_derivative + k * p).abs() < 1e-15);
        let expected = 2.0 * k * k / (2.0 * (1.0 + p * p)) + 2.0 * (k * p).powi(2) / (1.0 - p.powi(4));
        assert!((gaussian_qfi(&s).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn singular_covariance_is_rejected() {
        assert!(matches!(
            GaussianSummary::from_moments([0.0; 2], [[1.0, 1.0], [1.0, 1.0]], [1.0, 0.0], [[0.0; 2]; 2]),
            Err(Error::SingularCovariance { .. })
        ));
        let tiny = GaussianSummary::from_moments([0.0; 2], [[1e-8, 0.0], [0.0, 1e-8]], [1.0, 0.0], [[0.0; 2]; 2]).unwrap();
        assert!(matches!(gaussian_qfi(&tiny), Err(Error::SingularCovariance { .. })));
    }

    #[test]
    fn ratios_for_qubit_family() {
        for phi in [PI / 6.0, PI / 4.0, 2.31f64.atan()] {
            let ctx = SelectionContext::qubit_family(phi).unwrap();
            let r = qfi_ratios(&probe(0.0), &ctx).unwrap();
            assert!((r.r_pure - phi.sin().powi(2)).abs() < 1e-14);
            assert!(r.r_pure <= 1.0);
            assert_eq!(r.r_post, 1.0);
            assert_eq!(r.r_post_unweighted, 1.0);
        }
    }

    #[test]
    fn r_post_is_affine_and_increasing_in_temperature() {
        let ctx = SelectionContext::qubit_family(0.9).unwrap();
        let r = |t: f64| qfi_ratios(&probe(t), &ctx).unwrap();
        let (r0, r1, r2) = (r(0.0), r(100.0), r(200.0));
        assert!(r1.r_post > r0.r_post && r2.r_post > r1.r_post);
        assert!(((r2.r_post - r1.r_post) - (r1.r_post - r0.r_post)).abs() < 1e-14);
        assert!(((r2.r_post_unweighted - r1.r_post_unweighted) - (r1.r_post_unweighted - r0.r_post_unweighted)).abs() < 1e-14);
        let mixed = qfi_weak_mixed(&probe(100.0), &ctx).unwrap();
        let pure = qfi_weak_pure(&probe(100.0), &ctx).unwrap();
        assert!((mixed / pure - r1.r_post_unweighted).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_ratios_fail() {
        use crate::selection::{pauli_x, QubitState};
        let ctx = SelectionContext::new(QubitState::zero(), QubitState::one(), pauli_x()).unwrap();
        assert!(matches!(qfi_ratios(&probe(0.0), &ctx), Err(Error::OrthogonalSelection { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn three_term_formula_reduces_to_closed_form(
            sigma in 0.2f64..5.0,
            mass in 1.0f64..2000.0,
            t in 0.0f64..1000.0,
            hbar in 0.3f64..3.0,
            re in -3.0f64..3.0,
            im in -3.0f64..3.0,
            overlap in 0.01f64..0.09,
            theta in -0.1f64..0.1,
        ) {
            let pr = ThermalGaussianProbe::with_constants(sigma, mass, t, hbar, K_BOLTZMANN_AU).unwrap();
            let ctx = SelectionContext::from_weak_value(C64::new(re, im), overlap);
            prop_assume!(ctx.is_ok());
            let ctx = ctx.unwrap();
            let q = gaussian_qfi(&gaussian_summary_weak(&pr, &ctx, theta).unwrap()).unwrap();
            let closed = qfi_weak_mixed(&pr, &ctx).unwrap();
            prop_assert!((q - closed).abs() <= 1e-12 * closed.max(1.0));
            prop_assert!(q >= 0.0);
        }

        #[test]
        fn temperature_slope_is_constant(
            t1 in 0.0f64..500.0,
            dt in 1.0f64..500.0,
            im in 0.1f64..3.0,
        ) {
            let ctx = SelectionContext::from_weak_value(C64::new(0.0, im), 0.01).unwrap();
            let q = |t: f64| qfi_weak_mixed(&probe(t), &ctx).unwrap();
            let slope = (q(t1 + dt) - q(t1)) / dt;
            let expected = 4.0 * 50.0 * K_BOLTZMANN_AU * im * im;
            prop_assert!((slope / expected - 1.0).abs() < 1e-8);
        }
    }
}
