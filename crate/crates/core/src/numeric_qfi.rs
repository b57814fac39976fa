//! Quantum Fisher information of discretized meter states at any coupling.
//!
//! States are sampled on a uniform momentum grid with trapezoid weights,
//! `rho_ij = sqrt(w_i w_j) rho(p_i, p_j)`, so that `Tr rho` is the quadrature
//! of the diagonal. The QFI then follows from the symmetric logarithmic
//! derivative in the eigenbasis of `rho`:
//!
//! ```text
//! I_F = 2 sum_ij |(U^+ d_theta rho U)_ij|^2 / (d_i + d_j)
//! ```
//!
//! When `Re(A_w) = 0` the kernel is real and the cheaper real symmetric
//! eigensolver is used.

use faer::traits::ComplexField;
use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::grid::MomentumGrid;
use crate::meter::PostSelectedMeterState;
use crate::probe::ThermalGaussianProbe;
use crate::selection::{identity2, Mat2, SelectionContext};

/// SLD pairs with `d_i + d_j` below this fraction of the largest eigenvalue are skipped.
pub const SLD_CUTOFF: f64 = 1e-12;

/// Largest tolerated `sum |D_ij|^2` over skipped pairs.
pub const MAX_SKIPPED_MASS: f64 = 1e-6;

/// Eigenvalues below `-POSITIVITY_TOL * d_max` mark a state as non-positive.
pub const POSITIVITY_TOL: f64 = 1e-10;

const FIDELITY_CUTOFF: f64 = 1e-14;

pub(crate) trait Scalar: ComplexField<Real = f64> + Copy + Send + Sync {
    fn abs2(self) -> f64;
    fn from_c64(z: C64) -> Self;
    fn to_c64(self) -> C64;
}

impl Scalar for f64 {
    fn abs2(self) -> f64 {
        self * self
    }
    fn from_c64(z: C64) -> Self {
        z.re
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn from_c64(z: C64) -> Self {
        z
    }
    fn to_c64(self) -> C64 {
        self
    }
}

/// Dense Hermitian matrix, stored as real symmetric when possible.
#[derive(Debug, Clone)]
pub enum HermitianMatrix {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

impl HermitianMatrix {
    fn from_fn(n: usize, real: bool, f: impl Fn(usize, usize) -> C64) -> Self {
        if real {
            HermitianMatrix::Real(Mat::from_fn(n, n, |i, j| f(i, j).re))
        } else {
            HermitianMatrix::Complex(Mat::from_fn(n, n, f))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            HermitianMatrix::Real(m) => m.nrows(),
            HermitianMatrix::Complex(m) => m.nrows(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match self {
            HermitianMatrix::Real(m) => C64::new(m[(i, j)], 0.0),
            HermitianMatrix::Complex(m) => m[(i, j)],
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, HermitianMatrix::Real(_))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i).re).sum()
    }

    /// Complex copy.
    pub fn to_complex(&self) -> Mat<C64> {
        match self {
            HermitianMatrix::Real(m) => Mat::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0)),
            HermitianMatrix::Complex(m) => m.clone(),
        }
    }

    fn max_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        match self {
            HermitianMatrix::Real(m) => m.self_adjoint_eigenvalues(Side::Lower),
            HermitianMatrix::Complex(m) => m.self_adjoint_eigenvalues(Side::Lower),
        }
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
    }
}

/// A density matrix and its coupling derivative on a momentum grid.
#[derive(Debug, Clone)]
pub struct DiscretizedState {
    grid: MomentumGrid,
    matrix: HermitianMatrix,
    matrix_derivative: HermitianMatrix,
}

impl DiscretizedState {
    /// Checks Hermiticity (`1e-12`), unit trace and traceless derivative (`1e-8`).
    pub fn new(grid: MomentumGrid, matrix: HermitianMatrix, matrix_derivative: HermitianMatrix) -> Result<Self> {
        let n = matrix.dim();
        if matrix_derivative.dim() != n {
            return Err(invalid("matrix_derivative", "dimension differs from matrix"));
        }
        if matrix.is_real() != matrix_derivative.is_real() {
            return Err(invalid("matrix_derivative", "must use the same scalar type as matrix"));
        }
        if matrix.max_asymmetry() > 1e-12 || matrix_derivative.max_asymmetry() > 1e-12 {
            return Err(invalid("matrix", "must be Hermitian"));
        }
        if (matrix.trace() - 1.0).abs() > 1e-8 {
            return Err(invalid("matrix", format!("trace {} differs from 1", matrix.trace())));
        }
        if matrix_derivative.trace().abs() > 1e-8 {
            return Err(invalid("matrix_derivative", format!("trace {} differs from 0", matrix_derivative.trace())));
        }
        Ok(Self { grid, matrix, matrix_derivative })
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn matrix_derivative(&self) -> &HermitianMatrix {
        &self.matrix_derivative
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `Tr[rho^2]` from the eigenvalues.
    pub fn purity(&self) -> Result<f64> {
        Ok(self.matrix.eigenvalues()?.iter().map(|d| d * d).sum())
    }
}

/// Meter state on the dense-matrix grid [`MomentumGrid::for_matrix`].
pub fn meter_state_for_qfi(
    probe: ThermalGaussianProbe,
    ctx: SelectionContext,
    theta: f64,
) -> Result<PostSelectedMeterState> {
    PostSelectedMeterState::new(probe, ctx, theta, MomentumGrid::for_matrix(&probe, theta))
}

/// Samples the post-selected kernel and its analytic `theta` derivative
/// `d/dtheta[a rho a* / P] = (a' rho a* + a rho a'*) / P - rho_ps P' / P`.
pub fn discretize(state: &PostSelectedMeterState) -> Result<DiscretizedState> {
    let grid = *state.grid();
    let rho = matrix_of(state)?;
    let prob = state.postselection_probability_allorder();
    let probe = state.probe();
    let pts = grid.points();
    let w = grid.weights();
    let amp: Vec<C64> = pts.iter().map(|&p| state.amplitude(p)).collect();
    let damp: Vec<C64> = pts.iter().map(|&p| state.amplitude_derivative(p)).collect();
    let dprob: f64 = (0..pts.len())
        .map(|i| w[i] * 2.0 * (damp[i] * amp[i].conj()).re * probe.momentum_density(pts[i]))
        .sum();
    let n = pts.len();
    let derivative = HermitianMatrix::from_fn(n, state.is_real(), |i, j| {
        let k = probe.density_kernel_p(pts[i], pts[j]) * (w[i] * w[j]).sqrt();
        let d = (damp[i] * amp[j].conj() + amp[i] * damp[j].conj()) * k / prob;
        d - rho.get(i, j) * (dprob / prob)
    });
    DiscretizedState::new(grid, rho, derivative)
}

fn matrix_of(state: &PostSelectedMeterState) -> Result<HermitianMatrix> {
    let prob = state.require_postselection()?;
    state.require_resolved(2)?;
    let grid = state.grid();
    let pts = grid.points();
    let w = grid.weights();
    let amp: Vec<C64> = pts.iter().map(|&p| state.amplitude(p)).collect();
    let probe = state.probe();
    Ok(HermitianMatrix::from_fn(pts.len(), state.is_real(), |i, j| {
        amp[i] * amp[j].conj() * probe.density_kernel_p(pts[i], pts[j]) * ((w[i] * w[j]).sqrt() / prob)
    }))
}

/// The unperturbed probe on a grid, with zero derivative.
pub fn discretize_probe(probe: &ThermalGaussianProbe, grid: &MomentumGrid) -> Result<DiscretizedState> {
    let pts = grid.points();
    let w = grid.weights();
    let n = pts.len();
    let rho = HermitianMatrix::from_fn(n, true, |i, j| {
        C64::new(probe.density_kernel_p(pts[i], pts[j]) * (w[i] * w[j]).sqrt(), 0.0)
    });
    let zero = HermitianMatrix::Real(Mat::zeros(n, n));
    DiscretizedState::new(*grid, rho, zero)
}

/// Diagnostics of an SLD evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SldReport {
    pub qfi: f64,
    /// `sum |D_ij|^2` over pairs below the eigenvalue cutoff.
    pub skipped_mass: f64,
    pub skipped_pairs: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

/// `Tr[rho L^2]` via the SLD in the eigenbasis of `rho`.
pub fn sld_qfi(state: &DiscretizedState) -> Result<f64> {
    let report = sld_report(state)?;
    if report.skipped_mass > MAX_SKIPPED_MASS {
        return Err(Error::DegenerateSupport { skipped_mass: report.skipped_mass });
    }
    Ok(report.qfi)
}

/// Like [`sld_qfi`] but returns the diagnostics without judging them.
pub fn sld_report(state: &DiscretizedState) -> Result<SldReport> {
    match (&state.matrix, &state.matrix_derivative) {
        (HermitianMatrix::Real(r), HermitianMatrix::Real(d)) => sld_generic(r.as_ref(), d.as_ref()),
        (HermitianMatrix::Complex(r), HermitianMatrix::Complex(d)) => sld_generic(r.as_ref(), d.as_ref()),
        _ => unreachable!("checked at construction"),
    }
}

fn eigh<T: Scalar>(m: MatRef<'_, T>) -> Result<(Vec<f64>, Mat<T>)> {
    let e = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let d = e.S().column_vector().iter().map(|x| x.to_c64().re).collect();
    Ok((d, e.U().to_owned()))
}

fn sld_generic<T: Scalar>(rho: MatRef<'_, T>, drho: MatRef<'_, T>) -> Result<SldReport>
{
    let (d, u) = eigh(rho)?;
    let dd: Mat<T> = u.adjoint() * drho * &u;
    let n = d.len();
    let d_max = d[n - 1];
    let cutoff = SLD_CUTOFF * d_max;
    let (mut qfi, mut skipped_mass, mut skipped_pairs) = (0.0, 0.0, 0);
    for j in 0..n {
        for i in 0..n {
            let a = dd[(i, j)].abs2();
            let s = d[i] + d[j];
            if s < cutoff {
                skipped_mass += a;
                skipped_pairs += 1;
            } else {
                qfi += 2.0 * a / s;
            }
        }
    }
    Ok(SldReport { qfi, skipped_mass, skipped_pairs, min_eigenvalue: d[0], max_eigenvalue: d_max })
}

/// Post-selection-weighted QFI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveQfi {
    pub probability: f64,
    pub qfi: f64,
    /// `probability * qfi`.
    pub effective: f64,
}

/// All-order post-selection probability times the SLD QFI of the
/// post-selected meter, on the state's own grid.
pub fn effective_qfi(state: &PostSelectedMeterState) -> Result<EffectiveQfi> {
    let qfi = sld_qfi(&discretize(state)?)?;
    let probability = state.postselection_probability_allorder();
    Ok(EffectiveQfi { probability, qfi, effective: probability * qfi })
}

/// QFI from the Bures distance between neighbouring states,
/// `8 (1 - sqrt F(rho_theta, rho_theta+eps)) / eps^2`, Richardson-extrapolated
/// from steps `eps` and `2 eps`.
pub fn bures_qfi_oracle(state: &PostSelectedMeterState, epsilon: f64) -> Result<f64> {
    if !(1e-5..=1e-3).contains(&epsilon) {
        return Err(invalid("epsilon", format!("must lie in [1e-5, 1e-3], got {epsilon}")));
    }
    let theta = state.theta();
    let r0 = matrix_of(state)?;
    let r1 = matrix_of(&state.with_theta(theta + epsilon)?)?;
    let r2 = matrix_of(&state.with_theta(theta + 2.0 * epsilon)?)?;
    let (f1, f2) = match (&r0, &r1, &r2) {
        (HermitianMatrix::Real(a), HermitianMatrix::Real(b), HermitianMatrix::Real(c)) => {
            root_fidelities(a.as_ref(), b.as_ref(), c.as_ref())?
        }
        _ => root_fidelities(
            r0.to_complex().as_ref(),
            r1.to_complex().as_ref(),
            r2.to_complex().as_ref(),
        )?,
    };
    let est = |root_f: f64, eps: f64| 8.0 * (1.0 - root_f) / (eps * eps);
    Ok(2.0 * est(f1, epsilon) - est(f2, 2.0 * epsilon))
}

/// `sqrt F` of `(a, b)` and `(a, c)`: the trace norm of `sqrt(a) sqrt(b)`,
/// computed on the numerically nonzero supports.
fn root_fidelities<T: Scalar>(a: MatRef<'_, T>, b: MatRef<'_, T>, c: MatRef<'_, T>) -> Result<(f64, f64)>
{
    let fa = scaled_support(a)?;
    let fb = scaled_support(b)?;
    let fc = scaled_support(c)?;
    Ok((trace_norm_of_product(&fa, &fb)?, trace_norm_of_product(&fa, &fc)?))
}

/// Columns `sqrt(d_k) v_k` for the eigenpairs above the truncation level.
fn scaled_support<T: Scalar>(m: MatRef<'_, T>) -> Result<Mat<T>>
{
    let (d, u) = eigh(m)?;
    let d_max = d[d.len() - 1];
    if d[0] < -POSITIVITY_TOL * d_max {
        return Err(Error::NonPositiveState { eigenvalue: d[0] });
    }
    let keep: Vec<usize> = (0..d.len()).filter(|&k| d[k] > FIDELITY_CUTOFF * d_max).collect();
    Ok(Mat::from_fn(m.nrows(), keep.len(), |i, k| {
        T::from_c64(u[(i, keep[k])].to_c64() * d[keep[k]].sqrt())
    }))
}

fn trace_norm_of_product<T: Scalar>(x: &Mat<T>, y: &Mat<T>) -> Result<f64>
{
    let core: Mat<T> = x.adjoint() * y;
    let sv = core.singular_values().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    Ok(sv.iter().sum())
}

/// Result of the bounded flat-probe model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixBQfi {
    pub qfi: f64,
    /// `N`, the integral of the generalized weight over the window.
    pub normalization: f64,
    /// Probability mass of grid points dropped at zeros of the weight.
    pub excluded_mass: f64,
}

/// QFI of the post-selected meter for a flat momentum distribution on
/// `[-p_max, p_max]`, where the state is diagonal and `L = d_theta rho / rho`.
pub fn appendix_b_qfi(theta: f64, ctx: &SelectionContext, p_max: f64) -> Result<AppendixBQfi> {
    if theta == 0.0 || !theta.is_finite() {
        return Err(invalid("theta", format!("must be finite and nonzero, got {theta}")));
    }
    // about 80 points per period of sin(2 theta p)
    let dp = std::f64::consts::PI / (80.0 * theta.abs());
    let n = ((2.0 * p_max / dp).ceil() as usize + 1).max(crate::grid::MIN_POINTS);
    appendix_b_qfi_on(theta, ctx, &MomentumGrid::new(p_max, n + n % 2)?)
}

/// [`appendix_b_qfi`] on an explicit grid.
pub fn appendix_b_qfi_on(theta: f64, ctx: &SelectionContext, grid: &MomentumGrid) -> Result<AppendixBQfi> {
    let aw = ctx.weak_value()?;
    let a2 = ctx.weak_value_abs_sq()?;
    let weight = |p: f64| {
        let (s, c) = (theta * p).sin_cos();
        c * c + 2.0 * aw.im * s * c + a2 * s * s
    };
    let dweight = |p: f64| {
        let (s2, c2) = (2.0 * theta * p).sin_cos();
        p * ((a2 - 1.0) * s2 + 2.0 * aw.im * c2)
    };
    let pts = grid.points();
    let w = grid.weights();
    let norm: f64 = pts.iter().zip(&w).map(|(&p, &wi)| wi * weight(p)).sum();
    let dnorm: f64 = pts.iter().zip(&w).map(|(&p, &wi)| wi * dweight(p)).sum();
    if norm <= 0.0 {
        return Err(Error::ZeroDensity { excluded_mass: 1.0 });
    }
    // zeros of the weight are removable singularities of (d rho)^2 / rho
    let floor = 1e-10 * (1.0 + a2);
    let (mut qfi, mut excluded) = (0.0, 0.0);
    for (&p, &wi) in pts.iter().zip(&w) {
        let g = weight(p);
        if g < floor {
            excluded += wi * g / norm;
            continue;
        }
        let num = dweight(p) - g * dnorm / norm;
        qfi += wi * num * num / (g * norm);
    }
    if excluded > MAX_SKIPPED_MASS {
        return Err(Error::ZeroDensity { excluded_mass: excluded });
    }
    Ok(AppendixBQfi { qfi, normalization: norm, excluded_mass: excluded })
}

fn unitary_and_derivative(obs: &Mat2, theta: f64, p: f64) -> (Mat2, Mat2) {
    let id = identity2();
    let (s, c) = (theta * p).sin_cos();
    let i = C64::new(0.0, 1.0);
    let mut u = [[C64::new(0.0, 0.0); 2]; 2];
    let mut du = u;
    for r in 0..2 {
        for k in 0..2 {
            u[r][k] = id[r][k] * c - i * obs[r][k] * s;
            du[r][k] = -(id[r][k] * s + i * obs[r][k] * c) * p;
        }
    }
    (u, du)
}

/// `X rho_s Y^+` for 2x2 matrices.
fn sandwich(x: &Mat2, rho: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (a, row) in out.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..2 {
                for l in 0..2 {
                    acc += x[a][k] * rho[k][l] * y[b][l].conj();
                }
            }
            *cell = acc;
        }
    }
    out
}

fn pre_density(ctx: &SelectionContext) -> Mat2 {
    let v = ctx.pre_state().components();
    [[v[0] * v[0].conj(), v[0] * v[1].conj()], [v[1] * v[0].conj(), v[1] * v[1].conj()]]
}

/// Joint system-meter state `U(p) rho_s U(p')^+ rho_d(p, p')` on a `2n` basis.
pub fn discretize_joint(
    probe: &ThermalGaussianProbe,
    ctx: &SelectionContext,
    theta: f64,
    grid: &MomentumGrid,
) -> Result<DiscretizedState> {
    ctx.require_involutive()?;
    let pts = grid.points();
    let w = grid.weights();
    let n = pts.len();
    let rho_s = pre_density(ctx);
    let ops: Vec<(Mat2, Mat2)> = pts.iter().map(|&p| unitary_and_derivative(ctx.observable(), theta, p)).collect();
    let trace: f64 = (0..n).map(|i| w[i] * probe.momentum_density(pts[i])).sum();
    let kernel = |i: usize, j: usize| probe.density_kernel_p(pts[i], pts[j]) * (w[i] * w[j]).sqrt() / trace;
    let block = |i: usize, j: usize, deriv: bool| {
        let (ui, dui) = &ops[i];
        let (uj, duj) = &ops[j];
        if deriv {
            let a = sandwich(dui, &rho_s, uj);
            let b = sandwich(ui, &rho_s, duj);
            [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
        } else {
            sandwich(ui, &rho_s, uj)
        }
    };
    let build = |deriv: bool| {
        HermitianMatrix::from_fn(2 * n, false, |r, c| {
            let (s, i) = (r / n, r % n);
            let (t, j) = (c / n, c % n);
            block(i, j, deriv)[s][t] * kernel(i, j)
        })
    };
    DiscretizedState::new(*grid, build(false), build(true))
}

/// Meter alone without post-selection, `Tr_s` of the joint state.
pub fn discretize_unselected_meter(
    probe: &ThermalGaussianProbe,
    ctx: &SelectionContext,
    theta: f64,
    grid: &MomentumGrid,
) -> Result<DiscretizedState> {
    ctx.require_involutive()?;
    let pts = grid.points();
    let w = grid.weights();
    let n = pts.len();
    let rho_s = pre_density(ctx);
    let ops: Vec<(Mat2, Mat2)> = pts.iter().map(|&p| unitary_and_derivative(ctx.observable(), theta, p)).collect();
    let trace: f64 = (0..n).map(|i| w[i] * probe.momentum_density(pts[i])).sum();
    let tr = |m: Mat2| m[0][0] + m[1][1];
    let kernel = |i: usize, j: usize| probe.density_kernel_p(pts[i], pts[j]) * (w[i] * w[j]).sqrt() / trace;
    let rho = HermitianMatrix::from_fn(n, false, |i, j| tr(sandwich(&ops[i].0, &rho_s, &ops[j].0)) * kernel(i, j));
    let drho = HermitianMatrix::from_fn(n, false, |i, j| {
        (tr(sandwich(&ops[i].1, &rho_s, &ops[j].0)) + tr(sandwich(&ops[i].0, &rho_s, &ops[j].1))) * kernel(i, j)
    });
    DiscretizedState::new(*grid, rho, drho)
}

/// SLD QFI of the joint system-meter state.
pub fn joint_state_qfi(
    probe: &ThermalGaussianProbe,
    ctx: &SelectionContext,
    theta: f64,
    grid: &MomentumGrid,
) -> Result<f64> {
    sld_qfi(&discretize_joint(probe, ctx, theta, grid)?)
}

/// SLD QFI of the unselected meter.
pub fn unselected_meter_qfi(
    probe: &ThermalGaussianProbe,
    ctx: &SelectionContext,
    theta: f64,
    grid: &MomentumGrid,
) -> Result<f64> {
    sld_qfi(&discretize_unselected_meter(probe, ctx, theta, grid)?)
}
