//! Qubit pre-selection, post-selection and observable.
//!
//! The weak value and its modulus are computed from trace moments
//! `Tr[Pi_f rho_s]`, `Tr[Pi_f A rho_s]` and `Tr[Pi_f A rho_s A]` rather than
//! from amplitudes, so every quantity that only needs the moments stays
//! finite when the two states are orthogonal.

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};

/// Overlaps `|<f|i>|^2` below this are treated as orthogonal.
pub const ORTHOGONALITY_THRESHOLD: f64 = 1e-14;

const INVOLUTION_TOL: f64 = 1e-12;

/// 2x2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];

/// Normalized qubit state vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState([C64; 2]);

impl QubitState {
    /// Normalizes `(a, b)`; fails on a zero or non-finite vector.
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid("state", format!("cannot normalize ({a}, {b})")));
        }
        Ok(Self([a / norm, b / norm]))
    }

    pub fn zero() -> Self {
        Self([C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
    }

    pub fn one() -> Self {
        Self([C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
    }

    pub fn components(&self) -> [C64; 2] {
        self.0
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QubitState) -> C64 {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    /// `<self|m|other>`.
    pub fn sandwich(&self, m: &Mat2, other: &QubitState) -> C64 {
        let v = apply(m, &other.0);
        self.0[0].conj() * v[0] + self.0[1].conj() * v[1]
    }

    /// Multiplies by a global phase.
    pub fn with_phase(&self, phase: f64) -> Self {
        let u = C64::from_polar(1.0, phase);
        Self([self.0[0] * u, self.0[1] * u])
    }
}

fn apply(m: &Mat2, v: &[C64; 2]) -> [C64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn pauli_x() -> Mat2 {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    [[o, l], [l, o]]
}

pub fn pauli_y() -> Mat2 {
    let (o, i) = (C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    [[o, -i], [i, o]]
}

pub fn pauli_z() -> Mat2 {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    [[l, o], [o, -l]]
}

pub fn identity2() -> Mat2 {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    [[l, o], [o, l]]
}

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Pre-selected state, post-selected state and observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionContext {
    pre: QubitState,
    post: QubitState,
    observable: Mat2,
}

impl SelectionContext {
    /// Fails if the observable is not Hermitian.
    pub fn new(pre: QubitState, post: QubitState, observable: Mat2) -> Result<Self> {
        let scale = observable.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
        for i in 0..2 {
            for j in 0..2 {
                if (observable[i][j] - observable[j][i].conj()).norm() > 1e-12 * scale {
                    return Err(invalid("observable", "must be Hermitian"));
                }
            }
        }
        Ok(Self { pre, post, observable })
    }

    /// `|i> = cos(phi)|0> + i sin(phi)|1>`, `|f> = |0>`, `A = sigma_x`.
    ///
    /// Gives `A_w = i tan(phi)` and `|<f|i>|^2 = cos^2(phi)`.
    pub fn qubit_family(phi: f64) -> Result<Self> {
        let pre = QubitState::new(C64::new(phi.cos(), 0.0), C64::new(0.0, phi.sin()))?;
        Self::new(pre, QubitState::zero(), pauli_x())
    }

    /// Builds a `sigma_x` context with the requested weak value and
    /// post-selection probability `|<f|i>|^2 = overlap`.
    ///
    /// `|f>` is parametrized by `<sigma_x>_f = a`; the constraint that `|i>`
    /// is normalized fixes `a` through
    /// `(1 + R) a^2 - 2 Re(A_w) a + |A_w|^2 - R = 0` with `R = (1 - P) / P`.
    pub fn from_weak_value(weak_value: C64, overlap: f64) -> Result<Self> {
        if !(overlap > 0.0 && overlap <= 1.0) {
            return Err(invalid("overlap", format!("must lie in (0, 1], got {overlap}")));
        }
        let r = (1.0 - overlap) / overlap;
        let re = weak_value.re;
        let disc = re * re - (1.0 + r) * (weak_value.norm_sqr() - r);
        if disc < 0.0 {
            return Err(invalid(
                "weak_value",
                format!("{weak_value} is unreachable with |<f|i>|^2 = {overlap}"),
            ));
        }
        let a = [(re + disc.sqrt()) / (1.0 + r), (re - disc.sqrt()) / (1.0 + r)]
            .into_iter()
            .find(|a| a.abs() < 1.0 - 1e-15)
            .ok_or_else(|| invalid("weak_value", "post-selected state degenerates to a sigma_x eigenstate"))?;
        let eta = a.acos();
        let (ch, sh) = ((eta / 2.0).cos(), (eta / 2.0).sin());
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        // |+> and |-> in the computational basis
        let plus = [C64::new(r2, 0.0), C64::new(r2, 0.0)];
        let minus = [C64::new(r2, 0.0), C64::new(-r2, 0.0)];
        let f = [ch * plus[0] + sh * minus[0], ch * plus[1] + sh * minus[1]];
        let f_perp = [-sh * plus[0] + ch * minus[0], -sh * plus[1] + ch * minus[1]];
        let c = overlap.sqrt();
        let s = (C64::new(a, 0.0) - weak_value) * (c / eta.sin());
        let pre = QubitState::new(c * f[0] + s * f_perp[0], c * f[1] + s * f_perp[1])?;
        let post = QubitState::new(f[0], f[1])?;
        Self::new(pre, post, pauli_x())
    }

    pub fn pre_state(&self) -> &QubitState {
        &self.pre
    }

    pub fn post_state(&self) -> &QubitState {
        &self.post
    }

    pub fn observable(&self) -> &Mat2 {
        &self.observable
    }

    /// Whether `A^2 = I` within `1e-12`.
    pub fn is_involutive(&self) -> bool {
        let sq = matmul(&self.observable, &self.observable);
        let id = identity2();
        (0..2).all(|i| (0..2).all(|j| (sq[i][j] - id[i][j]).norm() <= INVOLUTION_TOL))
    }

    pub(crate) fn require_involutive(&self) -> Result<()> {
        if self.is_involutive() {
            Ok(())
        } else {
            Err(invalid("observable", "the meter model requires A^2 = I"))
        }
    }

    /// `<f|i>`.
    pub fn overlap_amplitude(&self) -> C64 {
        self.post.inner(&self.pre)
    }

    /// `<f|A|i>`. Depends on the global phases of both states.
    pub fn transition_amplitude(&self) -> C64 {
        self.post.sandwich(&self.observable, &self.pre)
    }

    /// `Tr[Pi_f rho_s] = |<f|i>|^2`, the zeroth-order post-selection probability.
    pub fn postselection_overlap(&self) -> f64 {
        self.overlap_amplitude().norm_sqr()
    }

    /// `Tr[Pi_f A rho_s] = <f|A|i><i|f>`.
    pub fn trace_pi_a_rho(&self) -> C64 {
        self.transition_amplitude() * self.overlap_amplitude().conj()
    }

    /// `Tr[Pi_f A rho_s A] = |<f|A|i>|^2`.
    pub fn trace_pi_a_rho_a(&self) -> f64 {
        self.transition_amplitude().norm_sqr()
    }

    fn nonorthogonal_overlap(&self) -> Result<f64> {
        let overlap = self.postselection_overlap();
        if overlap < ORTHOGONALITY_THRESHOLD {
            Err(Error::OrthogonalSelection { overlap })
        } else {
            Ok(overlap)
        }
    }

    /// `A_w = Tr[Pi_f A rho_s] / Tr[Pi_f rho_s]`.
    pub fn weak_value(&self) -> Result<C64> {
        Ok(self.trace_pi_a_rho() / self.nonorthogonal_overlap()?)
    }

    /// Conjugate trace form `Tr[Pi_f rho_s A] / Tr[Pi_f rho_s]`.
    pub fn weak_value_conj(&self) -> Result<C64> {
        let overlap = self.nonorthogonal_overlap()?;
        let pi_rho_a = self.overlap_amplitude() * self.transition_amplitude().conj();
        Ok(pi_rho_a / overlap)
    }

    /// `Tr[Pi_f A rho_s A] / Tr[Pi_f rho_s]`.
    pub fn weak_value_abs_sq(&self) -> Result<f64> {
        Ok(self.trace_pi_a_rho_a() / self.nonorthogonal_overlap()?)
    }

    /// `<i|A|i>`.
    pub fn expectation(&self) -> f64 {
        self.pre.sandwich(&self.observable, &self.pre).re
    }

    /// `<i|A^2|i>`.
    pub fn expectation_sq(&self) -> f64 {
        let sq = matmul(&self.observable, &self.observable);
        self.pre.sandwich(&sq, &self.pre).re
    }
}
