use thiserror::Error;

/// Errors raised by the probe, meter and Fisher-information engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("pre- and post-selected states are orthogonal (|<f|i>|^2 = {overlap:e}); weak value undefined")]
    OrthogonalSelection { overlap: f64 },

    #[error("post-selection probability {probability:e} is too small for a post-selected ensemble")]
    ZeroPostselection { probability: f64 },

    #[error("momentum grid under-resolved: estimated tail mass {tail_mass:e} outside |p| <= {p_max}")]
    GridUnderresolved { tail_mass: f64, p_max: f64 },

    #[error("closed-form SNR radicand is negative ({radicand:e})")]
    ImaginaryDenominator { radicand: f64 },

    #[error("covariance matrix is singular (det = {determinant:e})")]
    SingularCovariance { determinant: f64 },

    #[error("SLD undefined on the null space: skipped derivative mass {skipped_mass:e}")]
    DegenerateSupport { skipped_mass: f64 },

    #[error("density matrix has eigenvalue {eigenvalue:e} below the positivity tolerance")]
    NonPositiveState { eigenvalue: f64 },

    #[error("density vanishes on {excluded_mass:e} of the integration window")]
    ZeroDensity { excluded_mass: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
