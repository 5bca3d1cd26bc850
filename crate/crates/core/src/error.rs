use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violated a type invariant or an operation precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The image is not wider than the PSF, so the ion is unresolved.
    #[error("deconvolution failed: image width {sigma_image:e} m does not exceed PSF width {sigma_psf:e} m")]
    Deconvolution { sigma_image: f64, sigma_psf: f64 },

    /// Requested spread is below the zero-point width of the oscillator.
    #[error("spread {sigma:e} m is below the ground-state width {ground:e} m")]
    BelowGroundState { sigma: f64, ground: f64 },

    #[error("fit did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("seed failure: {0}")]
    SeedFailure(String),

    #[error("under-determined fit: {0}")]
    UnderDetermined(String),

    /// The calibration point violated Ω′ ≥ |Δ|.
    #[error(
        "effective Rabi frequency {omega_prime:e} rad/s is below |detuning| {detuning:e} rad/s"
    )]
    ImaginaryRabi { omega_prime: f64, detuning: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (fits, deconvolution) as opposed to
    /// bad input. The CLI maps the two classes to different exit codes.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Deconvolution { .. }
                | Error::BelowGroundState { .. }
                | Error::NoConvergence { .. }
                | Error::DegenerateProfile(_)
                | Error::SeedFailure(_)
                | Error::ImaginaryRabi { .. }
                | Error::UnderDetermined(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
