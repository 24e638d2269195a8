use thiserror::Error;

/// Errors raised by the pricing engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument {arg} outside the domain of {what}")]
    Domain { what: &'static str, arg: String },

    #[error("Riccati solution blew up at t = {t:.6e} (|Psi| > 1e12)")]
    BlowUp { t: f64 },

    #[error("step size underflow at t = {t:.6e}")]
    StepUnderflow { t: f64 },

    #[error("transform argument left the characteristic domain at t = {t:.6e}: {detail}")]
    DomainExit { t: f64, detail: String },

    #[error("ODE step budget of {max_steps} exhausted at t = {t:.6e}")]
    MaxSteps { t: f64, max_steps: usize },

    #[error("series did not converge: {0}")]
    NoConvergence(String),

    #[error("logarithm branch could not be unwound on a grid of {grid} points")]
    BranchAmbiguity { grid: usize },

    #[error("transform evaluated within 1e-10 of a pole at u = {u}")]
    PoleProximity { u: String },

    #[error("no admissible contour abscissa: {0}")]
    NoValidAbscissa(String),

    #[error("integrand not decaying: |g(U)| / peak = {ratio:.3e} at U = {half_width:.3e}")]
    TailNotDecaying { half_width: f64, ratio: f64 },

    #[error("invalid contour: {0}")]
    InvalidContour(String),

    #[error("model not supported by the Monte Carlo oracle: {0}")]
    UnsupportedModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for the failures that mark a missing exponential moment.
    pub fn is_moment_failure(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::DomainExit { .. }
                | Error::Domain { .. }
                | Error::StepUnderflow { .. }
                | Error::MaxSteps { .. }
        )
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
