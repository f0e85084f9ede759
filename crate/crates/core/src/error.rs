use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("operator is not Hermitian")]
    NonHermitian,

    #[error("generator is not trace preserving")]
    NotTracePreserving,

    #[error("singular dynamics in {what} (condition number {cond:e})")]
    SingularDynamics { what: &'static str, cond: f64 },

    #[error("positivity breach in trajectory {trajectory} at t = {time}: eigenvalue {eigenvalue:e}")]
    PositivityBreach {
        trajectory: usize,
        time: f64,
        eigenvalue: f64,
    },

    #[error("insufficient window: {have} available, {need} required")]
    InsufficientWindow { have: f64, need: f64 },

    #[error("quadrature failed: truncation horizon exceeds {horizon}")]
    QuadratureFailure { horizon: f64 },

    #[error("spectrum peak is not unimodal: {0}")]
    NotUnimodal(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularDynamics { .. }
                | Error::PositivityBreach { .. }
                | Error::InsufficientWindow { .. }
                | Error::QuadratureFailure { .. }
                | Error::NotUnimodal(_)
        )
    }
}
