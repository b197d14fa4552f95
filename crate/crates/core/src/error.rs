use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The steady state is not unique (no couplings, or a field
    /// configuration with a degenerate kernel).
    #[error("degenerate steady state: {0}")]
    Degenerate(String),

    #[error("ill-conditioned steady-state solve (1-norm condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("velocity class vz = {vz} m/s: {source}")]
    VelocityClass { vz: f64, source: Box<Error> },

    #[error("integration failed at zeta = {zeta}: {reason}")]
    Integration { zeta: f64, reason: String },

    /// A perturbative predictor was asked for outside its regime guard.
    #[error("regime not applicable: {0}")]
    Applicability(String),

    #[error("total optical power exhausted beyond zeta = {zeta_limit}")]
    DissipationExhausted { zeta_limit: f64 },

    #[error("unknown preset `{name}` (available: {available})")]
    UnknownPreset { name: String, available: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Numerical failures (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::IllConditioned { .. } | Error::Integration { .. } => true,
            Error::VelocityClass { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
