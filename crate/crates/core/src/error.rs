use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside the domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("waveform is not normalized: power {power} (expected 1)")]
    NotNormalized { power: f64 },

    #[error("shift of {shift} pushes {lost_fraction:.3e} of the pulse power off the grid")]
    Truncation { shift: f64, lost_fraction: f64 },

    #[error("waveforms are sampled on different grids")]
    GridMismatch,

    #[error("degenerate pulse: Var[p^2] = {var_p2:.3e}, separation cannot be told apart from loss")]
    DegeneratePulse { var_p2: f64 },

    #[error("singular Fisher information: {reason}")]
    SingularInformation { reason: String },

    #[error("no signal: projection onto the pulse {projection:.3e} is below the floor {floor:.3e}")]
    NoSignal { projection: f64, floor: f64 },

    #[error("only {succeeded} of {trials} Monte Carlo trials succeeded; need at least 2")]
    InsufficientTrials { trials: usize, succeeded: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by an information-free pulse or scene,
    /// as opposed to bad input.
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::DegeneratePulse { .. } | Error::SingularInformation { .. } | Error::NoSignal { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
