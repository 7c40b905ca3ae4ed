//! Experiment orchestration behind the command-line front end: config
//! parsing, pulse construction, and data-only CSV/JSON outputs.

mod commands;
mod config;
pub mod io;

pub use commands::{
    build_pulse, cell_seed, cmd_curves, cmd_estimate, cmd_fisher, cmd_montecarlo, cmd_simulate, cmd_synth,
    BuiltPulse, CellReport, Curves, EstimateReport, FisherOutput, FisherSummary, MultipathInfo, PulseCoefficients,
    SimulateReport, SynthMetadata,
};
pub use config::{
    ConfigError, EstimatorKind, ExperimentConfig, GridSearchConfig, KeyValues, PulseConfig, PulseKind, VtauConvention,
    X0Window, DEFAULT_D_VALUES, DEFAULT_GRID_SPAN_FACTOR,
};

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Failure of a harness command.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl HarnessError {
    /// 2 for configuration errors, 3 for numerical degeneracy, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Core(e) if e.is_degeneracy() => 3,
            _ => 1,
        }
    }
}

/// Machine-readable error written in place of a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

impl From<&HarnessError> for ErrorRecord {
    fn from(e: &HarnessError) -> Self {
        let kind = match e {
            HarnessError::Config(c) => format!("config:{}", c.field),
            HarnessError::Io(_) => "io".into(),
            HarnessError::Core(c) => match c {
                Error::Domain { .. } => "domain",
                Error::InvalidArgument { .. } => "invalid_argument",
                Error::NotNormalized { .. } => "not_normalized",
                Error::Truncation { .. } => "truncation",
                Error::GridMismatch => "grid_mismatch",
                Error::DegeneratePulse { .. } => "degenerate_pulse",
                Error::SingularInformation { .. } => "singular_information",
                Error::NoSignal { .. } => "no_signal",
                Error::InsufficientTrials { .. } => "insufficient_trials",
            }
            .into(),
        };
        ErrorRecord {
            kind,
            message: e.to_string(),
        }
    }
}
