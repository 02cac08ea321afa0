//! File formats, reports and command implementations behind the `blepi`
//! binary. Each command returns its report text and exit code so it can be
//! driven from tests without spawning a process.

pub mod commands;
pub mod format;
pub mod report;

use std::path::PathBuf;

use blepi_core::estimate::{DEFAULT_K, DEFAULT_SAMPLES};
use blepi_core::{SearchBudget, SolverOptions};

pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const INFINITE: i32 = 3;
    pub const UNKNOWN: i32 = 4;
    pub const UNBOUNDED: i32 = 5;
    pub const VERIFY_FAILED: i32 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("invalid datum: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] blepi_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } => exit::IO,
            CliError::Invalid(_) | CliError::Core(_) => exit::INVALID,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Everything that shapes a run besides the command and its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub solver: SolverOptions,
    pub budget: SearchBudget,
    pub samples: usize,
    pub knn_k: usize,
    /// One-sided critical z value.
    pub confidence: f64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Report entropies in bits instead of nats.
    pub bits: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            solver: SolverOptions::default(),
            budget: SearchBudget::default(),
            samples: DEFAULT_SAMPLES,
            knn_k: DEFAULT_K,
            confidence: 3.0,
            out: None,
            format: OutputFormat::Json,
            bits: false,
        }
    }
}

impl RunConfig {
    /// Multiplier taking nats to the requested unit.
    pub fn unit_scale(&self) -> f64 {
        if self.bits {
            1.0 / std::f64::consts::LN_2
        } else {
            1.0
        }
    }

    pub fn unit_name(&self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }
}

/// Report text plus the exit code it implies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub body: String,
}
