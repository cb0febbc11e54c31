//! Experiment harness for Dirichlet MC-dropout uncertainty: trains the
//! dropout and deterministic networks, evaluates train/test/noisy/OOD splits
//! for `dbue`, `dec` and `iad`, runs rotation sweeps, and writes JSON/CSV
//! reports and SVG plots.

pub mod config;
pub mod experiment;
pub mod plot;
pub mod report;
pub mod rotation;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, Method, OodScoring, Seeds};
pub use experiment::{evaluate, load_splits, run_experiment, run_experiment_with_progress, train_models, Models, Splits};
pub use report::{emit_report, median, EvaluationReport, ReportFormat, Split, SplitReport};
pub use rotation::{rotation_sweep, RotationPoint, RotationSeries};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] dbue_core::Error),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("missing input file {0}")]
    MissingFile(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Precondition(String),
}

impl HarnessError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// Stable short name for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Core(dbue_core::Error::TrainingDiverged { .. }) => "training_diverged",
            HarnessError::Core(_) => "core",
            HarnessError::Config(_) | HarnessError::Toml(_) => "config",
            HarnessError::MissingFile(_) => "missing_file",
            HarnessError::Io { .. } => "io",
            HarnessError::Json(_) | HarnessError::Csv(_) => "serialization",
            HarnessError::Precondition(_) => "precondition",
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
