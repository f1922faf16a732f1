//! Training runs over worlds and agent configurations, run directories, score
//! matrices and learning curves.

mod config;
mod curve;
mod run;
mod scores;
mod store;

use std::path::Path;

pub use config::{AgentConfig, AgentLabel, Direction};
pub use curve::learning_curve;
pub use run::{
    run_random_policy, run_training, EpisodeEntry, OracleFailurePolicy, OracleStats, RunLog, TrainingRun,
    CURVE_INTERVAL, SCORE_WINDOW,
};
pub use scores::{aggregate_scores, ScoreCell, ScoreMatrix};
pub use store::{
    find_runs, load_run, load_runlog, run_dir, runs_root, save_run, CHECKPOINT_FILE, EPISODES_DIR, RUNLOG_FILE,
    RUNS_DIR_ENV,
};

use crate::agent::AgentError;
use crate::oracle::OracleError;
use crate::trajectory::TrajectoryError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown agent label `{0}` (expected NP or <Trait>_up / <Trait>_down)")]
    BadLabel(String),
    #[error("no runs for world `{world}`, agent `{agent}`")]
    MissingCell { world: String, agent: String },
    #[error("score matrix: {0}")]
    Matrix(String),
}

impl HarnessError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
