//! Score criteria, significance tests, movement, alignment, concordance and
//! correlation analyses over score matrices and trajectories.

mod alignment;
mod annotation;
mod criteria;
mod policy;
pub mod report;
mod stats;
mod trajectory;

pub use alignment::{alignment_ratio, relative_change, valence_counts, Alignment, Window, WINDOW_EPISODES};
pub use annotation::{annotate_walkthrough, trait_correlation, valence_shares, TraitMatrix, ValenceShare};
pub use criteria::{compute_criteria, CriteriaResult, TraitCriteria};
pub use policy::{
    concordance_between, concordance_rate, greedy_choice, reward_action_stats, selection_percent,
    selection_probability, Probe, RewardActionStats,
};
pub use stats::{
    friedman_test, nearly_equal, ranks, signed_rank_counts, signed_rank_sums, wilcoxon_signed_rank, Method,
    SignedRankSums, StatResult, EXACT_MAX_N, TIE_TOLERANCE,
};
pub use trajectory::{distinct_places, first_arrivals, start_place, trajectory_metrics, TrajectoryMetrics};

use crate::agent::AgentError;
use crate::oracle::OracleError;
use crate::personality::TraitId;
use crate::world::WorldError;

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("test undefined: {0}")]
    Undefined(String),
    #[error("score matrix has no `{0}` column")]
    MissingColumn(String),
    #[error("trajectory not annotated for {0}")]
    Unannotated(TraitId),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    World(#[from] WorldError),
}
