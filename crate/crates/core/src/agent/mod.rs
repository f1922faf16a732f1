//! Q-learning over (observation, action) text pairs with personality policy
//! shaping.
//!
//! The value network scores each candidate action; at selection time the
//! configured trait's valence shifts each value by `weight * valence` and an
//! action is drawn from the softmax of the shifted values. TD targets always
//! use the unshaped values.

mod encoder;
mod policy;
mod qmodel;
mod replay;

use serde::{Deserialize, Serialize};

use crate::personality::TraitId;

pub use encoder::{encode, SparseVec};
pub use policy::{argmax, select_action, shape_q, shaped_values, softmax, SelectionMode};
pub use qmodel::{Features, Gradient, QModel, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use replay::{ReplayBuffer, Transition};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("no candidate actions")]
    NoCandidates,
    #[error("non-finite action value {0}")]
    NonFiniteValue(f64),
    #[error("non-finite TD loss {0}")]
    NonFiniteLoss(f64),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("replay buffer is empty")]
    EmptyBuffer,
    #[error("non-terminal transition without next candidates")]
    MissingNextCandidates,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub const DEFAULT_SHAPING_WEIGHT: f64 = 2.0;

/// Target trait and signed shaping weight. `trait_id = None` is the unguided agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingConfig {
    #[serde(rename = "trait")]
    pub trait_id: Option<TraitId>,
    pub weight: f64,
}

impl ShapingConfig {
    pub fn none() -> Self {
        ShapingConfig {
            trait_id: None,
            weight: 0.0,
        }
    }

    pub fn toward_high(t: TraitId) -> Self {
        ShapingConfig {
            trait_id: Some(t),
            weight: DEFAULT_SHAPING_WEIGHT,
        }
    }

    pub fn toward_low(t: TraitId) -> Self {
        ShapingConfig {
            trait_id: Some(t),
            weight: -DEFAULT_SHAPING_WEIGHT,
        }
    }

    /// Weight actually applied; zero for the unguided agent.
    pub fn effective_weight(&self) -> f64 {
        if self.trait_id.is_some() {
            self.weight
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.trait_id.is_some() && !(self.weight.is_finite() && self.weight != 0.0) {
            return Err(AgentError::Config("shaping weight must be finite and non-zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub discount: f64,
    pub batch: usize,
    pub grad_clip: f64,
    pub learning_rate: f64,
    pub steps_per_episode: u32,
    /// Total environment steps across all parallel environments.
    pub max_steps: u64,
    /// Halt when the best 50-episode moving average has not improved for
    /// this many environment steps. `None` disables early stopping.
    pub early_stop: Option<u64>,
    pub n_envs: usize,
    pub seed: u64,
    pub hash_dim: usize,
    pub hidden_dim: usize,
    pub replay_capacity: usize,
    pub replay_priority: f64,
    /// TD updates per round of parallel environment steps.
    pub updates_per_round: usize,
    /// Sample from the softmax of shaped values (true) or of raw values.
    pub shaped_selection: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            discount: 0.9,
            batch: 64,
            grad_clip: 5.0,
            learning_rate: 1e-3,
            steps_per_episode: 100,
            max_steps: 15_000,
            early_stop: Some(5_000),
            n_envs: 8,
            seed: 1,
            hash_dim: 512,
            hidden_dim: 128,
            replay_capacity: 10_000,
            replay_priority: 0.5,
            updates_per_round: 1,
            shaped_selection: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Config(m.to_string()));
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return bad("discount must lie in (0, 1)");
        }
        if self.batch == 0 || self.steps_per_episode == 0 || self.max_steps == 0 || self.n_envs == 0 {
            return bad("batch, steps_per_episode, max_steps and n_envs must be positive");
        }
        if self.hash_dim == 0 || self.hidden_dim == 0 || self.replay_capacity == 0 {
            return bad("model and buffer sizes must be positive");
        }
        if !(self.grad_clip > 0.0 && self.learning_rate > 0.0) {
            return bad("grad_clip and learning_rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.replay_priority) {
            return bad("replay_priority must lie in [0, 1]");
        }
        if self.early_stop == Some(0) {
            return bad("early_stop must be positive when set");
        }
        Ok(())
    }
}
