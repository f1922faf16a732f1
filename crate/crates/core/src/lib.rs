//! Personality-guided text-game agents.
//!
//! The crate is organised around five subsystems:
//!
//! * [`world`]: a deterministic, declarative text-game engine (places, objects,
//!   action rules, rewards and a walkthrough).
//! * [`oracle`]: valence classifiers that judge a (situation, action) pair for a
//!   personality trait, either from a lexicon or a remote service.
//! * [`agent`]: a hashed bag-of-words Q-network, replay buffer, TD learning and
//!   personality-shaped softmax action selection.
//! * [`harness`]: training runs, run directories, score matrices and learning
//!   curves.
//! * [`analytics`]: score criteria, Wilcoxon/Friedman tests, trajectory,
//!   alignment, concordance and correlation metrics.

pub mod agent;
pub mod analytics;
pub mod bundled;
pub mod harness;
pub mod oracle;
pub mod personality;
pub mod text;
pub mod trajectory;
pub mod world;

pub use personality::{TraitId, Valence};
pub use trajectory::{Source, StepRecord, Trajectory};
