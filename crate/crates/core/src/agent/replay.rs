use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AgentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: String,
    pub action: String,
    pub reward: f64,
    pub next_obs: String,
    pub next_candidates: Vec<String>,
    pub done: bool,
}

/// FIFO experience buffer. A fraction `priority_fraction` of each batch is
/// drawn from reward-bearing transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    priority_fraction: f64,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, priority_fraction: f64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        assert!(
            (0.0..=1.0).contains(&priority_fraction),
            "priority fraction must lie in [0, 1]"
        );
        ReplayBuffer {
            capacity,
            priority_fraction,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    /// Indices of a batch, with replacement: `ceil(rho * batch)` from
    /// reward-bearing items (all items if there are none), the rest from all.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>, AgentError> {
        if self.items.is_empty() {
            return Err(AgentError::EmptyBuffer);
        }
        let rewarded: Vec<usize> = (0..self.items.len()).filter(|&i| self.items[i].reward > 0.0).collect();
        let prioritized = (self.priority_fraction * batch as f64).ceil() as usize;
        let n = self.items.len();
        let mut out = Vec::with_capacity(batch);
        for k in 0..batch {
            let idx = if k < prioritized && !rewarded.is_empty() {
                rewarded[rng.random_range(0..rewarded.len())]
            } else {
                rng.random_range(0..n)
            };
            out.push(idx);
        }
        Ok(out)
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>, AgentError> {
        Ok(self
            .sample_indices(batch, rng)?
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}
