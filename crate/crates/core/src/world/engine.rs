use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::spec::{ActionRule, WorldSpec, INVENTORY};
use super::WorldError;
use crate::text::{fnv1a_extend, normalize_action, text_hash};
use crate::trajectory::{Source, StepRecord, Trajectory};

pub const NOTHING_HAPPENS: &str = "Nothing happens.";
pub const DEFAULT_STEPS_PER_EPISODE: u32 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub place: String,
    pub flags: BTreeSet<String>,
    pub inventory: BTreeSet<String>,
    /// Objects moved out of their initial place by a drop effect.
    #[serde(default)]
    pub dropped: BTreeMap<String, String>,
    pub step: u32,
    pub claimed_rewards: BTreeSet<String>,
    pub score: i64,
    /// Episode seed; fixes candidate order.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub text: String,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: GameState,
    pub observation: Observation,
    pub reward: i64,
    pub done: bool,
    /// False when the action matched nothing applicable.
    pub applied: bool,
}

/// Runs a [`WorldSpec`]. Cheap to construct; borrows the world immutably.
#[derive(Debug, Clone, Copy)]
pub struct Engine<'w> {
    world: &'w WorldSpec,
    steps_per_episode: Option<u32>,
}

enum Resolved<'w> {
    Move { dir: String, to: &'w str },
    Rule(&'w ActionRule),
    Nothing,
}

impl<'w> Engine<'w> {
    pub fn new(world: &'w WorldSpec, steps_per_episode: u32) -> Self {
        Engine {
            world,
            steps_per_episode: Some(steps_per_episode),
        }
    }

    /// An engine whose episodes end only when no candidates remain.
    pub fn unbounded(world: &'w WorldSpec) -> Self {
        Engine {
            world,
            steps_per_episode: None,
        }
    }

    pub fn world(&self) -> &'w WorldSpec {
        self.world
    }

    pub fn reset(&self, seed: u64) -> (GameState, Observation) {
        let state = GameState {
            place: self.world.start_place.clone(),
            flags: BTreeSet::new(),
            inventory: self
                .world
                .objects
                .iter()
                .filter(|o| o.initial_place == INVENTORY)
                .map(|o| o.id.clone())
                .collect(),
            dropped: BTreeMap::new(),
            step: 0,
            claimed_rewards: BTreeSet::new(),
            score: 0,
            seed,
        };
        let obs = self.observe(&state, None);
        (state, obs)
    }

    pub fn observe(&self, state: &GameState, event: Option<&str>) -> Observation {
        let place = self
            .world
            .place(&state.place)
            .expect("state place exists in a validated world");
        let mut text = place.description.clone();
        let visible = self.visible_objects(state);
        if !visible.is_empty() {
            text.push_str("\nYou see: ");
            text.push_str(&visible.join(", "));
            text.push('.');
        }
        if let Some(event) = event {
            text.push('\n');
            text.push_str(event);
        }
        Observation {
            text,
            candidates: self.candidates(state),
        }
    }

    fn object_location<'s>(&self, state: &'s GameState, id: &'s str, initial: &'s str) -> &'s str {
        if state.inventory.contains(id) {
            INVENTORY
        } else if let Some(p) = state.dropped.get(id) {
            p
        } else {
            initial
        }
    }

    pub fn visible_objects(&self, state: &GameState) -> Vec<&'w str> {
        self.world
            .objects
            .iter()
            .filter(|o| self.object_location(state, &o.id, &o.initial_place) == state.place)
            .map(|o| o.name.as_str())
            .collect()
    }

    /// Exit moves, place-matching rules and distractors, deduplicated and in a
    /// seed-dependent order.
    pub fn candidates(&self, state: &GameState) -> Vec<String> {
        let Some(place) = self.world.place(&state.place) else {
            return Vec::new();
        };
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut push = |action: String| {
            if seen.insert(action.clone()) {
                out.push(action);
            }
        };
        for dir in place.exits.keys() {
            push(normalize_action(&format!("go {dir}")));
        }
        for rule in &self.world.rules {
            if rule.preconditions.place_matches(&state.place) {
                push(normalize_action(&rule.text));
            }
        }
        if let Some(extra) = self.world.distractors.get(&state.place) {
            for d in extra {
                let d = normalize_action(d);
                if !d.is_empty() {
                    push(d);
                }
            }
        }
        let seed = state.seed.to_le_bytes();
        out.sort_by_cached_key(|c| (fnv1a_extend(crate::text::fnv1a(&seed), c.as_bytes()), c.clone()));
        out
    }

    fn rule_applies(&self, rule: &ActionRule, state: &GameState) -> bool {
        let pre = &rule.preconditions;
        pre.place_matches(&state.place)
            && pre.flags.is_subset(&state.flags)
            && pre.absent_flags.is_disjoint(&state.flags)
            && pre.inventory.is_subset(&state.inventory)
    }

    fn resolve(&self, state: &GameState, action: &str) -> Resolved<'w> {
        let action = normalize_action(action);
        if action.is_empty() {
            return Resolved::Nothing;
        }
        if let Some(rule) = self
            .world
            .rules
            .iter()
            .find(|r| normalize_action(&r.text) == action && self.rule_applies(r, state))
        {
            return Resolved::Rule(rule);
        }
        let dir = action.strip_prefix("go ").unwrap_or(&action);
        let place = self.world.place(&state.place).expect("validated place");
        if let Some(exit) = place.exits.get(dir) {
            let open = exit.guard().is_none_or(|g| state.flags.contains(g));
            if open {
                return Resolved::Move {
                    dir: dir.to_string(),
                    to: exit.target(),
                };
            }
        }
        Resolved::Nothing
    }

    /// Applies `action`. Unmatched actions are no-ops that still cost a step.
    pub fn step(&self, state: &GameState, action: &str) -> StepOutcome {
        let mut next = state.clone();
        next.step += 1;
        let mut reward = 0;
        let (event, applied) = match self.resolve(state, action) {
            Resolved::Nothing => (NOTHING_HAPPENS.to_string(), false),
            Resolved::Move { dir, to } => {
                next.place = to.to_string();
                (format!("You go {dir}."), true)
            }
            Resolved::Rule(rule) => {
                let eff = &rule.effects;
                for obj in &eff.drop {
                    if next.inventory.remove(obj) {
                        next.dropped.insert(obj.clone(), state.place.clone());
                    }
                }
                for obj in &eff.take {
                    next.dropped.remove(obj);
                    next.inventory.insert(obj.clone());
                }
                for f in &eff.clear_flags {
                    next.flags.remove(f);
                }
                next.flags.extend(eff.set_flags.iter().cloned());
                if let Some(to) = &eff.move_to {
                    next.place = to.clone();
                }
                if let Some(r) = &rule.reward {
                    if !r.once || !next.claimed_rewards.contains(&r.id) {
                        reward = r.points;
                        next.claimed_rewards.insert(r.id.clone());
                    }
                }
                next.score += reward;
                (eff.text.clone().unwrap_or_else(|| "Done.".to_string()), true)
            }
        };
        let observation = self.observe(&next, Some(&event));
        let capped = self.steps_per_episode.is_some_and(|cap| next.step >= cap);
        let done = capped || observation.candidates.is_empty();
        StepOutcome {
            state: next,
            observation,
            reward,
            done,
            applied,
        }
    }

    /// Executes the walkthrough from a seed-0 reset. Every step must apply.
    pub fn replay_walkthrough(&self) -> Result<(i64, Trajectory), WorldError> {
        let (mut state, mut obs) = self.reset(0);
        let mut traj = Trajectory::new();
        for (index, action) in self.world.walkthrough.iter().enumerate() {
            let out = self.step(&state, action);
            if !out.applied {
                return Err(WorldError::Walkthrough {
                    index,
                    action: action.clone(),
                });
            }
            let normalized = normalize_action(action);
            let mut candidates = obs.candidates.clone();
            let chosen = match candidates.iter().position(|c| *c == normalized) {
                Some(i) => i,
                None => {
                    candidates.push(normalized);
                    candidates.len() - 1
                }
            };
            traj.push(StepRecord {
                t: out.state.step,
                place: out.state.place.clone(),
                obs_hash: text_hash(&obs.text),
                obs: obs.text.clone(),
                candidates,
                chosen,
                valences: BTreeMap::new(),
                reward: out.reward,
                score: out.state.score,
                source: Source::Walkthrough,
            });
            state = out.state;
            obs = out.observation;
        }
        Ok((state.score, traj))
    }
}

/// Convenience wrappers mirroring the engine methods as free functions.
pub fn reset(world: &WorldSpec, seed: u64) -> (GameState, Observation) {
    Engine::new(world, DEFAULT_STEPS_PER_EPISODE).reset(seed)
}

pub fn step(world: &WorldSpec, state: &GameState, action: &str) -> StepOutcome {
    Engine::new(world, DEFAULT_STEPS_PER_EPISODE).step(state, action)
}

pub fn candidates(world: &WorldSpec, state: &GameState) -> Vec<String> {
    Engine::unbounded(world).candidates(state)
}

pub fn replay_walkthrough(world: &WorldSpec) -> Result<(i64, Trajectory), WorldError> {
    Engine::unbounded(world).replay_walkthrough()
}
