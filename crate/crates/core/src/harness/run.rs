use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{AgentConfig, AgentLabel};
use super::curve::learning_curve;
use super::HarnessError;
use crate::agent::{select_action, shaped_values, QModel, ReplayBuffer, SelectionMode, TrainConfig, Transition};
use crate::oracle::{CachedOracle, OracleQuery, ValenceBackend};
use crate::personality::{TraitId, Valence};
use crate::text::text_hash;
use crate::trajectory::{Source, StepRecord, Trajectory};
use crate::world::{Engine, GameState, Observation, WorldSpec};

/// Interval, in environment steps, at which the run's curve is sampled.
pub const CURVE_INTERVAL: u64 = 100;
/// Episodes in the moving average used for early stopping and aggregation.
pub const SCORE_WINDOW: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleFailurePolicy {
    #[default]
    Abort,
    /// Treat a failed classification as neutral and keep going.
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEntry {
    pub index: usize,
    pub score: i64,
    pub steps: u32,
    /// Global environment step at which the episode ended.
    pub end_step: u64,
    /// Still running when the step budget ran out.
    #[serde(default)]
    pub truncated: bool,
    /// Trajectory file relative to the run directory, once persisted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleStats {
    pub lookups: u64,
    pub backend_calls: u64,
    pub failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub world: String,
    pub agent: AgentLabel,
    pub seed: u64,
    pub config: TrainConfig,
    pub episodes: Vec<EpisodeEntry>,
    pub curve: Vec<(u64, f64)>,
    pub total_steps: u64,
    pub stopped_early: bool,
    #[serde(default)]
    pub oracle: OracleStats,
}

impl RunLog {
    pub fn complete_episodes(&self) -> impl Iterator<Item = &EpisodeEntry> {
        self.episodes.iter().filter(|e| !e.truncated)
    }

    /// Scores of the last `n` complete episodes, oldest first.
    pub fn last_scores(&self, n: usize) -> Vec<i64> {
        let done: Vec<i64> = self.complete_episodes().map(|e| e.score).collect();
        done[done.len().saturating_sub(n)..].to_vec()
    }
}

/// Everything a run produces. `trajectories[i]` belongs to `log.episodes[i]`.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub log: RunLog,
    pub trajectories: Vec<Trajectory>,
    pub model: QModel,
}

impl TrainingRun {
    /// Trajectories of the last `n` complete episodes.
    pub fn last_trajectories(&self, n: usize) -> Vec<&Trajectory> {
        let done: Vec<&Trajectory> = self
            .log
            .episodes
            .iter()
            .zip(&self.trajectories)
            .filter(|(e, _)| !e.truncated)
            .map(|(_, t)| t)
            .collect();
        done[done.len().saturating_sub(n)..].to_vec()
    }
}

struct Env {
    state: GameState,
    obs: Observation,
    traj: Trajectory,
}

enum Chooser<'a> {
    Learner {
        trait_id: Option<TraitId>,
        weight: f64,
        oracle: CachedOracle<&'a dyn ValenceBackend>,
        policy: OracleFailurePolicy,
        failures: u64,
    },
    Uniform,
}

impl Chooser<'_> {
    fn valences(&mut self, obs: &str, candidates: &[String]) -> Result<Option<Vec<Valence>>, HarnessError> {
        let Chooser::Learner {
            trait_id: Some(t),
            oracle,
            policy,
            failures,
            ..
        } = self
        else {
            return Ok(None);
        };
        let mut out = Vec::with_capacity(candidates.len());
        for c in candidates {
            match oracle.classify(&OracleQuery::new(*t, obs, c.as_str())) {
                Ok(v) => out.push(v),
                Err(_) if *policy == OracleFailurePolicy::Neutral => {
                    *failures += 1;
                    out.push(Valence::Neutral);
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Some(out))
    }
}

/// Trains `agent` on `world`. `n_envs` episode streams advance in lockstep on
/// one thread so results depend only on the seed.
pub fn run_training(
    world: &WorldSpec,
    agent: &AgentConfig,
    oracle: &dyn ValenceBackend,
    policy: OracleFailurePolicy,
) -> Result<TrainingRun, HarnessError> {
    agent.validate()?;
    let chooser = Chooser::Learner {
        trait_id: agent.shaping.trait_id,
        weight: agent.shaping.effective_weight(),
        oracle: CachedOracle::new(oracle),
        policy,
        failures: 0,
    };
    run_loop(world, agent.label, &agent.train, chooser, true)
}

/// A uniform-random policy under the same step budget and episode structure.
pub fn run_random_policy(world: &WorldSpec, train: &TrainConfig) -> Result<TrainingRun, HarnessError> {
    train.validate()?;
    run_loop(world, AgentLabel::Np, train, Chooser::Uniform, false)
}

fn run_loop(
    world: &WorldSpec,
    label: AgentLabel,
    cfg: &TrainConfig,
    mut chooser: Chooser<'_>,
    learn: bool,
) -> Result<TrainingRun, HarnessError> {
    let engine = Engine::new(world, cfg.steps_per_episode);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = QModel::init(cfg.hash_dim, cfg.hidden_dim, &mut rng);
    let mut replay = ReplayBuffer::new(cfg.replay_capacity, cfg.replay_priority);

    let new_env = |rng: &mut ChaCha8Rng| {
        let (state, obs) = engine.reset(rng.random());
        Env {
            state,
            obs,
            traj: Trajectory::new(),
        }
    };
    let mut envs: Vec<Env> = (0..cfg.n_envs).map(|_| new_env(&mut rng)).collect();

    let mut episodes = Vec::new();
    let mut trajectories = Vec::new();
    let mut recent: VecDeque<i64> = VecDeque::with_capacity(SCORE_WINDOW);
    let mut best: Option<(f64, u64)> = None;
    let mut stopped_early = false;
    let mut global: u64 = 0;

    'outer: while global < cfg.max_steps {
        for env in envs.iter_mut() {
            if global >= cfg.max_steps {
                break 'outer;
            }
            let candidates = env.obs.candidates.clone();
            let valences = chooser.valences(&env.obs.text, &candidates)?;
            let chosen = match &chooser {
                Chooser::Uniform => rng.random_range(0..candidates.len()),
                Chooser::Learner { weight, .. } => {
                    let q = model.q_values(&env.obs.text, &candidates);
                    let values = match (&valences, cfg.shaped_selection) {
                        (Some(v), true) => shaped_values(&q, v, *weight),
                        _ => q,
                    };
                    select_action(&values, SelectionMode::Sample, &mut rng)?
                }
            };
            let action = candidates[chosen].clone();
            let out = engine.step(&env.state, &action);
            global += 1;

            let mut record_valences = BTreeMap::new();
            if let (Some(v), Chooser::Learner { trait_id: Some(t), .. }) = (&valences, &chooser) {
                record_valences.insert(*t, v[chosen]);
            }
            env.traj.push(StepRecord {
                t: out.state.step,
                place: out.state.place.clone(),
                obs_hash: text_hash(&env.obs.text),
                obs: env.obs.text.clone(),
                candidates,
                chosen,
                valences: record_valences,
                reward: out.reward,
                score: out.state.score,
                source: Source::Agent,
            });
            if learn {
                let terminal = out.observation.candidates.is_empty();
                replay.push(Transition {
                    obs: env.obs.text.clone(),
                    action,
                    reward: out.reward as f64,
                    next_obs: out.observation.text.clone(),
                    next_candidates: if terminal { vec![] } else { out.observation.candidates.clone() },
                    done: terminal,
                });
            }

            if out.done {
                let traj = std::mem::take(&mut env.traj);
                episodes.push(EpisodeEntry {
                    index: episodes.len(),
                    score: out.state.score,
                    steps: out.state.step,
                    end_step: global,
                    truncated: false,
                    file: None,
                });
                trajectories.push(traj);
                if recent.len() == SCORE_WINDOW {
                    recent.pop_front();
                }
                recent.push_back(out.state.score);
                if recent.len() == SCORE_WINDOW {
                    let avg = recent.iter().sum::<i64>() as f64 / SCORE_WINDOW as f64;
                    if best.is_none_or(|(b, _)| avg > b) {
                        best = Some((avg, global));
                    }
                }
                *env = new_env(&mut rng);
            } else {
                env.state = out.state;
                env.obs = out.observation;
            }
        }

        if learn && replay.len() >= cfg.batch {
            for _ in 0..cfg.updates_per_round {
                let batch = replay.sample(cfg.batch, &mut rng)?;
                model.td_update(&batch, cfg.discount, cfg.grad_clip, cfg.learning_rate)?;
            }
        }

        if let (Some(patience), Some((_, at))) = (cfg.early_stop, best) {
            if global - at >= patience {
                stopped_early = true;
                break;
            }
        }
    }

    for env in envs {
        if env.traj.is_empty() {
            continue;
        }
        episodes.push(EpisodeEntry {
            index: episodes.len(),
            score: env.state.score,
            steps: env.state.step,
            end_step: global,
            truncated: true,
            file: None,
        });
        trajectories.push(env.traj);
    }

    let oracle = match &chooser {
        Chooser::Learner { oracle, failures, .. } => OracleStats {
            lookups: oracle.lookups(),
            backend_calls: oracle.backend_calls(),
            failures: *failures,
        },
        Chooser::Uniform => OracleStats::default(),
    };
    let mut log = RunLog {
        world: world.id.clone(),
        agent: label,
        seed: cfg.seed,
        config: cfg.clone(),
        episodes,
        curve: Vec::new(),
        total_steps: global,
        stopped_early,
        oracle,
    };
    log.curve = learning_curve(&log, CURVE_INTERVAL);
    Ok(TrainingRun {
        log,
        trajectories,
        model,
    })
}
