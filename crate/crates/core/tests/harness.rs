mod common;

use std::collections::BTreeSet;
use std::sync::atomic::Ordering;

use common::TableOracle;
use panda_core::agent::TrainConfig;
use panda_core::harness::*;
use panda_core::{bundled, TraitId, Valence};

fn small_config(seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        max_steps: 3_400,
        steps_per_episode: 20,
        early_stop: None,
        hash_dim: 64,
        hidden_dim: 16,
        ..TrainConfig::default()
    }
}

fn oracle() -> TableOracle {
    TableOracle::default()
        .with(TraitId::Ope, "go down", Valence::High)
        .with(TraitId::Ope, "sing", Valence::Low)
}

fn train(label: &str, seed: u64, backend: &TableOracle) -> TrainingRun {
    let cfg = AgentConfig::new(label.parse().unwrap(), small_config(seed));
    run_training(&bundled::cellar(), &cfg, backend, OracleFailurePolicy::Abort).unwrap()
}

#[test]
fn run_accounting() {
    let backend = oracle();
    let run = train("Ope_up", 1, &backend);
    let log = &run.log;
    assert!(log.complete_episodes().count() >= 150, "{} episodes", log.episodes.len());
    assert!(!log.stopped_early);
    assert_eq!(log.total_steps, 3_400);
    let steps: usize = run.trajectories.iter().map(|t| t.len()).sum();
    assert_eq!(steps as u64, log.total_steps);
    assert_eq!(run.trajectories.len(), log.episodes.len());
    for (e, t) in log.episodes.iter().zip(&run.trajectories) {
        assert_eq!(e.steps as usize, t.len());
        assert_eq!(e.score, t.final_score());
        assert!(e.steps <= 20);
    }
    assert_eq!(log.curve.len(), 34);
    assert_eq!(log.curve.last().unwrap().0, 3_400);

    // one backend call per distinct (observation, candidate) the agent saw
    let seen: BTreeSet<(String, String)> = run
        .trajectories
        .iter()
        .flat_map(|t| t.steps.iter())
        .flat_map(|r| r.candidates.iter().map(move |c| (r.obs.clone(), c.clone())))
        .collect();
    assert_eq!(log.oracle.backend_calls, seen.len() as u64);
    assert_eq!(backend.calls.load(Ordering::Relaxed), seen.len() as u64);
    assert!(log.oracle.lookups > log.oracle.backend_calls);
}

#[test]
fn runs_are_deterministic() {
    let backend = oracle();
    let a = train("Ope_up", 4, &backend);
    let b = train("Ope_up", 4, &backend);
    assert_eq!(a.log, b.log);
    assert_eq!(a.trajectories, b.trajectories);
    assert_eq!(a.model.to_checkpoint(), b.model.to_checkpoint());
    let c = train("Ope_up", 5, &backend);
    assert_ne!(a.trajectories, c.trajectories);

    let world = bundled::cellar();
    let r1 = run_random_policy(&world, &small_config(2)).unwrap();
    let r2 = run_random_policy(&world, &small_config(2)).unwrap();
    assert_eq!(r1.trajectories, r2.trajectories);
}

#[test]
fn early_stop_halts_before_budget() {
    let cfg = TrainConfig {
        early_stop: Some(1_000),
        max_steps: 40_000,
        ..small_config(3)
    };
    let run = run_random_policy(&bundled::cellar(), &cfg).unwrap();
    assert!(run.log.stopped_early);
    assert!(run.log.total_steps < 40_000);
}

#[test]
fn run_directory_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let backend = oracle();
    let mut run = train("NP", 1, &backend);
    let dir = run_dir(tmp.path(), "cellar", "NP", 1);
    save_run(&dir, &mut run).unwrap();
    assert!(dir.join(RUNLOG_FILE).is_file());
    assert!(dir.join(CHECKPOINT_FILE).is_file());
    assert!(dir.join(EPISODES_DIR).is_dir());

    let loaded = load_run(&dir).unwrap();
    assert_eq!(loaded.log, run.log);
    assert_eq!(loaded.trajectories, run.trajectories);
    assert_eq!(loaded.model.to_checkpoint(), run.model.to_checkpoint());
    assert_eq!(find_runs(tmp.path()).unwrap(), vec![dir.clone()]);

    let m = aggregate_scores(&[loaded.log]).unwrap();
    assert_eq!(m.rows, vec!["cellar".to_string()]);
    let cell = m.get("cellar", AgentLabel::Np).unwrap();
    let last = run.log.last_scores(50);
    assert_eq!(cell.mean, last.iter().sum::<i64>() as f64 / last.len() as f64);
}

#[test]
fn invalid_config_is_rejected() {
    let mut cfg = AgentConfig::new(AgentLabel::Np, small_config(1));
    cfg.train.discount = 1.5;
    assert!(run_training(&bundled::cellar(), &cfg, &oracle(), OracleFailurePolicy::Abort).is_err());
}
