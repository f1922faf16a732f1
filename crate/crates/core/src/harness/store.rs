use std::fs;
use std::path::{Path, PathBuf};

use super::run::{RunLog, TrainingRun};
use super::HarnessError;
use crate::agent::QModel;
use crate::trajectory::Trajectory;

pub const RUNS_DIR_ENV: &str = "PANDA_RUNS_DIR";
pub const RUNLOG_FILE: &str = "runlog.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const EPISODES_DIR: &str = "episodes";

/// `$PANDA_RUNS_DIR`, or `runs` in the working directory.
pub fn runs_root() -> PathBuf {
    std::env::var_os(RUNS_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// `<root>/<world>/<agent>/<seed>`.
pub fn run_dir(root: &Path, world: &str, agent: &str, seed: u64) -> PathBuf {
    root.join(world).join(agent).join(seed.to_string())
}

/// Writes episodes, checkpoint and run log. Episode files are written first
/// and the run log last, so a run log always points at files that exist.
pub fn save_run(dir: &Path, run: &mut TrainingRun) -> Result<(), HarnessError> {
    let episodes = dir.join(EPISODES_DIR);
    fs::create_dir_all(&episodes).map_err(|e| HarnessError::io(&episodes, e))?;
    for (entry, traj) in run.log.episodes.iter_mut().zip(&run.trajectories) {
        let rel = format!("{EPISODES_DIR}/{:05}.jsonl", entry.index);
        traj.save(&dir.join(&rel))?;
        entry.file = Some(rel);
    }
    run.model.save(&dir.join(CHECKPOINT_FILE))?;
    let path = dir.join(RUNLOG_FILE);
    let json = serde_json::to_string_pretty(&run.log)?;
    fs::write(&path, json).map_err(|e| HarnessError::io(&path, e))
}

pub fn load_runlog(dir: &Path) -> Result<RunLog, HarnessError> {
    let path = dir.join(RUNLOG_FILE);
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Loads the run log, every episode trajectory and the checkpoint.
pub fn load_run(dir: &Path) -> Result<TrainingRun, HarnessError> {
    let log = load_runlog(dir)?;
    let mut trajectories = Vec::with_capacity(log.episodes.len());
    for e in &log.episodes {
        let rel = e
            .file
            .clone()
            .unwrap_or_else(|| format!("{EPISODES_DIR}/{:05}.jsonl", e.index));
        let traj = Trajectory::load(&dir.join(rel))?;
        if traj.final_score() != e.score {
            return Err(HarnessError::Matrix(format!(
                "episode {} score {} disagrees with its trajectory ({})",
                e.index,
                e.score,
                traj.final_score()
            )));
        }
        trajectories.push(traj);
    }
    let model = QModel::load(&dir.join(CHECKPOINT_FILE))?;
    Ok(TrainingRun {
        log,
        trajectories,
        model,
    })
}

/// Every run directory (one holding a run log) below `root`, sorted.
pub fn find_runs(root: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        if dir.join(RUNLOG_FILE).is_file() {
            out.push(dir);
            continue;
        }
        let entries = fs::read_dir(&dir).map_err(|e| HarnessError::io(&dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| HarnessError::io(&dir, e))?;
            if entry.file_type().map_err(|e| HarnessError::io(&dir, e))?.is_dir() {
                stack.push(entry.path());
            }
        }
    }
    out.sort();
    Ok(out)
}
