use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use panda_core::bundled;
use panda_core::harness::{find_runs, load_run, runs_root, AgentLabel, TrainingRun};
use panda_core::oracle::{backend_from_spec, ValenceBackend};
use panda_core::world::{load_world, WorldSpec};
use panda_core::Trajectory;

/// A bundled world id, or a path to a world file.
pub fn resolve_world(arg: &str) -> Result<WorldSpec> {
    let p = Path::new(arg);
    if p.is_file() {
        return load_world(p).with_context(|| format!("loading world {arg}"));
    }
    match bundled::world(arg) {
        Some(w) => Ok(w),
        None => {
            let ids: Vec<String> = bundled::worlds().into_iter().map(|w| w.id).collect();
            bail!("no world file or bundled world `{arg}` (bundled: {})", ids.join(", "))
        }
    }
}

pub fn open_oracle(spec: &str) -> Result<Box<dyn ValenceBackend>> {
    backend_from_spec(spec).with_context(|| format!("opening oracle `{spec}`"))
}

pub fn runs_root_or(dir: Option<PathBuf>) -> PathBuf {
    dir.unwrap_or_else(runs_root)
}

pub fn load_trajectories(run: &Path) -> Result<Vec<Trajectory>> {
    Ok(load_run(run).with_context(|| format!("loading run {}", run.display()))?.trajectories)
}

/// Every seed's run of one agent on one world, in seed-directory order.
pub fn agent_runs(root: &Path, world: &str, label: AgentLabel) -> Result<Vec<TrainingRun>> {
    let dir = root.join(world).join(label.to_string());
    if !dir.is_dir() {
        bail!("no runs for {label} on `{world}` under {}", root.display());
    }
    find_runs(&dir)?
        .iter()
        .map(|d| load_run(d).with_context(|| format!("loading run {}", d.display())))
        .collect()
}
