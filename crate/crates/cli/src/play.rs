use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use panda_core::text::text_hash;
use panda_core::world::Engine;
use panda_core::{Source, StepRecord, Trajectory};

use crate::util::resolve_world;

#[derive(clap::Args)]
pub struct PlayArgs {
    #[arg(long)]
    world: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the session trajectory here when the game ends.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = panda_server::DEFAULT_ACTION_CAP)]
    cap: u32,
}

/// Candidates are numbered from 1; `q` or end of input quits.
pub fn run(args: PlayArgs) -> Result<()> {
    let world = resolve_world(&args.world)?;
    let engine = Engine::new(&world, args.cap);
    let (mut state, mut obs) = engine.reset(args.seed);
    let mut traj = Trajectory::new();
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let mut out = io::stdout().lock();
    loop {
        writeln!(out, "\n{}", obs.text)?;
        for (i, c) in obs.candidates.iter().enumerate() {
            writeln!(out, "  {:>2}. {c}", i + 1)?;
        }
        write!(out, "[step {} score {}] > ", state.step, state.score)?;
        out.flush()?;
        let Some(line) = lines.next().transpose()? else { break };
        let line = line.trim();
        if line.eq_ignore_ascii_case("q") {
            break;
        }
        let index = match line.parse::<usize>() {
            Ok(n) if (1..=obs.candidates.len()).contains(&n) => n - 1,
            _ => {
                writeln!(out, "enter a number between 1 and {}, or q", obs.candidates.len())?;
                continue;
            }
        };
        let step = engine.step(&state, &obs.candidates[index]);
        traj.push(StepRecord {
            t: step.state.step,
            place: step.state.place.clone(),
            obs_hash: text_hash(&obs.text),
            obs: obs.text.clone(),
            candidates: obs.candidates.clone(),
            chosen: index,
            valences: BTreeMap::new(),
            reward: step.reward,
            score: step.state.score,
            source: Source::Human,
        });
        if step.reward != 0 {
            writeln!(out, "({:+} points)", step.reward)?;
        }
        let done = step.done;
        state = step.state;
        obs = step.observation;
        if done {
            writeln!(out, "\n{}\nGame over.", obs.text)?;
            break;
        }
    }
    writeln!(out, "\nFinal score {} of {} after {} steps.", state.score, world.max_score, state.step)?;
    if let Some(p) = args.out {
        traj.save(&p).with_context(|| format!("writing {}", p.display()))?;
        writeln!(out, "trajectory -> {}", p.display())?;
    }
    Ok(())
}
