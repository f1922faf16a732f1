mod analyze;
mod play;
mod util;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use panda_core::agent::TrainConfig;
use panda_core::harness::{
    aggregate_scores, load_runlog, run_dir, run_training, save_run, AgentConfig, AgentLabel, OracleFailurePolicy,
};
use panda_core::oracle::{annotate_trajectory, LexiconRules};
use panda_core::world::{load_world, replay_walkthrough};
use panda_core::{TraitId, Trajectory};
use rayon::prelude::*;

use crate::util::{load_trajectories, open_oracle, resolve_world, runs_root_or};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (build ", env!("PANDA_BUILD_REV"), ")");

#[derive(Parser)]
#[command(name = "panda", version = VERSION, about = "Personality-guided text-game agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check world and lexicon files (`*.lexicon.json`).
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Train one agent, or every agent with --all.
    Train(TrainArgs),
    /// Run the session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Session storage directory.
        #[arg(long, default_value = "sessions-data")]
        data: PathBuf,
        /// Extra world files to serve next to the bundled ones.
        #[arg(long)]
        world: Vec<PathBuf>,
        #[arg(long, default_value_t = panda_server::DEFAULT_ACTION_CAP)]
        cap: u32,
    },
    /// Analyses over score matrices, runs and worlds.
    Analyze {
        #[command(subcommand)]
        command: analyze::AnalyzeCommand,
    },
    /// Print the steps of a trajectory file or one episode of a run.
    Replay {
        path: PathBuf,
        /// Episode index inside a run directory (default: last).
        #[arg(long)]
        episode: Option<usize>,
    },
    /// Play a world in the terminal by entering candidate numbers.
    Play(play::PlayArgs),
    /// Attach trait valences to every step of a trajectory file.
    Annotate {
        path: PathBuf,
        #[arg(long, default_value = "builtin")]
        oracle: String,
        /// Traits to annotate (default: all).
        #[arg(long = "trait")]
        traits: Vec<TraitId>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct TrainArgs {
    /// Bundled world id or world file.
    #[arg(long)]
    world: String,
    /// Agent label such as NP, Ope_up or Mac_down.
    #[arg(long, required_unless_present = "all")]
    agent: Option<AgentLabel>,
    /// Train all 17 agents.
    #[arg(long, conflicts_with = "agent")]
    all: bool,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seed: Vec<u64>,
    #[arg(long, default_value = "builtin")]
    oracle: String,
    /// Runs root (default: $PANDA_RUNS_DIR or ./runs).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Total environment steps per run.
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    no_early_stop: bool,
    /// Count a failed classification as neutral instead of aborting.
    #[arg(long)]
    oracle_fallback: bool,
    /// Parallel runs for --all (default: logical CPUs).
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { paths } => validate(&paths),
        Command::Train(args) => train(args),
        Command::Serve { addr, data, world, cap } => serve(addr, data, &world, cap),
        Command::Analyze { command } => analyze::run(command),
        Command::Replay { path, episode } => replay(&path, episode),
        Command::Play(args) => play::run(args),
        Command::Annotate { path, oracle, traits, out } => annotate(&path, &oracle, traits, out),
    }
}

fn validate(paths: &[PathBuf]) -> Result<()> {
    for p in paths {
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if name.ends_with(".lexicon.json") {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let lex = LexiconRules::from_json(&text).with_context(|| format!("invalid lexicon {}", p.display()))?;
            let rules: usize = lex.traits.values().map(Vec::len).sum();
            println!("{}: ok ({} traits, {rules} rules)", p.display(), lex.traits.len());
        } else {
            let w = load_world(p).with_context(|| format!("invalid world {}", p.display()))?;
            let (score, _) = replay_walkthrough(&w).with_context(|| format!("walkthrough of {}", p.display()))?;
            if score != w.max_score {
                bail!("{}: walkthrough scores {score}, max_score is {}", p.display(), w.max_score);
            }
            println!(
                "{}: ok (world `{}`, {} places, walkthrough {} steps scoring {score})",
                p.display(),
                w.id,
                w.places.len(),
                w.walkthrough.len()
            );
        }
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let world = resolve_world(&args.world)?;
    let oracle = open_oracle(&args.oracle)?;
    let root = runs_root_or(args.out);
    let labels = match args.agent {
        Some(l) => vec![l],
        None => AgentLabel::all(),
    };
    let policy = if args.oracle_fallback { OracleFailurePolicy::Neutral } else { OracleFailurePolicy::Abort };
    let jobs: Vec<(AgentLabel, u64)> = labels.iter().flat_map(|l| args.seed.iter().map(move |s| (*l, *s))).collect();
    let train_one = |&(label, seed): &(AgentLabel, u64)| -> Result<PathBuf> {
        let mut cfg = TrainConfig { seed, ..TrainConfig::default() };
        if let Some(s) = args.steps {
            cfg.max_steps = s;
        }
        if args.no_early_stop {
            cfg.early_stop = None;
        }
        let agent = AgentConfig::new(label, cfg);
        let mut run = run_training(&world, &agent, oracle.as_ref(), policy)
            .with_context(|| format!("training {label} seed {seed}"))?;
        let dir = run_dir(&root, &world.id, &label.to_string(), seed);
        save_run(&dir, &mut run).with_context(|| format!("saving {}", dir.display()))?;
        let last = run.log.last_scores(50);
        let mean = if last.is_empty() { 0.0 } else { last.iter().sum::<i64>() as f64 / last.len() as f64 };
        println!(
            "{label} seed {seed}: {} episodes, {} steps, last-50 mean {mean:.2} -> {}",
            run.log.episodes.len(),
            run.log.total_steps,
            dir.display()
        );
        Ok(dir)
    };
    let dirs: Vec<PathBuf> = if jobs.len() == 1 {
        vec![train_one(&jobs[0])?]
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs.unwrap_or(0))
            .build()
            .context("building worker pool")?;
        pool.install(|| jobs.par_iter().map(train_one).collect::<Result<Vec<_>>>())?
    };
    if args.all {
        let logs = dirs.iter().map(|d| load_runlog(d)).collect::<Result<Vec<_>, _>>()?;
        let m = aggregate_scores(&logs)?;
        let path = root.join(&world.id).join("scores.csv");
        std::fs::write(&path, m.to_csv()).with_context(|| format!("writing {}", path.display()))?;
        println!("score matrix -> {}", path.display());
    }
    Ok(())
}

fn serve(addr: SocketAddr, data: PathBuf, extra: &[PathBuf], cap: u32) -> Result<()> {
    let mut worlds = panda_core::bundled::worlds();
    for p in extra {
        let w = load_world(p).with_context(|| format!("loading {}", p.display()))?;
        worlds.retain(|x| x.id != w.id);
        worlds.push(w);
    }
    let mut cfg = panda_server::ServiceConfig::new(worlds, data);
    cfg.action_cap = cap;
    let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        eprintln!("serving on http://{}/v1", listener.local_addr()?);
        panda_server::serve(listener, cfg).await?;
        Ok(())
    })
}

fn replay(path: &std::path::Path, episode: Option<usize>) -> Result<()> {
    let traj = if path.is_dir() {
        let all = load_trajectories(path)?;
        let i = episode.unwrap_or(all.len().saturating_sub(1));
        all.into_iter()
            .nth(i)
            .with_context(|| format!("run has no episode {i}"))?
    } else {
        Trajectory::load(path).with_context(|| format!("reading {}", path.display()))?
    };
    for r in &traj.steps {
        let action = r.action().unwrap_or("?");
        let rew = if r.reward != 0 { format!(" ({:+})", r.reward) } else { String::new() };
        println!("{:>4}  {:<28} -> {:<14} score {}{rew}", r.t, action, r.place, r.score);
    }
    println!("{} steps, final score {}", traj.len(), traj.final_score());
    Ok(())
}

fn annotate(path: &std::path::Path, oracle: &str, traits: Vec<TraitId>, out: Option<PathBuf>) -> Result<()> {
    let traj = Trajectory::load(path).with_context(|| format!("reading {}", path.display()))?;
    let backend = open_oracle(oracle)?;
    let traits = if traits.is_empty() { TraitId::ALL.to_vec() } else { traits };
    let annotated = annotate_trajectory(backend.as_ref(), &traj, &traits)?;
    match out {
        Some(p) => annotated.save(&p).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{}", annotated.to_jsonl()),
    }
    Ok(())
}
