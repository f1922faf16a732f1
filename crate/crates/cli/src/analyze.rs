use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Subcommand;
use panda_core::analytics::report::{correlation_table, criteria_table, fmt_opt, TextTable};
use panda_core::analytics::{
    annotate_walkthrough, compute_criteria, concordance_between, concordance_rate, distinct_places, friedman_test,
    greedy_choice, relative_change, reward_action_stats, trait_correlation, trajectory_metrics, valence_counts,
    wilcoxon_signed_rank, StatResult, Window,
};
use panda_core::harness::{aggregate_scores, find_runs, load_runlog, AgentLabel, Direction, ScoreMatrix};
use panda_core::oracle::{annotate_trajectory, CachedOracle};
use panda_core::trajectory::load_dir;
use panda_core::world::{place_depths, replay_walkthrough};
use panda_core::{StepRecord, TraitId, Trajectory};
use serde_json::{json, Value};

use crate::util::{agent_runs, open_oracle, resolve_world, runs_root_or};

/// Episodes per seed that the run-based analyses look at.
const LAST: usize = 50;

#[derive(clap::Args)]
pub struct MatrixSource {
    /// Score matrix CSV (game column followed by the 17 agent columns).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Build the matrix from run directories under this root instead.
    #[arg(long, conflicts_with = "matrix")]
    runs: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum AnalyzeCommand {
    /// Counting, average and difference criteria per trait.
    Criteria {
        #[command(flatten)]
        src: MatrixSource,
        #[arg(long)]
        json: bool,
    },
    /// Wilcoxon signed-rank and Friedman tests per trait.
    Stats {
        #[command(flatten)]
        src: MatrixSource,
        #[arg(long = "trait")]
        traits: Vec<TraitId>,
        #[arg(long)]
        json: bool,
    },
    /// Movement metrics over the last 50 episodes of each seed.
    Trajectory {
        #[arg(long)]
        world: String,
        #[arg(long)]
        runs: Option<PathBuf>,
        /// Agents to report (default: every agent with runs).
        #[arg(long)]
        agent: Vec<AgentLabel>,
        /// Places closer to the start than this depth are common.
        #[arg(long)]
        threshold: u32,
        #[arg(long)]
        json: bool,
    },
    /// Relative change of trait-high and trait-low actions over NP.
    Alignment {
        #[arg(long)]
        world: String,
        #[arg(long)]
        runs: Option<PathBuf>,
        /// Guided agents to report (default: every guided agent with runs).
        #[arg(long)]
        agent: Vec<AgentLabel>,
        #[arg(long, default_value = "fin50")]
        window: Window,
        #[arg(long, default_value = "builtin")]
        oracle: String,
        #[arg(long)]
        json: bool,
    },
    /// Agreement between reference choices and an agent or another log.
    Concordance {
        /// Reference trajectory file or directory of JSON Lines files.
        #[arg(long)]
        reference: PathBuf,
        /// Run directory whose model makes greedy choices.
        #[arg(long, required_unless_present = "other")]
        run: Option<PathBuf>,
        /// Trajectory recorded over the same states.
        #[arg(long, conflicts_with = "run")]
        other: Option<PathBuf>,
        #[arg(long, default_value = "builtin")]
        oracle: String,
        #[arg(long)]
        json: bool,
    },
    /// Trait-by-trait agreement of action annotations.
    Correlation {
        /// Annotate this world's walkthrough (used when no trajectories are given).
        #[arg(long, required_unless_present = "trajectory")]
        world: Option<String>,
        /// Trajectory files whose chosen actions are annotated.
        #[arg(long)]
        trajectory: Vec<PathBuf>,
        #[arg(long, default_value = "builtin")]
        oracle: String,
        #[arg(long)]
        json: bool,
    },
    /// Share of walkthrough actions judged high and low per trait.
    Walkthrough {
        #[arg(long)]
        world: String,
        #[arg(long, default_value = "builtin")]
        oracle: String,
        #[arg(long)]
        json: bool,
    },
}

pub fn run(cmd: AnalyzeCommand) -> Result<()> {
    match cmd {
        AnalyzeCommand::Criteria { src, json } => criteria(&load_matrix(src)?, json),
        AnalyzeCommand::Stats { src, traits, json } => stats(&load_matrix(src)?, traits, json),
        AnalyzeCommand::Trajectory { world, runs, agent, threshold, json } => {
            trajectory(&world, &runs_root_or(runs), agent, threshold, json)
        }
        AnalyzeCommand::Alignment { world, runs, agent, window, oracle, json } => {
            alignment(&world, &runs_root_or(runs), agent, window, &oracle, json)
        }
        AnalyzeCommand::Concordance { reference, run, other, oracle, json } => {
            concordance(&reference, run.as_deref(), other.as_deref(), &oracle, json)
        }
        AnalyzeCommand::Correlation { world, trajectory, oracle, json } => {
            correlation(world.as_deref(), &trajectory, &oracle, json)
        }
        AnalyzeCommand::Walkthrough { world, oracle, json } => walkthrough(&world, &oracle, json),
    }
}

fn emit(json: bool, value: Value, table: impl FnOnce() -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(&value).expect("json values serialize"));
    } else {
        print!("{}", table());
    }
}

fn load_matrix(src: MatrixSource) -> Result<ScoreMatrix> {
    if let Some(p) = src.matrix {
        let f = std::fs::File::open(&p).with_context(|| format!("opening {}", p.display()))?;
        return ScoreMatrix::from_csv(f).with_context(|| format!("reading {}", p.display()));
    }
    let root = runs_root_or(src.runs);
    let logs = find_runs(&root)?
        .iter()
        .map(|d| load_runlog(d))
        .collect::<Result<Vec<_>, _>>()?;
    if logs.is_empty() {
        bail!("no runs under {}; pass --matrix or train first", root.display());
    }
    Ok(aggregate_scores(&logs)?)
}

fn criteria(m: &ScoreMatrix, json: bool) -> Result<()> {
    let c = compute_criteria(m)?;
    emit(json, serde_json::to_value(&c)?, || criteria_table(&c).to_string());
    Ok(())
}

fn stat_json(r: &Result<StatResult, panda_core::analytics::AnalyticsError>) -> Value {
    match r {
        Ok(s) => serde_json::to_value(s).expect("stat results serialize"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn stat_cells(r: &Result<StatResult, panda_core::analytics::AnalyticsError>) -> [String; 2] {
    match r {
        Ok(s) => [format!("{:.1}", s.statistic), format!("{:.3}", s.p_value)],
        Err(_) => ["-".into(), "-".into()],
    }
}

fn stats(m: &ScoreMatrix, traits: Vec<TraitId>, json: bool) -> Result<()> {
    let traits = if traits.is_empty() { TraitId::ALL.to_vec() } else { traits };
    let col = |l: AgentLabel| m.column(l).with_context(|| format!("matrix has no `{l}` column"));
    let np = col(AgentLabel::Np)?;
    let mut table = TextTable::new([
        "trait", "T(up,NP)", "p", "T(down,NP)", "p", "T(up,down)", "p", "Fr", "p",
    ]);
    let mut out = serde_json::Map::new();
    for t in traits {
        let up = col(AgentLabel::Guided(t, Direction::Up))?;
        let down = col(AgentLabel::Guided(t, Direction::Down))?;
        let tests = [
            wilcoxon_signed_rank(&up, &np),
            wilcoxon_signed_rank(&down, &np),
            wilcoxon_signed_rank(&up, &down),
            friedman_test(&[up.clone(), np.clone(), down.clone()]),
        ];
        let mut row = vec![t.abbr().to_string()];
        for r in &tests {
            row.extend(stat_cells(r));
        }
        table.row(row);
        out.insert(
            t.abbr().into(),
            json!({
                "up_vs_np": stat_json(&tests[0]),
                "down_vs_np": stat_json(&tests[1]),
                "up_vs_down": stat_json(&tests[2]),
                "friedman": stat_json(&tests[3]),
            }),
        );
    }
    emit(json, Value::Object(out), || table.to_string());
    Ok(())
}

/// Labels with a run directory for `world`, in the canonical order.
fn present_labels(root: &Path, world: &str) -> Vec<AgentLabel> {
    AgentLabel::all()
        .into_iter()
        .filter(|l| root.join(world).join(l.to_string()).is_dir())
        .collect()
}

fn trajectory(world: &str, root: &Path, agents: Vec<AgentLabel>, threshold: u32, json: bool) -> Result<()> {
    let w = resolve_world(world)?;
    let depths = place_depths(&w);
    let agents = if agents.is_empty() { present_labels(root, &w.id) } else { agents };
    if agents.is_empty() {
        bail!("no runs for `{}` under {}", w.id, root.display());
    }
    let mut table = TextTable::new([
        "agent", "len", "com", "unc", "total", "step com", "step unc", "step total", "places", "rewarded", "Q",
    ]);
    let mut out = serde_json::Map::new();
    for label in agents {
        let runs = agent_runs(root, &w.id, label)?;
        let eps: Vec<&Trajectory> = runs.iter().flat_map(|r| r.last_trajectories(LAST)).collect();
        if eps.is_empty() {
            bail!("{label} has no complete episodes");
        }
        let m = trajectory_metrics(&eps, &depths, threshold)?;
        let places = distinct_places(&eps, &w.start_place);
        let mut q = Vec::new();
        let mut count = 0.0;
        for r in &runs {
            let s = reward_action_stats(&r.model, &r.last_trajectories(LAST))?;
            q.extend(s.q_mean);
            count += s.count / runs.len() as f64;
        }
        let q_mean = (!q.is_empty()).then(|| q.iter().sum::<f64>() / q.len() as f64);
        table.row([
            label.to_string(),
            format!("{:.2}", m.traj_len),
            format!("{:.2}", m.visit_com),
            format!("{:.2}", m.visit_unc),
            format!("{:.2}", m.visit_total),
            fmt_opt(m.avg_step_com, 2),
            fmt_opt(m.avg_step_unc, 2),
            fmt_opt(m.avg_step_total, 2),
            format!("{places:.2}"),
            format!("{count:.2}"),
            fmt_opt(q_mean, 2),
        ]);
        let mut v = serde_json::to_value(&m)?;
        v["distinct_places"] = json!(places);
        v["rewarded_per_episode"] = json!(count);
        v["rewarded_q_mean"] = json!(q_mean);
        out.insert(label.to_string(), v);
    }
    emit(json, Value::Object(out), || table.to_string());
    Ok(())
}

/// Window-selected episodes of every seed, annotated for `trait_id`.
fn windowed_annotated(
    root: &Path,
    world: &str,
    label: AgentLabel,
    window: Window,
    trait_id: TraitId,
    oracle: &dyn panda_core::oracle::ValenceBackend,
) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    for run in agent_runs(root, world, label)? {
        let done: Vec<&Trajectory> = run
            .log
            .episodes
            .iter()
            .zip(&run.trajectories)
            .filter(|(e, _)| !e.truncated)
            .map(|(_, t)| t)
            .collect();
        for t in window.select(&done) {
            out.push(annotate_trajectory(oracle, t, &[trait_id])?);
        }
    }
    Ok(out)
}

fn alignment(world: &str, root: &Path, agents: Vec<AgentLabel>, window: Window, oracle: &str, json: bool) -> Result<()> {
    let w = resolve_world(world)?;
    let backend = CachedOracle::new(open_oracle(oracle)?);
    let agents: Vec<AgentLabel> = if agents.is_empty() { present_labels(root, &w.id) } else { agents }
        .into_iter()
        .filter(|l| *l != AgentLabel::Np)
        .collect();
    if agents.is_empty() {
        bail!("no guided agents to compare");
    }
    let mut table = TextTable::new(["agent", "r(high)", "r(low)", "net"]);
    let mut out = serde_json::Map::new();
    let mut baselines: BTreeMap<TraitId, (f64, f64)> = BTreeMap::new();
    for label in agents {
        let t = label.trait_id().expect("guided label");
        let (bh, bl) = match baselines.get(&t) {
            Some(b) => *b,
            None => {
                let np = windowed_annotated(root, &w.id, AgentLabel::Np, window, t, &backend)?;
                let b = valence_counts(&np.iter().collect::<Vec<_>>(), t)?;
                baselines.insert(t, b);
                b
            }
        };
        let eps = windowed_annotated(root, &w.id, label, window, t, &backend)?;
        let (ah, al) = valence_counts(&eps.iter().collect::<Vec<_>>(), t)?;
        let (up, down) = (relative_change(ah, bh), relative_change(al, bl));
        let net = up.zip(down).map(|(u, d)| u - d);
        table.row([label.to_string(), fmt_opt(up, 2), fmt_opt(down, 2), fmt_opt(net, 2)]);
        out.insert(label.to_string(), json!({ "up": up, "down": down, "net": net }));
    }
    emit(json, Value::Object(out), || table.to_string());
    Ok(())
}

fn read_reference(path: &Path) -> Result<Vec<Trajectory>> {
    if path.is_dir() {
        Ok(load_dir(path).with_context(|| format!("reading {}", path.display()))?)
    } else {
        Ok(vec![Trajectory::load(path).with_context(|| format!("reading {}", path.display()))?])
    }
}

fn concordance(reference: &Path, run: Option<&Path>, other: Option<&Path>, oracle: &str, json: bool) -> Result<()> {
    let refs = read_reference(reference)?;
    let steps: Vec<&StepRecord> = refs.iter().flat_map(|t| t.steps.iter()).collect();
    let (rate, against) = if let Some(other) = other {
        let o = read_reference(other)?;
        let os: Vec<&StepRecord> = o.iter().flat_map(|t| t.steps.iter()).collect();
        (concordance_between(&steps, &os)?, other.display().to_string())
    } else {
        let dir = run.expect("clap requires --run or --other");
        let r = panda_core::harness::load_run(dir).with_context(|| format!("loading run {}", dir.display()))?;
        let shaping = r.log.agent.shaping();
        let backend = match shaping.trait_id {
            Some(_) => Some(CachedOracle::new(open_oracle(oracle)?)),
            None => None,
        };
        let b = backend.as_ref().map(|b| b as &dyn panda_core::oracle::ValenceBackend);
        let rate = concordance_rate(&steps, |s| greedy_choice(&r.model, &shaping, b, s))?;
        (rate, format!("{} ({})", r.log.agent, dir.display()))
    };
    emit(json, json!({ "steps": steps.len(), "concordance": rate, "against": against }), || {
        format!("concordance {rate:.1}% over {} steps against {against}\n", steps.len())
    });
    Ok(())
}

fn correlation(world: Option<&str>, trajectories: &[PathBuf], oracle: &str, json: bool) -> Result<()> {
    let backend = CachedOracle::new(open_oracle(oracle)?);
    let source: Vec<Trajectory> = if trajectories.is_empty() {
        let w = resolve_world(world.expect("clap requires --world or --trajectory"))?;
        vec![replay_walkthrough(&w)?.1]
    } else {
        trajectories
            .iter()
            .map(|p| read_reference(p))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect()
    };
    let mut actions = Vec::new();
    for t in &source {
        let a = annotate_trajectory(&backend, t, &TraitId::ALL)?;
        actions.extend(a.steps.into_iter().map(|s| s.valences));
    }
    let m = trait_correlation(&actions)?;
    let labelled: BTreeMap<&str, BTreeMap<&str, Option<f64>>> = TraitId::ALL
        .iter()
        .map(|a| (a.abbr(), TraitId::ALL.iter().map(|b| (b.abbr(), m[a.index()][b.index()])).collect()))
        .collect();
    emit(json, json!({ "actions": actions.len(), "matrix": labelled }), || {
        format!("{} actions\n{}", actions.len(), correlation_table(&m))
    });
    Ok(())
}

fn walkthrough(world: &str, oracle: &str, json: bool) -> Result<()> {
    let w = resolve_world(world)?;
    let backend = open_oracle(oracle)?;
    let shares = annotate_walkthrough(&w, backend.as_ref())?;
    let mut table = TextTable::new(["trait", "high %", "low %"]);
    for (t, s) in &shares {
        table.row([t.abbr().to_string(), format!("{:.1}", s.high), format!("{:.1}", s.low)]);
    }
    let out: BTreeMap<&str, _> = shares.iter().map(|(t, s)| (t.abbr(), s)).collect();
    emit(json, json!({ "world": w.id, "actions": w.walkthrough.len(), "shares": out }), || table.to_string());
    Ok(())
}
