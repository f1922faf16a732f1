use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::trajectory::Trajectory;
use crate::world::Depth;

/// Movement statistics over a set of episodes. Places closer to the start than
/// the threshold are "common" (`com`), the rest "uncommon" (`unc`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub episodes: usize,
    pub traj_len: f64,
    pub visit_com: f64,
    pub visit_unc: f64,
    pub visit_total: f64,
    /// Mean first-arrival step over reached places; absent when no episode
    /// reached a place of that class.
    pub avg_step_com: Option<f64>,
    pub avg_step_unc: Option<f64>,
    /// `avg_step_com + avg_step_unc`, or whichever of the two is present.
    pub avg_step_total: Option<f64>,
}

fn mean_opt(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// The place at depth 0.
pub fn start_place(depths: &BTreeMap<String, Depth>) -> Result<&str, AnalyticsError> {
    let mut it = depths.iter().filter(|(_, d)| **d == Depth::Reachable(0));
    match (it.next(), it.next()) {
        (Some((p, _)), None) => Ok(p),
        _ => Err(AnalyticsError::Input("depth map must have exactly one place at depth 0".into())),
    }
}

/// First-arrival step of every place an episode reaches; the start place is
/// reached at step 0 and a record's place is where the agent ended up.
pub fn first_arrivals<'a>(start: &'a str, traj: &'a Trajectory) -> BTreeMap<&'a str, u32> {
    let mut out = BTreeMap::new();
    out.insert(start, 0);
    for r in &traj.steps {
        out.entry(r.place.as_str()).or_insert(r.t);
    }
    out
}

pub fn trajectory_metrics(
    episodes: &[&Trajectory],
    depths: &BTreeMap<String, Depth>,
    threshold: u32,
) -> Result<TrajectoryMetrics, AnalyticsError> {
    if episodes.is_empty() {
        return Err(AnalyticsError::Input("no episodes".into()));
    }
    let start = start_place(depths)?;
    let (mut len, mut com, mut unc) = (0.0, 0.0, 0.0);
    let (mut step_com, mut step_unc) = (Vec::new(), Vec::new());
    for traj in episodes {
        len += traj.len() as f64;
        let (mut c, mut u) = (Vec::new(), Vec::new());
        for (place, step) in first_arrivals(start, traj) {
            let depth = depths
                .get(place)
                .ok_or_else(|| AnalyticsError::Input(format!("place `{place}` missing from depth map")))?;
            if depth.is_below(threshold) {
                c.push(step as f64);
            } else {
                u.push(step as f64);
            }
        }
        com += c.len() as f64;
        unc += u.len() as f64;
        step_com.extend(mean_opt(&c));
        step_unc.extend(mean_opt(&u));
    }
    let n = episodes.len() as f64;
    let (avg_step_com, avg_step_unc) = (mean_opt(&step_com), mean_opt(&step_unc));
    let avg_step_total = match (avg_step_com, avg_step_unc) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or(0.0) + b.unwrap_or(0.0)),
    };
    Ok(TrajectoryMetrics {
        episodes: episodes.len(),
        traj_len: len / n,
        visit_com: com / n,
        visit_unc: unc / n,
        visit_total: (com + unc) / n,
        avg_step_com,
        avg_step_unc,
        avg_step_total,
    })
}

/// Mean number of distinct places per episode, start place included.
pub fn distinct_places(episodes: &[&Trajectory], start: &str) -> f64 {
    if episodes.is_empty() {
        return 0.0;
    }
    let total: usize = episodes
        .iter()
        .map(|t| {
            let mut s: BTreeSet<&str> = t.steps.iter().map(|r| r.place.as_str()).collect();
            s.insert(start);
            s.len()
        })
        .sum();
    total as f64 / episodes.len() as f64
}
