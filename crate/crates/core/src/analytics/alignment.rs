use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::personality::{TraitId, Valence};
use crate::trajectory::Trajectory;

pub const WINDOW_EPISODES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// First 50 episodes.
    Init50,
    /// Last 50 episodes.
    Fin50,
}

impl Window {
    pub fn select<T>(self, episodes: &[T]) -> &[T] {
        let n = episodes.len().min(WINDOW_EPISODES);
        match self {
            Window::Init50 => &episodes[..n],
            Window::Fin50 => &episodes[episodes.len() - n..],
        }
    }
}

impl FromStr for Window {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "init50" => Ok(Window::Init50),
            "fin50" => Ok(Window::Fin50),
            _ => Err(AnalyticsError::Input(format!("unknown window `{s}` (expected init50 or fin50)"))),
        }
    }
}

/// Mean number of high- and low-valence actions per episode.
pub fn valence_counts(episodes: &[&Trajectory], trait_id: TraitId) -> Result<(f64, f64), AnalyticsError> {
    if episodes.is_empty() {
        return Err(AnalyticsError::Input("empty episode window".into()));
    }
    let (mut high, mut low) = (0usize, 0usize);
    for traj in episodes {
        for r in &traj.steps {
            match r.valences.get(&trait_id) {
                Some(Valence::High) => high += 1,
                Some(Valence::Low) => low += 1,
                Some(Valence::Neutral) => {}
                None => return Err(AnalyticsError::Unannotated(trait_id)),
            }
        }
    }
    let n = episodes.len() as f64;
    Ok((high as f64 / n, low as f64 / n))
}

/// Relative change of the agent's action counts over the unguided baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    /// `r(high)`; absent when the baseline never took a high-valence action.
    pub up: Option<f64>,
    pub down: Option<f64>,
    /// `r(high) - r(low)` when both are present.
    pub net: Option<f64>,
}

pub fn relative_change(agent: f64, baseline: f64) -> Option<f64> {
    (baseline != 0.0).then(|| (agent - baseline) / baseline)
}

/// Both logs are windowed with `window` before counting.
pub fn alignment_ratio(
    agent: &[&Trajectory],
    baseline: &[&Trajectory],
    trait_id: TraitId,
    window: Window,
) -> Result<Alignment, AnalyticsError> {
    let (ah, al) = valence_counts(window.select(agent), trait_id)?;
    let (bh, bl) = valence_counts(window.select(baseline), trait_id)?;
    let up = relative_change(ah, bh);
    let down = relative_change(al, bl);
    Ok(Alignment {
        up,
        down,
        net: up.zip(down).map(|(u, d)| u - d),
    })
}
