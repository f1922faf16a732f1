use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::harness::{AgentLabel, Direction, ScoreMatrix};
use crate::personality::TraitId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitCriteria {
    /// Games where the high agent beats the unguided one and the low agent trails it.
    pub cnt: usize,
    /// Games where the low agent beats the unguided one and the high agent trails it.
    pub cnt_down: usize,
    pub avg_up: f64,
    pub avg_np: f64,
    pub avg_down: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaResult {
    pub games: usize,
    pub traits: BTreeMap<TraitId, TraitCriteria>,
}

fn column(m: &ScoreMatrix, label: AgentLabel) -> Result<Vec<f64>, AnalyticsError> {
    m.column(label)
        .ok_or_else(|| AnalyticsError::MissingColumn(label.to_string()))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Counting, average and difference criteria for every trait.
pub fn compute_criteria(matrix: &ScoreMatrix) -> Result<CriteriaResult, AnalyticsError> {
    let np = column(matrix, AgentLabel::Np)?;
    if np.is_empty() {
        return Err(AnalyticsError::Input("score matrix has no games".into()));
    }
    let mut traits = BTreeMap::new();
    for t in TraitId::ALL {
        let up = column(matrix, AgentLabel::Guided(t, Direction::Up))?;
        let down = column(matrix, AgentLabel::Guided(t, Direction::Down))?;
        let count = |hi: &[f64], lo: &[f64]| {
            (0..np.len()).filter(|&g| hi[g] > np[g] && lo[g] < np[g]).count()
        };
        let (avg_up, avg_down) = (mean(&up), mean(&down));
        traits.insert(
            t,
            TraitCriteria {
                cnt: count(&up, &down),
                cnt_down: count(&down, &up),
                avg_up,
                avg_np: mean(&np),
                avg_down,
                diff: avg_up - avg_down,
            },
        );
    }
    Ok(CriteriaResult {
        games: np.len(),
        traits,
    })
}
