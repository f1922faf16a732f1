//! Personality shaping of action values and softmax action selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::personality::Valence;

/// `q + weight * valence`. A positive weight favours high-valence actions, a
/// negative one low-valence actions.
pub fn shape_q(q: f64, valence: Valence, weight: f64) -> f64 {
    q + weight * valence.as_f64()
}

pub fn shaped_values(values: &[f64], valences: &[Valence], weight: f64) -> Vec<f64> {
    debug_assert_eq!(values.len(), valences.len());
    values
        .iter()
        .zip(valences)
        .map(|(&q, &v)| shape_q(q, v, weight))
        .collect()
}

fn check(values: &[f64]) -> Result<(), AgentError> {
    if values.is_empty() {
        return Err(AgentError::NoCandidates);
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(AgentError::NonFiniteValue(*bad));
    }
    Ok(())
}

/// Max-shifted softmax with unit temperature.
pub fn softmax(values: &[f64]) -> Result<Vec<f64>, AgentError> {
    check(values)?;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> Result<usize, AgentError> {
    check(values)?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    #[default]
    Sample,
    Greedy,
}

/// Draws an index from `softmax(values)` (one uniform draw from `rng`), or
/// takes the argmax in greedy mode.
pub fn select_action<R: Rng + ?Sized>(values: &[f64], mode: SelectionMode, rng: &mut R) -> Result<usize, AgentError> {
    match mode {
        SelectionMode::Greedy => argmax(values),
        SelectionMode::Sample => {
            let probs = softmax(values)?;
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return Ok(i);
                }
            }
            Ok(probs.len() - 1)
        }
    }
}
