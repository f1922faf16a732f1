//! Analyses that query a trained value model.

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::agent::{argmax, shaped_values, QModel, ShapingConfig};
use crate::oracle::{OracleQuery, ValenceBackend};
use crate::personality::Valence;
use crate::trajectory::{StepRecord, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardActionStats {
    /// Mean value the model assigns to rewarded (observation, action) pairs.
    pub q_mean: Option<f64>,
    /// Mean number of rewarded steps per episode.
    pub count: f64,
}

pub fn reward_action_stats(model: &QModel, episodes: &[&Trajectory]) -> Result<RewardActionStats, AnalyticsError> {
    if episodes.is_empty() {
        return Err(AnalyticsError::Input("no episodes".into()));
    }
    let rewarded: Vec<&StepRecord> = episodes
        .iter()
        .flat_map(|t| t.steps.iter())
        .filter(|r| r.reward > 0)
        .collect();
    let q: Vec<f64> = rewarded
        .iter()
        .map(|r| model.q_value(&r.obs, &r.candidates[r.chosen]))
        .collect();
    Ok(RewardActionStats {
        q_mean: (!q.is_empty()).then(|| q.iter().sum::<f64>() / q.len() as f64),
        count: rewarded.len() as f64 / episodes.len() as f64,
    })
}

/// Percentage of softmax mass on `label`.
pub fn selection_percent(values: &[f64], label: usize) -> Result<f64, AnalyticsError> {
    if label >= values.len() {
        return Err(AnalyticsError::Input(format!(
            "label {label} out of range for {} candidates",
            values.len()
        )));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(AnalyticsError::Input("non-finite action value".into()));
    }
    let num = (values[label] - max).exp();
    let den: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(100.0 * num / den)
}

/// A situation, its candidates, which candidate is of interest, and the
/// candidates' valences for the shaping trait (needed only when shaping).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub obs: String,
    pub candidates: Vec<String>,
    pub label: usize,
    #[serde(default)]
    pub valences: Option<Vec<Valence>>,
}

fn probe_values(model: &QModel, shaping: &ShapingConfig, probe: &Probe) -> Result<Vec<f64>, AnalyticsError> {
    let q = model.q_values(&probe.obs, &probe.candidates);
    if shaping.trait_id.is_none() {
        return Ok(q);
    }
    match &probe.valences {
        Some(v) if v.len() == q.len() => Ok(shaped_values(&q, v, shaping.effective_weight())),
        Some(_) => Err(AnalyticsError::Input("probe valences do not match its candidates".into())),
        None => Err(AnalyticsError::Input("shaped probe lacks candidate valences".into())),
    }
}

/// Mean selection percentage of each probe's labelled candidate under the
/// (shaped) softmax policy.
pub fn selection_probability(model: &QModel, shaping: &ShapingConfig, probes: &[Probe]) -> Result<f64, AnalyticsError> {
    if probes.is_empty() {
        return Err(AnalyticsError::Input("no probes".into()));
    }
    let mut total = 0.0;
    for p in probes {
        total += selection_percent(&probe_values(model, shaping, p)?, p.label)?;
    }
    Ok(total / probes.len() as f64)
}

/// Percentage of reference steps on which `choose` picks the recorded action.
pub fn concordance_rate<F>(reference: &[&StepRecord], mut choose: F) -> Result<f64, AnalyticsError>
where
    F: FnMut(&StepRecord) -> Result<usize, AnalyticsError>,
{
    if reference.is_empty() {
        return Err(AnalyticsError::Undefined("empty reference".into()));
    }
    let mut agree = 0usize;
    for r in reference {
        let pick = choose(r)?;
        if pick >= r.candidates.len() {
            return Err(AnalyticsError::Input(format!(
                "choice {pick} out of range for {} candidates at step {}",
                r.candidates.len(),
                r.t
            )));
        }
        agree += usize::from(pick == r.chosen);
    }
    Ok(100.0 * agree as f64 / reference.len() as f64)
}

/// Greedy choice under the model's values, shaped with `shaping` when a trait
/// is configured. Valences come from the record when annotated, else `oracle`.
pub fn greedy_choice(
    model: &QModel,
    shaping: &ShapingConfig,
    oracle: Option<&dyn ValenceBackend>,
    record: &StepRecord,
) -> Result<usize, AnalyticsError> {
    let q = model.q_values(&record.obs, &record.candidates);
    let values = match shaping.trait_id {
        None => q,
        Some(t) => {
            let oracle = oracle.ok_or_else(|| AnalyticsError::Input("shaped agent needs a valence oracle".into()))?;
            let v = record
                .candidates
                .iter()
                .map(|c| oracle.classify(&OracleQuery::new(t, record.obs.as_str(), c.as_str())))
                .collect::<Result<Vec<_>, _>>()?;
            shaped_values(&q, &v, shaping.effective_weight())
        }
    };
    Ok(argmax(&values)?)
}

/// Concordance between two logs of the same states, e.g. a human session and
/// an agent replaying it. States must line up one to one.
pub fn concordance_between(reference: &[&StepRecord], other: &[&StepRecord]) -> Result<f64, AnalyticsError> {
    if reference.len() != other.len() {
        return Err(AnalyticsError::Input(format!(
            "reference has {} steps, other has {}",
            reference.len(),
            other.len()
        )));
    }
    let mut it = other.iter();
    concordance_rate(reference, |r| {
        let o = it.next().expect("lengths checked");
        if o.obs_hash != r.obs_hash || o.candidates != r.candidates {
            return Err(AnalyticsError::Input(format!("candidate list mismatch at step {}", r.t)));
        }
        Ok(o.chosen)
    })
}
