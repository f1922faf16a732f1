use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::oracle::{annotate_trajectory, ValenceBackend};
use crate::personality::{TraitId, Valence};
use crate::world::{replay_walkthrough, WorldSpec};

pub type TraitMatrix = [[Option<f64>; 8]; 8];

/// Phi coefficient between every pair of traits over actions where both
/// valences are non-neutral. Diagonal entries are 1; pairs with fewer than
/// two usable actions or no variation are absent.
pub fn trait_correlation(actions: &[BTreeMap<TraitId, Valence>]) -> Result<TraitMatrix, AnalyticsError> {
    for a in actions {
        if let Some(t) = TraitId::ALL.into_iter().find(|t| !a.contains_key(t)) {
            return Err(AnalyticsError::Unannotated(t));
        }
    }
    let mut out = [[None; 8]; 8];
    for a in TraitId::ALL {
        for b in TraitId::ALL {
            out[a.index()][b.index()] = if a == b {
                Some(1.0)
            } else {
                let pairs: Vec<(f64, f64)> = actions
                    .iter()
                    .map(|m| (m[&a], m[&b]))
                    .filter(|(x, y)| *x != Valence::Neutral && *y != Valence::Neutral)
                    .map(|(x, y)| (x.as_f64(), y.as_f64()))
                    .collect();
                pearson(&pairs)
            };
        }
    }
    Ok(out)
}

fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValenceShare {
    pub high: f64,
    pub low: f64,
}

/// Share of walkthrough actions judged high and low for each trait, in percent.
pub fn annotate_walkthrough(
    world: &WorldSpec,
    oracle: &dyn ValenceBackend,
) -> Result<BTreeMap<TraitId, ValenceShare>, AnalyticsError> {
    let (_, traj) = replay_walkthrough(world)?;
    if traj.is_empty() {
        return Err(AnalyticsError::Input(format!("world `{}` has no walkthrough", world.id)));
    }
    let annotated = annotate_trajectory(oracle, &traj, &TraitId::ALL)?;
    Ok(valence_shares(annotated.steps.iter().map(|r| &r.valences)))
}

/// Percent high and low per trait over annotated actions.
pub fn valence_shares<'a>(actions: impl Iterator<Item = &'a BTreeMap<TraitId, Valence>>) -> BTreeMap<TraitId, ValenceShare> {
    let mut counts = [[0usize; 2]; 8];
    let mut n = 0usize;
    for a in actions {
        n += 1;
        for (t, v) in a {
            match v {
                Valence::High => counts[t.index()][0] += 1,
                Valence::Low => counts[t.index()][1] += 1,
                Valence::Neutral => {}
            }
        }
    }
    let pct = |c: usize| if n == 0 { 0.0 } else { 100.0 * c as f64 / n as f64 };
    TraitId::ALL
        .into_iter()
        .map(|t| {
            let [h, l] = counts[t.index()];
            (t, ValenceShare { high: pct(h), low: pct(l) })
        })
        .collect()
}
