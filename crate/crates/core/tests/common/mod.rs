#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use panda_core::agent::QModel;
use panda_core::oracle::{OracleError, OracleQuery, ValenceBackend};
use panda_core::text::text_hash;
use panda_core::{Source, StepRecord, TraitId, Trajectory, Valence};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

/// Signed-rank statistic and two-sided p-value by enumerating every sign
/// assignment of ranks `1..=n`. `d` must be tie-free and zero-free.
pub fn brute_force_wilcoxon(d: &[f64]) -> (f64, f64) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()));
    let mut rank = vec![0u32; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u32 + 1;
    }
    let w_plus: u32 = (0..n).filter(|&i| d[i] > 0.0).map(|i| rank[i]).sum();
    let total = (n * (n + 1) / 2) as u32;
    let t = w_plus.min(total - w_plus);
    let mut at_most = 0u64;
    for mask in 0u32..(1 << n) {
        let w: u32 = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| i as u32 + 1).sum();
        at_most += u64::from(w <= t);
    }
    let p = (2.0 * at_most as f64 / (1u64 << n) as f64).min(1.0);
    (t as f64, p)
}

/// `n` distinct non-zero magnitudes with random signs, shuffled.
pub fn tie_free_differences<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut mags: Vec<f64> = Vec::with_capacity(n);
    while mags.len() < n {
        let m = (rng.random_range(1..10_000) as f64) / 100.0;
        if !mags.contains(&m) {
            mags.push(m);
        }
    }
    mags.shuffle(rng);
    mags.into_iter()
        .map(|m| if rng.random_bool(0.5) { m } else { -m })
        .collect()
}

pub fn record(t: u32, place: &str) -> StepRecord {
    let obs = format!("obs {t} at {place}");
    StepRecord {
        t,
        place: place.to_string(),
        obs_hash: text_hash(&obs),
        obs,
        candidates: vec!["wait".into(), "go north".into()],
        chosen: 0,
        valences: BTreeMap::new(),
        reward: 0,
        score: 0,
        source: Source::Agent,
    }
}

/// An episode whose records end in the given places, in order.
pub fn episode(places: &[&str]) -> Trajectory {
    let mut t = Trajectory::new();
    for (i, p) in places.iter().enumerate() {
        t.push(record(i as u32 + 1, p));
    }
    t
}

/// Episode with one record per valence, annotated for a single trait.
pub fn valence_episode(trait_id: TraitId, valences: &[Valence]) -> Trajectory {
    let mut t = Trajectory::new();
    for (i, v) in valences.iter().enumerate() {
        let mut r = record(i as u32 + 1, "a");
        r.valences.insert(trait_id, *v);
        t.push(r);
    }
    t
}

/// Backend answering from a table keyed by (trait, action); neutral otherwise.
#[derive(Default)]
pub struct TableOracle {
    pub table: BTreeMap<(TraitId, String), Valence>,
    pub calls: AtomicU64,
}

impl TableOracle {
    pub fn with(mut self, trait_id: TraitId, action: &str, v: Valence) -> Self {
        self.table.insert((trait_id, action.to_string()), v);
        self
    }
}

impl ValenceBackend for TableOracle {
    fn classify(&self, q: &OracleQuery) -> Result<Valence, OracleError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(self
            .table
            .get(&(q.trait_id, q.action.clone()))
            .copied()
            .unwrap_or(Valence::Neutral))
    }

    fn describe(&self) -> String {
        "table".into()
    }
}

const WORDS: &[&str] = &[
    "open", "window", "go", "north", "lamp", "dark", "cellar", "take", "key", "read", "book", "wait", "the", "a",
    "garden", "door", "unlock", "sing",
];

pub fn random_text<R: Rng>(rng: &mut R, max_words: usize) -> String {
    let n = rng.random_range(1..=max_words);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Central difference of q with respect to one weight.
pub fn numeric_partial(model: &QModel, obs: &str, action: &str, index: usize, h: f64) -> f64 {
    let mut plus = model.clone();
    *plus.param_mut(index) += h;
    let mut minus = model.clone();
    *minus.param_mut(index) -= h;
    (plus.q_value(obs, action) - minus.q_value(obs, action)) / (2.0 * h)
}

/// Coordinates that the input actually touches, plus arbitrary ones.
pub fn probe_coordinates<R: Rng>(model: &QModel, obs: &str, action: &str, rng: &mut R, count: usize) -> Vec<usize> {
    let x = model.features(obs, action);
    let w1_len = model.w1.len();
    (0..count)
        .map(|k| match k % 4 {
            0 | 1 => {
                let unit = rng.random_range(0..model.hidden_dim);
                let input = x.indices[rng.random_range(0..x.nnz())];
                input * model.hidden_dim + unit
            }
            2 => w1_len + rng.random_range(0..2 * model.hidden_dim),
            _ => rng.random_range(0..model.num_params()),
        })
        .collect()
}
