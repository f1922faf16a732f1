//! Valence classifiers: given a trait, a situation and an action, judge the
//! action as low, neutral or high for that trait.

mod lexicon;
mod remote;

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use crate::personality::{TraitId, Valence};
use crate::text::fnv1a;
use crate::trajectory::Trajectory;

pub use lexicon::{load_lexicon, LexiconOracle, LexiconRule, LexiconRules};
pub use remote::RemoteOracle;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("lexicon error: {0}")]
    Lexicon(String),
    #[error("query has an empty action")]
    EmptyAction,
    #[error("classifier at {endpoint} unreachable after {attempts} attempts: {message}")]
    Unreachable {
        endpoint: String,
        attempts: u32,
        message: String,
    },
    #[error("classifier protocol error: {0}")]
    Protocol(String),
    #[error("bad oracle spec `{0}` (expected lexicon:<path>, remote:<url> or builtin)")]
    BadSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OracleQuery {
    pub trait_id: TraitId,
    pub observation: String,
    pub action: String,
}

impl OracleQuery {
    pub fn new(trait_id: TraitId, observation: impl Into<String>, action: impl Into<String>) -> Self {
        OracleQuery {
            trait_id,
            observation: observation.into(),
            action: action.into(),
        }
    }

    fn check(&self) -> Result<(), OracleError> {
        if self.action.trim().is_empty() {
            Err(OracleError::EmptyAction)
        } else {
            Ok(())
        }
    }
}

pub trait ValenceBackend: Send + Sync {
    fn classify(&self, query: &OracleQuery) -> Result<Valence, OracleError>;

    fn describe(&self) -> String;
}

impl<B: ValenceBackend + ?Sized> ValenceBackend for Arc<B> {
    fn classify(&self, query: &OracleQuery) -> Result<Valence, OracleError> {
        (**self).classify(query)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<B: ValenceBackend + ?Sized> ValenceBackend for &B {
    fn classify(&self, query: &OracleQuery) -> Result<Valence, OracleError> {
        (**self).classify(query)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<B: ValenceBackend + ?Sized> ValenceBackend for Box<B> {
    fn classify(&self, query: &OracleQuery) -> Result<Valence, OracleError> {
        (**self).classify(query)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

pub fn classify<B: ValenceBackend + ?Sized>(backend: &B, query: &OracleQuery) -> Result<Valence, OracleError> {
    backend.classify(query)
}

type CacheKey = (TraitId, u64, String);

/// Memoizing wrapper keyed by `(trait, hash(observation), action)`.
pub struct CachedOracle<B> {
    inner: B,
    enabled: bool,
    cache: RwLock<HashMap<CacheKey, Valence>>,
    lookups: AtomicU64,
    backend_calls: AtomicU64,
}

impl<B: ValenceBackend> CachedOracle<B> {
    pub fn new(inner: B) -> Self {
        CachedOracle {
            inner,
            enabled: true,
            cache: RwLock::new(HashMap::new()),
            lookups: AtomicU64::new(0),
            backend_calls: AtomicU64::new(0),
        }
    }

    /// A pass-through wrapper that still counts calls.
    pub fn uncached(inner: B) -> Self {
        CachedOracle {
            enabled: false,
            ..Self::new(inner)
        }
    }

    pub fn lookups(&self) -> u64 {
        self.lookups.load(Ordering::Relaxed)
    }

    pub fn backend_calls(&self) -> u64 {
        self.backend_calls.load(Ordering::Relaxed)
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: ValenceBackend> ValenceBackend for CachedOracle<B> {
    fn classify(&self, query: &OracleQuery) -> Result<Valence, OracleError> {
        self.lookups.fetch_add(1, Ordering::Relaxed);
        if !self.enabled {
            self.backend_calls.fetch_add(1, Ordering::Relaxed);
            return self.inner.classify(query);
        }
        let key = (query.trait_id, fnv1a(query.observation.as_bytes()), query.action.clone());
        if let Some(v) = self.cache.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(*v);
        }
        self.backend_calls.fetch_add(1, Ordering::Relaxed);
        let v = self.inner.classify(query)?;
        self.cache.write().unwrap_or_else(|e| e.into_inner()).insert(key, v);
        Ok(v)
    }

    fn describe(&self) -> String {
        format!("cached({})", self.inner.describe())
    }
}

/// Attaches a valence for each requested trait to every step's chosen action.
/// On failure nothing is returned.
pub fn annotate_trajectory<B: ValenceBackend + ?Sized>(
    backend: &B,
    trajectory: &Trajectory,
    traits: &[TraitId],
) -> Result<Trajectory, OracleError> {
    let mut out = trajectory.clone();
    for step in &mut out.steps {
        let Some(action) = step.candidates.get(step.chosen).cloned() else {
            continue;
        };
        for &t in traits {
            let v = backend.classify(&OracleQuery::new(t, step.obs.clone(), action.clone()))?;
            step.valences.insert(t, v);
        }
    }
    Ok(out)
}

/// Builds a backend from `lexicon:<path>`, `remote:<url>` or `builtin`.
pub fn backend_from_spec(spec: &str) -> Result<Box<dyn ValenceBackend>, OracleError> {
    if spec == "builtin" {
        return Ok(Box::new(LexiconOracle::new(crate::bundled::lexicon())));
    }
    if let Some(path) = spec.strip_prefix("lexicon:") {
        return Ok(Box::new(LexiconOracle::new(load_lexicon(Path::new(path))?)));
    }
    if let Some(url) = spec.strip_prefix("remote:") {
        return Ok(Box::new(RemoteOracle::new(url)));
    }
    Err(OracleError::BadSpec(spec.to_string()))
}
