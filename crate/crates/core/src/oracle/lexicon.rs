use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::{OracleError, OracleQuery, ValenceBackend};
use crate::personality::{TraitId, Valence};
use crate::text::tokens;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LexiconRule {
    pub pattern: String,
    pub weight: i64,
    /// Also match against the observation text.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub context: bool,
    #[serde(skip)]
    tokens: Vec<String>,
}

impl LexiconRule {
    pub fn new(pattern: &str, weight: i64) -> Self {
        Self::with_context(pattern, weight, false)
    }

    pub fn with_context(pattern: &str, weight: i64, context: bool) -> Self {
        LexiconRule {
            pattern: pattern.to_string(),
            weight,
            context,
            tokens: tokens(pattern),
        }
    }

    fn matches(&self, haystack: &[String]) -> bool {
        !self.tokens.is_empty() && haystack.windows(self.tokens.len()).any(|w| w == self.tokens.as_slice())
    }
}

/// Weighted cue phrases per trait. A query scores the sum of matched weights;
/// sums whose magnitude reaches `threshold` give their sign, others are neutral.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LexiconRules {
    pub threshold: i64,
    pub traits: BTreeMap<TraitId, Vec<LexiconRule>>,
}

impl LexiconRules {
    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        let root: Value = serde_json::from_str(text).map_err(|e| OracleError::Lexicon(e.to_string()))?;
        let obj = root
            .as_object()
            .ok_or_else(|| OracleError::Lexicon("lexicon must be a JSON object".into()))?;
        let mut threshold = 1;
        let mut traits = BTreeMap::new();
        for (key, value) in obj {
            if key == "threshold" {
                threshold = value
                    .as_i64()
                    .filter(|t| *t > 0)
                    .ok_or_else(|| OracleError::Lexicon("threshold must be a positive integer".into()))?;
                continue;
            }
            let trait_id: TraitId = key.parse().map_err(|e: crate::personality::UnknownTrait| OracleError::Lexicon(e.to_string()))?;
            let entries = value
                .as_array()
                .ok_or_else(|| OracleError::Lexicon(format!("section `{key}` must be a list")))?;
            let mut rules = Vec::with_capacity(entries.len());
            for entry in entries {
                let pattern = entry
                    .get("pattern")
                    .and_then(Value::as_str)
                    .ok_or_else(|| OracleError::Lexicon(format!("{key}: entry without a string `pattern`")))?;
                let weight = entry
                    .get("weight")
                    .and_then(Value::as_i64)
                    .ok_or_else(|| OracleError::Lexicon(format!("{key}: `{pattern}` has no integer `weight`")))?;
                let context = entry.get("context").and_then(Value::as_bool).unwrap_or(false);
                rules.push(LexiconRule::with_context(pattern, weight, context));
            }
            traits.insert(trait_id, rules);
        }
        let rules = LexiconRules { threshold, traits };
        rules.validate()?;
        Ok(rules)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.threshold <= 0 {
            return Err(OracleError::Lexicon("threshold must be positive".into()));
        }
        for t in TraitId::ALL {
            let Some(rules) = self.traits.get(&t) else {
                return Err(OracleError::Lexicon(format!("missing section for trait {t}")));
            };
            if rules.is_empty() {
                return Err(OracleError::Lexicon(format!("trait {t} has no rules")));
            }
            let mut seen = BTreeSet::new();
            for r in rules {
                if r.tokens.is_empty() {
                    return Err(OracleError::Lexicon(format!("{t}: empty pattern `{}`", r.pattern)));
                }
                if r.weight == 0 {
                    return Err(OracleError::Lexicon(format!("{t}: pattern `{}` has weight 0", r.pattern)));
                }
                if !seen.insert(r.tokens.join(" ")) {
                    return Err(OracleError::Lexicon(format!("{t}: duplicate pattern `{}`", r.pattern)));
                }
            }
        }
        Ok(())
    }

    /// Signed sum of matched weights for one query.
    pub fn score(&self, query: &OracleQuery) -> i64 {
        let action = tokens(&query.action);
        let mut context: Option<Vec<String>> = None;
        let Some(rules) = self.traits.get(&query.trait_id) else {
            return 0;
        };
        rules
            .iter()
            .filter(|r| {
                r.matches(&action)
                    || (r.context && r.matches(context.get_or_insert_with(|| tokens(&query.observation))))
            })
            .map(|r| r.weight)
            .sum()
    }

    pub fn evaluate(&self, query: &OracleQuery) -> Valence {
        let s = self.score(query);
        if s.abs() >= self.threshold {
            Valence::from_sign(s)
        } else {
            Valence::Neutral
        }
    }
}

pub fn load_lexicon(path: &Path) -> Result<LexiconRules, OracleError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| OracleError::Lexicon(format!("cannot read {}: {e}", path.display())))?;
    LexiconRules::from_json(&text)
}

#[derive(Debug, Clone)]
pub struct LexiconOracle {
    rules: LexiconRules,
}

impl LexiconOracle {
    pub fn new(rules: LexiconRules) -> Self {
        LexiconOracle { rules }
    }

    pub fn rules(&self) -> &LexiconRules {
        &self.rules
    }
}

impl ValenceBackend for LexiconOracle {
    fn classify(&self, query: &OracleQuery) -> Result<Valence, OracleError> {
        query.check()?;
        Ok(self.rules.evaluate(query))
    }

    fn describe(&self) -> String {
        "lexicon".into()
    }
}
