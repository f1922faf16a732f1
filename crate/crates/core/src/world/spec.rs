use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::engine::Engine;
use super::WorldError;
use crate::text::normalize_action;

pub const INVENTORY: &str = "inventory";
pub const NOWHERE: &str = "nowhere";
pub const ANY_PLACE: &str = "any";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub id: String,
    pub places: Vec<Place>,
    #[serde(default)]
    pub objects: Vec<GameObject>,
    #[serde(default)]
    pub rules: Vec<ActionRule>,
    pub start_place: String,
    pub max_score: i64,
    #[serde(default)]
    pub walkthrough: Vec<String>,
    /// No-op actions offered as candidates, keyed by place id.
    #[serde(default)]
    pub distractors: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Place {
    pub id: String,
    pub description: String,
    #[serde(default)]
    pub exits: BTreeMap<String, Exit>,
}

/// An exit is written either as a bare place id or as `{"to": .., "guard": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exit {
    Open(String),
    Guarded {
        to: String,
        #[serde(default)]
        guard: Option<String>,
    },
}

impl Exit {
    pub fn target(&self) -> &str {
        match self {
            Exit::Open(to) | Exit::Guarded { to, .. } => to,
        }
    }

    pub fn guard(&self) -> Option<&str> {
        match self {
            Exit::Open(_) => None,
            Exit::Guarded { guard, .. } => guard.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameObject {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub portable: bool,
    /// A place id, `"inventory"` or `"nowhere"`.
    pub initial_place: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRule {
    pub text: String,
    #[serde(default)]
    pub preconditions: Preconditions,
    #[serde(default)]
    pub effects: Effects,
    #[serde(default)]
    pub reward: Option<RewardSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Preconditions {
    /// Place id, `"any"`, or absent for any place.
    #[serde(default)]
    pub place: Option<String>,
    #[serde(default)]
    pub flags: BTreeSet<String>,
    /// Flags that must not be set.
    #[serde(default)]
    pub absent_flags: BTreeSet<String>,
    #[serde(default)]
    pub inventory: BTreeSet<String>,
}

impl Preconditions {
    pub fn place_matches(&self, place: &str) -> bool {
        match self.place.as_deref() {
            None | Some(ANY_PLACE) => true,
            Some(p) => p == place,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Effects {
    #[serde(default)]
    pub move_to: Option<String>,
    #[serde(default)]
    pub set_flags: BTreeSet<String>,
    #[serde(default)]
    pub clear_flags: BTreeSet<String>,
    #[serde(default)]
    pub take: Vec<String>,
    #[serde(default)]
    pub drop: Vec<String>,
    #[serde(default)]
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub id: String,
    pub points: i64,
    #[serde(default = "default_once")]
    pub once: bool,
}

fn default_once() -> bool {
    true
}

impl WorldSpec {
    pub fn from_json(text: &str) -> Result<WorldSpec, WorldError> {
        let world: WorldSpec = serde_json::from_str(text).map_err(WorldError::Parse)?;
        world.validate()?;
        Ok(world)
    }

    pub fn place(&self, id: &str) -> Option<&Place> {
        self.places.iter().find(|p| p.id == id)
    }

    pub fn object(&self, id: &str) -> Option<&GameObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Flags that some rule can set. Guards and preconditions may only name these.
    pub fn settable_flags(&self) -> BTreeSet<&str> {
        self.rules
            .iter()
            .flat_map(|r| r.effects.set_flags.iter().map(String::as_str))
            .collect()
    }

    /// Sum of points over distinct reward ids.
    pub fn reward_capacity(&self) -> i64 {
        let mut seen = BTreeMap::new();
        for r in self.rules.iter().filter_map(|r| r.reward.as_ref()) {
            seen.entry(r.id.as_str()).or_insert(r.points);
        }
        seen.values().sum()
    }

    /// Checks every structural invariant, then replays the walkthrough.
    pub fn validate(&self) -> Result<(), WorldError> {
        if self.id.trim().is_empty() {
            return Err(WorldError::Invalid("world id is empty".into()));
        }
        if self.places.is_empty() {
            return Err(WorldError::Invalid("world has no places".into()));
        }
        let mut place_ids = BTreeSet::new();
        for p in &self.places {
            if !place_ids.insert(p.id.as_str()) {
                return Err(WorldError::Invalid(format!("duplicate place id `{}`", p.id)));
            }
            if p.id == ANY_PLACE || p.id == INVENTORY || p.id == NOWHERE {
                return Err(WorldError::Invalid(format!("place id `{}` is reserved", p.id)));
            }
            if p.description.trim().is_empty() {
                return Err(WorldError::Invalid(format!("place `{}` has an empty description", p.id)));
            }
        }
        let dangling = |kind: &'static str, id: &str, context: String| WorldError::Dangling {
            kind,
            id: id.to_string(),
            context,
        };
        if !place_ids.contains(self.start_place.as_str()) {
            return Err(dangling("place", &self.start_place, "start_place".into()));
        }
        let flags = self.settable_flags();
        for p in &self.places {
            for (dir, exit) in &p.exits {
                if !place_ids.contains(exit.target()) {
                    return Err(dangling("place", exit.target(), format!("exit `{dir}` of place `{}`", p.id)));
                }
                if let Some(g) = exit.guard() {
                    if !flags.contains(g) {
                        return Err(dangling("flag", g, format!("guard on exit `{dir}` of place `{}`", p.id)));
                    }
                }
            }
        }
        let mut object_ids = BTreeSet::new();
        for o in &self.objects {
            if !object_ids.insert(o.id.as_str()) {
                return Err(WorldError::Invalid(format!("duplicate object id `{}`", o.id)));
            }
            let loc = o.initial_place.as_str();
            if loc != INVENTORY && loc != NOWHERE && !place_ids.contains(loc) {
                return Err(dangling("place", loc, format!("initial_place of object `{}`", o.id)));
            }
        }
        let mut reward_points: BTreeMap<&str, i64> = BTreeMap::new();
        for (i, rule) in self.rules.iter().enumerate() {
            let ctx = |what: &str| format!("{what} of rule #{i} `{}`", rule.text);
            if normalize_action(&rule.text).is_empty() {
                return Err(WorldError::Invalid(format!("rule #{i} has empty text")));
            }
            let pre = &rule.preconditions;
            if let Some(p) = pre.place.as_deref() {
                if p != ANY_PLACE && !place_ids.contains(p) {
                    return Err(dangling("place", p, ctx("place precondition")));
                }
            }
            for f in pre.flags.iter().chain(&pre.absent_flags) {
                if !flags.contains(f.as_str()) {
                    return Err(dangling("flag", f, ctx("flag precondition")));
                }
            }
            for o in &pre.inventory {
                if !object_ids.contains(o.as_str()) {
                    return Err(dangling("object", o, ctx("inventory precondition")));
                }
            }
            let eff = &rule.effects;
            if let Some(p) = eff.move_to.as_deref() {
                if !place_ids.contains(p) {
                    return Err(dangling("place", p, ctx("move_to effect")));
                }
            }
            for f in &eff.clear_flags {
                if !flags.contains(f.as_str()) {
                    return Err(dangling("flag", f, ctx("clear_flags effect")));
                }
            }
            for o in eff.take.iter().chain(&eff.drop) {
                match self.object(o) {
                    None => return Err(dangling("object", o, ctx("take/drop effect"))),
                    Some(obj) if !obj.portable => {
                        return Err(WorldError::Invalid(format!(
                            "object `{o}` is not portable but is moved by rule #{i} `{}`",
                            rule.text
                        )))
                    }
                    Some(_) => {}
                }
            }
            if let Some(r) = &rule.reward {
                if r.points < 0 {
                    return Err(WorldError::Invalid(format!(
                        "reward `{}` has negative points {}",
                        r.id, r.points
                    )));
                }
                if let Some(prev) = reward_points.insert(r.id.as_str(), r.points) {
                    if prev != r.points {
                        return Err(WorldError::Invalid(format!(
                            "reward `{}` declared with different point values",
                            r.id
                        )));
                    }
                }
            }
        }
        for place in self.distractors.keys() {
            if !place_ids.contains(place.as_str()) {
                return Err(dangling("place", place, "distractor list".into()));
            }
        }
        if self.max_score < 0 {
            return Err(WorldError::Invalid("max_score is negative".into()));
        }
        if self.reward_capacity() < self.max_score {
            return Err(WorldError::Invalid(format!(
                "rewards total {} points, below max_score {}",
                self.reward_capacity(),
                self.max_score
            )));
        }
        if !self.walkthrough.is_empty() {
            let (score, _) = Engine::unbounded(self).replay_walkthrough()?;
            if score != self.max_score {
                return Err(WorldError::WalkthroughScore {
                    score,
                    max_score: self.max_score,
                });
            }
        }
        Ok(())
    }
}

pub fn load_world(path: &Path) -> Result<WorldSpec, WorldError> {
    let text = std::fs::read_to_string(path).map_err(|source| WorldError::Io {
        path: path.display().to_string(),
        source,
    })?;
    WorldSpec::from_json(&text)
}
