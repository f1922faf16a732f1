use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agent::{ShapingConfig, TrainConfig};
use crate::personality::TraitId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

/// `NP`, or a trait abbreviation with `_up` / `_down`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentLabel {
    Np,
    Guided(TraitId, Direction),
}

impl AgentLabel {
    /// The unguided agent followed by every trait in both directions.
    pub fn all() -> Vec<AgentLabel> {
        let mut out = vec![AgentLabel::Np];
        for t in TraitId::ALL {
            out.push(AgentLabel::Guided(t, Direction::Up));
            out.push(AgentLabel::Guided(t, Direction::Down));
        }
        out
    }

    pub fn shaping(self) -> ShapingConfig {
        match self {
            AgentLabel::Np => ShapingConfig::none(),
            AgentLabel::Guided(t, Direction::Up) => ShapingConfig::toward_high(t),
            AgentLabel::Guided(t, Direction::Down) => ShapingConfig::toward_low(t),
        }
    }

    pub fn trait_id(self) -> Option<TraitId> {
        match self {
            AgentLabel::Np => None,
            AgentLabel::Guided(t, _) => Some(t),
        }
    }

    /// Position in [`AgentLabel::all`]; used to order matrix columns.
    pub fn ordinal(self) -> usize {
        match self {
            AgentLabel::Np => 0,
            AgentLabel::Guided(t, d) => 1 + 2 * t.index() + usize::from(d == Direction::Down),
        }
    }
}

impl fmt::Display for AgentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentLabel::Np => f.write_str("NP"),
            AgentLabel::Guided(t, Direction::Up) => write!(f, "{}_up", t.abbr()),
            AgentLabel::Guided(t, Direction::Down) => write!(f, "{}_down", t.abbr()),
        }
    }
}

impl FromStr for AgentLabel {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::BadLabel(s.to_string());
        if s.eq_ignore_ascii_case("np") {
            return Ok(AgentLabel::Np);
        }
        let (t, d) = s.rsplit_once('_').ok_or_else(bad)?;
        let t: TraitId = t.parse().map_err(|_| bad())?;
        let d = match d.to_ascii_lowercase().as_str() {
            "up" => Direction::Up,
            "down" => Direction::Down,
            _ => return Err(bad()),
        };
        Ok(AgentLabel::Guided(t, d))
    }
}

impl Serialize for AgentLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AgentLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub label: AgentLabel,
    pub shaping: ShapingConfig,
    pub train: TrainConfig,
}

impl AgentConfig {
    pub fn new(label: AgentLabel, train: TrainConfig) -> Self {
        AgentConfig {
            label,
            shaping: label.shaping(),
            train,
        }
    }

    /// Label and shaping must agree; the training settings must be sane.
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.shaping.validate()?;
        self.train.validate()?;
        let consistent = match self.label {
            AgentLabel::Np => self.shaping.trait_id.is_none(),
            AgentLabel::Guided(t, d) => {
                self.shaping.trait_id == Some(t)
                    && match d {
                        Direction::Up => self.shaping.weight > 0.0,
                        Direction::Down => self.shaping.weight < 0.0,
                    }
            }
        };
        if !consistent {
            return Err(HarnessError::BadLabel(format!(
                "{} does not match its shaping configuration",
                self.label
            )));
        }
        Ok(())
    }
}
