use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The eight personality traits: Big Five followed by the Dark Triad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TraitId {
    Ope,
    Con,
    Ext,
    Agr,
    Neu,
    Psy,
    Mac,
    Nar,
}

impl TraitId {
    pub const ALL: [TraitId; 8] = [
        TraitId::Ope,
        TraitId::Con,
        TraitId::Ext,
        TraitId::Agr,
        TraitId::Neu,
        TraitId::Psy,
        TraitId::Mac,
        TraitId::Nar,
    ];

    pub fn abbr(self) -> &'static str {
        match self {
            TraitId::Ope => "Ope",
            TraitId::Con => "Con",
            TraitId::Ext => "Ext",
            TraitId::Agr => "Agr",
            TraitId::Neu => "Neu",
            TraitId::Psy => "Psy",
            TraitId::Mac => "Mac",
            TraitId::Nar => "Nar",
        }
    }

    pub fn full_name(self) -> &'static str {
        match self {
            TraitId::Ope => "Openness",
            TraitId::Con => "Conscientiousness",
            TraitId::Ext => "Extraversion",
            TraitId::Agr => "Agreeableness",
            TraitId::Neu => "Neuroticism",
            TraitId::Psy => "Psychopathy",
            TraitId::Mac => "Machiavellianism",
            TraitId::Nar => "Narcissism",
        }
    }

    /// Position in [`TraitId::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TraitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbr())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown trait `{0}` (expected one of Ope, Con, Ext, Agr, Neu, Psy, Mac, Nar)")]
pub struct UnknownTrait(pub String);

impl FromStr for TraitId {
    type Err = UnknownTrait;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TraitId::ALL
            .into_iter()
            .find(|t| t.abbr().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownTrait(s.to_string()))
    }
}

/// Three-way classifier judgement: low (-1), neutral (0) or high (+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Valence {
    Low,
    #[default]
    Neutral,
    High,
}

impl Valence {
    pub fn value(self) -> i8 {
        match self {
            Valence::Low => -1,
            Valence::Neutral => 0,
            Valence::High => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    pub fn from_sign(x: i64) -> Valence {
        match x.signum() {
            -1 => Valence::Low,
            0 => Valence::Neutral,
            _ => Valence::High,
        }
    }

    pub fn negate(self) -> Valence {
        match self {
            Valence::Low => Valence::High,
            Valence::Neutral => Valence::Neutral,
            Valence::High => Valence::Low,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("valence must be -1, 0 or 1, got {0}")]
pub struct InvalidValence(pub i64);

impl TryFrom<i64> for Valence {
    type Error = InvalidValence;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            -1 => Ok(Valence::Low),
            0 => Ok(Valence::Neutral),
            1 => Ok(Valence::High),
            other => Err(InvalidValence(other)),
        }
    }
}

impl Serialize for Valence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Valence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Valence::try_from(v).map_err(serde::de::Error::custom)
    }
}
