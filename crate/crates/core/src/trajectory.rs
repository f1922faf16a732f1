//! Step records and their JSON Lines representation.
//!
//! One record per environment step. `obs` and `candidates` describe what the
//! actor saw when choosing; `place`, `reward` and `score` describe the state
//! after the chosen action was applied. `t` counts actions from 1.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::personality::{TraitId, Valence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Agent,
    Human,
    Walkthrough,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u32,
    pub place: String,
    pub obs_hash: String,
    pub obs: String,
    pub candidates: Vec<String>,
    pub chosen: usize,
    #[serde(default)]
    pub valences: BTreeMap<TraitId, Valence>,
    pub reward: i64,
    pub score: i64,
    #[serde(default)]
    pub source: Source,
}

impl StepRecord {
    pub fn action(&self) -> Option<&str> {
        self.candidates.get(self.chosen).map(String::as_str)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrajectoryError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: chosen index {chosen} outside {len} candidates")]
    ChosenOutOfRange { line: usize, chosen: usize, len: usize },
    #[error("line {line}: step counter {found} does not follow {previous}")]
    StepOrder { line: usize, previous: u32, found: u32 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, record: StepRecord) {
        self.steps.push(record);
    }

    pub fn final_score(&self) -> i64 {
        self.steps.last().map_or(0, |s| s.score)
    }

    pub fn total_reward(&self) -> i64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// True when every step carries a valence for `trait_id`.
    pub fn is_annotated_for(&self, trait_id: TraitId) -> bool {
        self.steps.iter().all(|s| s.valences.contains_key(&trait_id))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(step).expect("step records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<(), TrajectoryError> {
        let io = |source| TrajectoryError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = File::create(path).map_err(io)?;
        let mut w = BufWriter::new(file);
        self.write_jsonl(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }

    /// Parses and validates a JSON Lines stream. Blank lines are ignored.
    pub fn from_jsonl(text: &str) -> Result<Self, TrajectoryError> {
        Self::read_jsonl(text.as_bytes())
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self, TrajectoryError> {
        let mut steps: Vec<StepRecord> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|source| TrajectoryError::Io {
                path: "<stream>".into(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: StepRecord = serde_json::from_str(&line).map_err(|source| TrajectoryError::Parse {
                line: line_no,
                source,
            })?;
            if rec.chosen >= rec.candidates.len() {
                return Err(TrajectoryError::ChosenOutOfRange {
                    line: line_no,
                    chosen: rec.chosen,
                    len: rec.candidates.len(),
                });
            }
            if let Some(prev) = steps.last() {
                if rec.t != prev.t + 1 {
                    return Err(TrajectoryError::StepOrder {
                        line: line_no,
                        previous: prev.t,
                        found: rec.t,
                    });
                }
            }
            steps.push(rec);
        }
        Ok(Trajectory { steps })
    }

    pub fn load(path: &Path) -> Result<Self, TrajectoryError> {
        let file = File::open(path).map_err(|source| TrajectoryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_jsonl(BufReader::new(file))
    }
}

/// Loads every `*.jsonl` file in a directory, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<Trajectory>, TrajectoryError> {
    let io = |source| TrajectoryError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Trajectory::load(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::text_hash;

    fn record(t: u32, chosen: usize) -> StepRecord {
        StepRecord {
            t,
            place: "hall".into(),
            obs_hash: text_hash("A hall."),
            obs: "A hall.".into(),
            candidates: vec!["go north".into(), "wait".into()],
            chosen,
            valences: BTreeMap::from([(TraitId::Ope, Valence::High)]),
            reward: 1,
            score: t as i64,
            source: Source::Agent,
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let traj = Trajectory {
            steps: vec![record(1, 0), record(2, 1)],
        };
        let text = traj.to_jsonl();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with(r#"{"t":1,"place":"hall","obs_hash":"#));
        assert_eq!(Trajectory::from_jsonl(&text).unwrap(), traj);
    }

    #[test]
    fn loader_rejects_bad_index_and_gaps() {
        let bad = serde_json::to_string(&record(1, 5)).unwrap();
        assert!(matches!(
            Trajectory::from_jsonl(&bad),
            Err(TrajectoryError::ChosenOutOfRange { line: 1, .. })
        ));
        let gap = format!(
            "{}\n{}\n",
            serde_json::to_string(&record(1, 0)).unwrap(),
            serde_json::to_string(&record(3, 0)).unwrap()
        );
        assert!(matches!(
            Trajectory::from_jsonl(&gap),
            Err(TrajectoryError::StepOrder { line: 2, .. })
        ));
    }

    #[test]
    fn empty_stream_is_empty_trajectory() {
        assert!(Trajectory::from_jsonl("").unwrap().is_empty());
    }
}
