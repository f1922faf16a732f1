use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::config::AgentLabel;
use super::run::{RunLog, SCORE_WINDOW};
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCell {
    pub mean: f64,
    /// Population standard deviation of the per-seed means.
    pub std: f64,
    pub runs: usize,
    /// Some run had fewer than the full window of complete episodes.
    pub short: bool,
}

/// Games × agents. Rows and columns are kept in a canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<AgentLabel>,
    /// `cells[r][c]`.
    pub cells: Vec<Vec<ScoreCell>>,
}

impl ScoreMatrix {
    pub fn column_index(&self, label: AgentLabel) -> Option<usize> {
        self.columns.iter().position(|&c| c == label)
    }

    pub fn column(&self, label: AgentLabel) -> Option<Vec<f64>> {
        let c = self.column_index(label)?;
        Some(self.cells.iter().map(|row| row[c].mean).collect())
    }

    pub fn get(&self, game: &str, label: AgentLabel) -> Option<&ScoreCell> {
        let r = self.rows.iter().position(|g| g == game)?;
        Some(&self.cells[r][self.column_index(label)?])
    }

    /// Reads `game,<label>,<label>,...` rows. Lines starting with `#` are
    /// comments. Imported cells have no spread information.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, HarnessError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 {
            return Err(HarnessError::Matrix("need a game column and at least one agent column".into()));
        }
        let columns = headers
            .iter()
            .skip(1)
            .map(str::parse)
            .collect::<Result<Vec<AgentLabel>, _>>()?;
        if columns.iter().collect::<BTreeSet<_>>().len() != columns.len() {
            return Err(HarnessError::Matrix("duplicate agent column".into()));
        }
        let mut rows = Vec::new();
        let mut cells = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != headers.len() {
                return Err(HarnessError::Matrix(format!("ragged row for {}", rec.get(0).unwrap_or("?"))));
            }
            rows.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map(|mean| ScoreCell {
                            mean,
                            std: 0.0,
                            runs: 1,
                            short: false,
                        })
                        .map_err(|_| HarnessError::Matrix(format!("bad number `{v}` in row {}", &rec[0])))
                })
                .collect::<Result<Vec<_>, _>>()?;
            cells.push(row);
        }
        if rows.is_empty() {
            return Err(HarnessError::Matrix("no game rows".into()));
        }
        Ok(ScoreMatrix { rows, columns, cells })
    }

    pub fn from_csv_str(text: &str) -> Result<Self, HarnessError> {
        Self::from_csv(text.as_bytes())
    }

    /// Cell means, one row per game, header of agent labels.
    pub fn to_csv(&self) -> String {
        self.write_csv(|c| c.mean)
    }

    /// Same layout as [`ScoreMatrix::to_csv`] with standard deviations.
    pub fn std_csv(&self) -> String {
        self.write_csv(|c| c.std)
    }

    fn write_csv(&self, value: impl Fn(&ScoreCell) -> f64) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["game".to_string()];
        header.extend(self.columns.iter().map(|c| c.to_string()));
        w.write_record(&header).expect("in-memory write");
        for (game, row) in self.rows.iter().zip(&self.cells) {
            let mut rec = vec![game.clone()];
            rec.extend(row.iter().map(|c| value(c).to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

/// Cell = mean over seeds of each run's mean over its last 50 complete
/// episodes. Every (world, agent) pair present must have a run for every
/// seed present.
pub fn aggregate_scores(logs: &[RunLog]) -> Result<ScoreMatrix, HarnessError> {
    if logs.is_empty() {
        return Err(HarnessError::Matrix("no runs to aggregate".into()));
    }
    let worlds: BTreeSet<&str> = logs.iter().map(|l| l.world.as_str()).collect();
    let agents: BTreeSet<AgentLabel> = logs.iter().map(|l| l.agent).collect();
    let seeds: BTreeSet<u64> = logs.iter().map(|l| l.seed).collect();
    let mut by_cell: BTreeMap<(&str, AgentLabel, u64), &RunLog> = BTreeMap::new();
    for l in logs {
        if by_cell.insert((l.world.as_str(), l.agent, l.seed), l).is_some() {
            return Err(HarnessError::Matrix(format!(
                "duplicate run for {}/{}/seed {}",
                l.world, l.agent, l.seed
            )));
        }
    }
    let mut columns: Vec<AgentLabel> = agents.into_iter().collect();
    columns.sort_by_key(|l| l.ordinal());
    let mut cells = Vec::new();
    for &w in &worlds {
        let mut row = Vec::new();
        for &a in &columns {
            let mut means = Vec::new();
            let mut short = false;
            for &s in &seeds {
                let log = by_cell.get(&(w, a, s)).ok_or_else(|| HarnessError::MissingCell {
                    world: w.to_string(),
                    agent: a.to_string(),
                })?;
                let mut scores = log.last_scores(SCORE_WINDOW);
                if scores.len() < SCORE_WINDOW {
                    short = true;
                }
                if scores.is_empty() {
                    scores = log.episodes.iter().map(|e| e.score).collect();
                }
                if scores.is_empty() {
                    return Err(HarnessError::MissingCell {
                        world: w.to_string(),
                        agent: a.to_string(),
                    });
                }
                means.push(scores.iter().sum::<i64>() as f64 / scores.len() as f64);
            }
            let n = means.len() as f64;
            let mean = means.iter().sum::<f64>() / n;
            let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n;
            row.push(ScoreCell {
                mean,
                std: var.sqrt(),
                runs: means.len(),
                short,
            });
        }
        cells.push(row);
    }
    Ok(ScoreMatrix {
        rows: worlds.into_iter().map(String::from).collect(),
        columns,
        cells,
    })
}
