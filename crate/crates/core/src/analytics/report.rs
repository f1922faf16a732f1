//! Aligned plain-text tables.

use std::fmt;

use super::criteria::CriteriaResult;
use super::TraitMatrix;
use crate::harness::{AgentLabel, Direction};
use crate::personality::TraitId;

#[derive(Debug, Clone, Default)]
pub struct TextTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        TextTable {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }
}

impl fmt::Display for TextTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols = self.rows.iter().map(Vec::len).chain([self.header.len()]).max().unwrap_or(0);
        let mut width = vec![0; cols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (i, c) in r.iter().enumerate() {
                width[i] = width[i].max(c.chars().count());
            }
        }
        for r in std::iter::once(&self.header).chain(&self.rows) {
            let line: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = width[i]) } else { format!("{c:>w$}", w = width[i]) })
                .collect();
            writeln!(f, "{}", line.join("  ").trim_end())?;
        }
        Ok(())
    }
}

pub fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

/// Avg, Cnt and Diff rows with one column per agent.
pub fn criteria_table(c: &CriteriaResult) -> TextTable {
    let labels = AgentLabel::all();
    let mut t = TextTable::new(std::iter::once(String::new()).chain(labels.iter().map(|l| l.to_string())));
    let np_avg = c.traits.values().next().map_or(0.0, |x| x.avg_np);
    let mut avg = vec!["Avg.".to_string()];
    let mut cnt = vec!["Cnt.".to_string()];
    let mut diff = vec!["Diff.".to_string()];
    for l in &labels {
        match l {
            AgentLabel::Np => {
                avg.push(format!("{np_avg:.2}"));
                cnt.push("-".into());
                diff.push("-".into());
            }
            AgentLabel::Guided(tr, d) => {
                let x = &c.traits[tr];
                let (a, n) = match d {
                    Direction::Up => (x.avg_up, x.cnt),
                    Direction::Down => (x.avg_down, x.cnt_down),
                };
                avg.push(format!("{a:.2}"));
                cnt.push(n.to_string());
                diff.push(if *d == Direction::Up { format!("{:+.2}", x.diff) } else { String::new() });
            }
        }
    }
    t.row(avg);
    t.row(cnt);
    t.row(diff);
    t
}

pub fn correlation_table(m: &TraitMatrix) -> TextTable {
    let mut t = TextTable::new(std::iter::once(String::new()).chain(TraitId::ALL.iter().map(|x| x.abbr().to_string())));
    for a in TraitId::ALL {
        let mut row = vec![a.abbr().to_string()];
        row.extend(TraitId::ALL.iter().map(|b| fmt_opt(m[a.index()][b.index()], 2)));
        t.row(row);
    }
    t
}
