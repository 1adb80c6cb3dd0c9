use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;
use serde::{Deserialize, Serialize};

use super::config::{strategy_title, UNSHUFFLED};
use super::report::RunReport;
use crate::perturb::Strategy;
use crate::{Error, Result};

/// Aggregate Kendall per (perturbation row, model column).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub dataset: String,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    /// `cells[row][column]`.
    pub cells: Vec<Vec<Option<f64>>>,
    /// Row index of the maximum of each column (first on ties).
    pub best: Vec<Option<usize>>,
}

fn row_rank(label: &str) -> usize {
    if label == UNSHUFFLED {
        return 0;
    }
    Strategy::ALL
        .iter()
        .position(|&s| strategy_title(s) == label)
        .map_or(Strategy::ALL.len() + 1, |i| i + 1)
}

impl ComparisonTable {
    /// Rows follow the order unshuffled, flip, fixed segment, intra shot,
    /// neighbouring shot, any shot, then other labels alphabetically.
    /// Columns keep first-appearance order.
    pub fn from_reports(reports: &[RunReport]) -> Result<Self> {
        let first = reports.first().ok_or(Error::Empty("comparison table"))?;
        if let Some(other) = reports.iter().find(|r| r.dataset != first.dataset) {
            return Err(Error::DatasetMismatch(
                first.dataset.clone(),
                other.dataset.clone(),
            ));
        }
        let mut rows: Vec<String> = Vec::new();
        let mut columns: Vec<String> = Vec::new();
        for r in reports {
            if !rows.contains(&r.perturbation) {
                rows.push(r.perturbation.clone());
            }
            if !columns.contains(&r.model) {
                columns.push(r.model.clone());
            }
        }
        rows.sort_by(|a, b| row_rank(a).cmp(&row_rank(b)).then_with(|| a.cmp(b)));
        let mut cells = vec![vec![None; columns.len()]; rows.len()];
        for r in reports {
            let i = rows
                .iter()
                .position(|x| *x == r.perturbation)
                .unwrap_or_default();
            let j = columns
                .iter()
                .position(|x| *x == r.model)
                .unwrap_or_default();
            if cells[i][j].is_some() {
                return Err(Error::InvalidConfig(format!(
                    "two reports for row {:?} and column {:?}",
                    r.perturbation, r.model
                )));
            }
            cells[i][j] = Some(r.aggregate_kendall);
        }
        let best = (0..columns.len())
            .map(|j| {
                let mut arg: Option<(usize, f64)> = None;
                for (i, row) in cells.iter().enumerate() {
                    if let Some(v) = row[j] {
                        if arg.is_none_or(|(_, b)| v > b) {
                            arg = Some((i, v));
                        }
                    }
                }
                arg.map(|(i, _)| i)
            })
            .collect();
        Ok(Self {
            dataset: first.dataset.clone(),
            rows,
            columns,
            cells,
            best,
        })
    }

    fn cell(&self, i: usize, j: usize) -> String {
        match self.cells[i][j] {
            Some(v) if self.best[j] == Some(i) => format!("{v:.3}*"),
            Some(v) => format!("{v:.3}"),
            None => String::from("-"),
        }
    }

    /// Comma-separated table; the best cell of each column carries a `*`.
    pub fn to_csv(&self) -> String {
        let quote = |s: &str| {
            if s.contains([',', '"']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                String::from(s)
            }
        };
        let mut out = String::from("perturbation");
        for c in &self.columns {
            out.push(',');
            out.push_str(&quote(c));
        }
        out.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            out.push_str(&quote(r));
            for j in 0..self.columns.len() {
                out.push(',');
                out.push_str(&self.cell(i, j));
            }
            out.push('\n');
        }
        out
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let body: Vec<Vec<String>> = (0..self.rows.len())
            .map(|i| (0..self.columns.len()).map(|j| self.cell(i, j)).collect())
            .collect();
        let first = self
            .rows
            .iter()
            .map(|r| r.chars().count())
            .chain([12])
            .max()
            .unwrap_or(12);
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| {
                body.iter()
                    .map(|r| r[j].len())
                    .chain([c.chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{:<first$}", "Perturbation");
        for (c, w) in self.columns.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
        for (r, cells) in self.rows.iter().zip(&body) {
            let _ = write!(out, "{r:<first$}");
            for (c, w) in cells.iter().zip(&widths) {
                let _ = write!(out, "  {c:>w$}");
            }
            out.push('\n');
        }
        out
    }
}
