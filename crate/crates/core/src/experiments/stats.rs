use std::fmt;

use serde::{Deserialize, Serialize};

use super::pipeline::RoundResult;
use super::ExperimentError;
use crate::metrics::{format_delta, relative_change, MetricReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
    /// Sample standard deviation (n - 1 divisor); 0 for a single value.
    pub std: f64,
    pub n: usize,
}

pub fn summarize(values: &[f64]) -> Result<StatSummary, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::NoRounds);
    }
    let n = values.len();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let avg = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(StatSummary { min, max, avg, std, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub bleu: StatSummary,
    pub codebleu: StatSummary,
}

pub fn summarize_rounds(results: &[RoundResult]) -> Result<RoundStats, ExperimentError> {
    let bleu: Vec<f64> = results.iter().map(|r| r.report.bleu).collect();
    let codebleu: Vec<f64> = results.iter().map(|r| r.report.codebleu).collect();
    Ok(RoundStats {
        bleu: summarize(&bleu)?,
        codebleu: summarize(&codebleu)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    Bleu,
    CodeBleu,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Bleu => "BLEU",
            Metric::CodeBleu => "CodeBLEU",
        })
    }
}

/// BLEU and CodeBLEU of one table row, on the 0..=100 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub bleu: f64,
    pub codebleu: f64,
}

impl ScorePair {
    pub fn new(bleu: f64, codebleu: f64) -> Self {
        ScorePair { bleu, codebleu }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Bleu => self.bleu,
            Metric::CodeBleu => self.codebleu,
        }
    }
}

impl From<&MetricReport> for ScorePair {
    fn from(r: &MetricReport) -> Self {
        ScorePair::new(r.bleu, r.codebleu)
    }
}

/// A delta string as printed somewhere else, to be checked against the
/// formula.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedDelta {
    pub label: String,
    pub metric: Metric,
    pub printed: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub scores: ScorePair,
    /// None on the baseline row.
    pub bleu_delta: Option<String>,
    pub codebleu_delta: Option<String>,
    /// Disagreements with published delta strings.
    pub notes: Vec<String>,
}

impl ComparisonRow {
    pub fn delta(&self, metric: Metric) -> Option<&str> {
        match metric {
            Metric::Bleu => self.bleu_delta.as_deref(),
            Metric::CodeBleu => self.codebleu_delta.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, label: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Adds delta strings against `baseline` to every other row. Published
/// strings that disagree with the computed value are kept as notes; the
/// computed value is what the table shows.
pub fn compare(
    rows: &[(String, ScorePair)],
    baseline: &str,
    published: &[PublishedDelta],
) -> Result<ComparisonTable, ExperimentError> {
    let base = rows
        .iter()
        .find(|(label, _)| label == baseline)
        .map(|(_, s)| *s)
        .ok_or_else(|| ExperimentError::MissingBaseline(baseline.to_string()))?;
    let mut out = Vec::with_capacity(rows.len());
    for (label, scores) in rows {
        let mut row = ComparisonRow {
            label: label.clone(),
            scores: *scores,
            bleu_delta: None,
            codebleu_delta: None,
            notes: Vec::new(),
        };
        if label != baseline {
            for metric in [Metric::Bleu, Metric::CodeBleu] {
                let delta = format_delta(relative_change(scores.get(metric), base.get(metric))?);
                for p in published.iter().filter(|p| &p.label == label && p.metric == metric) {
                    if p.printed != delta {
                        row.notes.push(format!(
                            "{metric}: published {} but ({:.2} - {:.2}) / {:.2} gives {delta}",
                            p.printed,
                            scores.get(metric),
                            base.get(metric),
                            base.get(metric)
                        ));
                    }
                }
                match metric {
                    Metric::Bleu => row.bleu_delta = Some(delta),
                    Metric::CodeBleu => row.codebleu_delta = Some(delta),
                }
            }
        }
        out.push(row);
    }
    Ok(ComparisonTable {
        baseline: baseline.to_string(),
        rows: out,
    })
}
