use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrevityMode {
    /// 1 when the candidate is longer than the reference, otherwise the
    /// length ratio c/r.
    #[default]
    #[serde(alias = "paper-ratio")]
    PaperRatio,
    /// exp(1 - r/c) for short candidates.
    Standard,
}

impl BrevityMode {
    pub fn penalty(self, candidate_len: u64, reference_len: u64) -> f64 {
        if candidate_len > reference_len {
            return 1.0;
        }
        if candidate_len == 0 {
            return 0.0;
        }
        let (c, r) = (candidate_len as f64, reference_len as f64);
        match self {
            BrevityMode::PaperRatio => c / r,
            BrevityMode::Standard => (1.0 - r / c).exp(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BrevityMode::PaperRatio => "paper_ratio",
            BrevityMode::Standard => "standard",
        }
    }
}

impl fmt::Display for BrevityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BrevityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "paper_ratio" | "paper" | "ratio" => Ok(BrevityMode::PaperRatio),
            "standard" | "exp" => Ok(BrevityMode::Standard),
            other => Err(format!("unknown brevity mode `{other}` (expected paper-ratio or standard)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    /// Zero match counts for n >= 2 become (0 + 1) / (total + 1).
    #[default]
    AddOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_n: usize,
    #[serde(default)]
    pub brevity_mode: BrevityMode,
    /// Applies to sentence-level [`bleu`] only; corpus scores never smooth.
    #[serde(default)]
    pub smoothing: Smoothing,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_n: 4,
            brevity_mode: BrevityMode::PaperRatio,
            smoothing: Smoothing::AddOne,
        }
    }
}

impl BleuConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.max_n == 0 {
            return Err(MetricsError::InvalidConfig("max_n must be at least 1".into()));
        }
        Ok(())
    }
}

/// Clipped n-gram matches and candidate n-gram totals per order, plus
/// lengths. Adding stats of several pairs gives corpus-level counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub candidate_len: u64,
    pub reference_len: u64,
}

impl BleuStats {
    pub fn empty(max_n: usize) -> Self {
        BleuStats {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            candidate_len: 0,
            reference_len: 0,
        }
    }

    pub fn add(&mut self, other: &BleuStats) {
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

pub fn bleu_stats<T: Eq + Hash>(candidate: &[T], reference: &[T], max_n: usize) -> BleuStats {
    let mut stats = BleuStats::empty(max_n);
    stats.candidate_len = candidate.len() as u64;
    stats.reference_len = reference.len() as u64;
    for n in 1..=max_n {
        let cand = ngram_counts(candidate, n);
        let refs = ngram_counts(reference, n);
        stats.totals[n - 1] = cand.values().sum();
        stats.matches[n - 1] = cand
            .iter()
            .map(|(g, c)| (*c).min(refs.get(g).copied().unwrap_or(0)))
            .sum();
    }
    stats
}

/// Score components, with `score` on the 0..=100 scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuBreakdown {
    pub score: f64,
    pub brevity_penalty: f64,
    pub precisions: Vec<f64>,
}

pub fn score_stats(stats: &BleuStats, mode: BrevityMode, smoothing: Smoothing) -> BleuBreakdown {
    let bp = mode.penalty(stats.candidate_len, stats.reference_len);
    let precisions: Vec<f64> = stats
        .matches
        .iter()
        .zip(&stats.totals)
        .enumerate()
        .map(|(i, (&m, &t))| {
            if m > 0 {
                m as f64 / t as f64
            } else if i >= 1 && smoothing == Smoothing::AddOne {
                1.0 / (t as f64 + 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let score = if stats.candidate_len == 0 || precisions.iter().any(|p| *p == 0.0) {
        0.0
    } else {
        let mean_log = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
        100.0 * bp * mean_log.exp()
    };
    BleuBreakdown {
        score,
        brevity_penalty: bp,
        precisions,
    }
}

/// Sentence-level BLEU on the 0..=100 scale.
pub fn bleu<T: Eq + Hash>(candidate: &[T], reference: &[T], config: &BleuConfig) -> Result<f64, MetricsError> {
    config.validate()?;
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let stats = bleu_stats(candidate, reference, config.max_n);
    Ok(score_stats(&stats, config.brevity_mode, config.smoothing).score)
}

/// Corpus-level BLEU: counts and lengths are summed over pairs before one
/// precision set and one brevity penalty are computed. No smoothing.
pub fn corpus_bleu<T: Eq + Hash>(pairs: &[(&[T], &[T])], config: &BleuConfig) -> Result<BleuBreakdown, MetricsError> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut total = BleuStats::empty(config.max_n);
    for (cand, reference) in pairs {
        if reference.is_empty() {
            return Err(MetricsError::EmptyReference);
        }
        total.add(&bleu_stats(cand, reference, config.max_n));
    }
    Ok(score_stats(&total, config.brevity_mode, Smoothing::None))
}
