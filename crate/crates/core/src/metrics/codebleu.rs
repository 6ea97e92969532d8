use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bleu::{bleu_stats, score_stats, BleuConfig, BleuStats, BrevityMode, Smoothing};
use super::MetricsError;
use crate::code_analysis::{ast_subtrees, dataflow_edges, CodeUnit, Keywords};

pub const KEYWORD_WEIGHT: f64 = 1.0;
pub const OTHER_WEIGHT: f64 = 0.2;

/// Recorded in every report so readers know how sub-scores were combined.
pub const AGGREGATION: &str =
    "ngram and weighted_ngram: corpus-level counts; ast_match and dataflow_match: per-pair macro-average";
pub const EMPTY_DATAFLOW_CONVENTION: &str = "dataflow_match = 1.0 when the reference has no def-use edges";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeBleuWeights {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub ast: f64,
    pub dataflow: f64,
}

impl Default for CodeBleuWeights {
    fn default() -> Self {
        CodeBleuWeights {
            ngram: 0.25,
            weighted_ngram: 0.25,
            ast: 0.25,
            dataflow: 0.25,
        }
    }
}

impl CodeBleuWeights {
    pub fn new(ngram: f64, weighted_ngram: f64, ast: f64, dataflow: f64) -> Result<Self, MetricsError> {
        let w = CodeBleuWeights {
            ngram,
            weighted_ngram,
            ast,
            dataflow,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let all = [self.ngram, self.weighted_ngram, self.ast, self.dataflow];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(MetricsError::InvalidWeights(format!("{all:?} has a negative or non-finite weight")));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(MetricsError::InvalidWeights(format!("{all:?} sums to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn combine(&self, s: &SubScores) -> f64 {
        self.ngram * s.ngram + self.weighted_ngram * s.weighted_ngram + self.ast * s.ast_match
            + self.dataflow * s.dataflow_match
    }
}

impl fmt::Display for CodeBleuWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.ngram, self.weighted_ngram, self.ast, self.dataflow)
    }
}

/// Four comma-separated weights: ngram, weighted ngram, ast, dataflow.
impl FromStr for CodeBleuWeights {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| MetricsError::InvalidWeights(format!("`{s}`: {e}")))?;
        match parts.as_slice() {
            [a, b, c, d] => CodeBleuWeights::new(*a, *b, *c, *d),
            _ => Err(MetricsError::InvalidWeights(format!("`{s}` needs exactly four weights"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SubScores {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub ast_match: f64,
    pub dataflow_match: f64,
}

/// Keyword-weighted clipped unigram counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightedStats {
    pub matched: f64,
    pub total: f64,
}

impl WeightedStats {
    fn add(&mut self, other: &WeightedStats) {
        self.matched += other.matched;
        self.total += other.total;
    }

    fn precision(&self) -> f64 {
        if self.total > 0.0 {
            self.matched / self.total
        } else {
            0.0
        }
    }
}

pub fn weighted_unigram_stats(candidate: &[&str], reference: &[&str], keywords: &Keywords) -> WeightedStats {
    let mut cand: HashMap<&str, u64> = HashMap::new();
    for t in candidate {
        *cand.entry(t).or_insert(0) += 1;
    }
    let mut refs: HashMap<&str, u64> = HashMap::new();
    for t in reference {
        *refs.entry(t).or_insert(0) += 1;
    }
    // Integer counts per weight class keep the result independent of map order.
    let (mut kw_total, mut kw_matched, mut other_total, mut other_matched) = (0u64, 0u64, 0u64, 0u64);
    for (tok, count) in cand {
        let clipped = count.min(refs.get(tok).copied().unwrap_or(0));
        if keywords.contains(tok) {
            kw_total += count;
            kw_matched += clipped;
        } else {
            other_total += count;
            other_matched += clipped;
        }
    }
    WeightedStats {
        matched: KEYWORD_WEIGHT * kw_matched as f64 + OTHER_WEIGHT * other_matched as f64,
        total: KEYWORD_WEIGHT * kw_total as f64 + OTHER_WEIGHT * other_total as f64,
    }
}

pub fn ast_match(candidate: &CodeUnit, reference: &CodeUnit) -> f64 {
    let reference = ast_subtrees(reference);
    if reference.total() == 0 {
        return 1.0;
    }
    let candidate = ast_subtrees(candidate);
    reference.intersection_size(&candidate) as f64 / reference.total() as f64
}

pub fn dataflow_match(candidate: &CodeUnit, reference: &CodeUnit) -> f64 {
    let reference = dataflow_edges(reference);
    if reference.is_empty() {
        return 1.0;
    }
    let candidate = dataflow_edges(candidate);
    reference.intersection(&candidate).count() as f64 / reference.len() as f64
}

/// Everything computed for one pair. Serialized as one debug-dump line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub index: usize,
    pub bleu_stats: BleuStats,
    pub weighted: WeightedStats,
    pub brevity_penalty: f64,
    pub precisions: Vec<f64>,
    pub sub_scores: SubScores,
    /// Sub-scores of this pair alone, combined, on the 0..=100 scale.
    pub codebleu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu: f64,
    pub codebleu: f64,
    pub sub_scores: SubScores,
    pub n_pairs: usize,
    pub weights: CodeBleuWeights,
    pub brevity_mode: BrevityMode,
    pub max_n: usize,
    /// Corpus brevity penalty under both modes; they differ whenever the
    /// candidates are shorter than the references overall.
    pub bp_paper_ratio: f64,
    pub bp_standard: f64,
    pub bp_modes_diverge: bool,
    pub aggregation: String,
    pub empty_dataflow: String,
}

fn pair_stats(
    index: usize,
    candidate: &CodeUnit,
    reference: &CodeUnit,
    config: &BleuConfig,
    weights: &CodeBleuWeights,
    keywords: &Keywords,
) -> PairRecord {
    let cand = candidate.lexemes();
    let refs = reference.lexemes();
    let stats = bleu_stats(&cand, &refs, config.max_n);
    let weighted = weighted_unigram_stats(&cand, &refs, keywords);
    let breakdown = score_stats(&stats, config.brevity_mode, Smoothing::None);
    let sub_scores = SubScores {
        ngram: breakdown.score / 100.0,
        weighted_ngram: breakdown.brevity_penalty * weighted.precision(),
        ast_match: ast_match(candidate, reference),
        dataflow_match: dataflow_match(candidate, reference),
    };
    PairRecord {
        index,
        bleu_stats: stats,
        weighted,
        brevity_penalty: breakdown.brevity_penalty,
        precisions: breakdown.precisions,
        codebleu: 100.0 * weights.combine(&sub_scores),
        sub_scores,
    }
}

/// Scores one candidate against one reference. Equal to [`corpus_score`]
/// on a single pair.
pub fn codebleu(
    candidate: &CodeUnit,
    reference: &CodeUnit,
    config: &BleuConfig,
    weights: &CodeBleuWeights,
    keywords: &Keywords,
) -> Result<MetricReport, MetricsError> {
    corpus_score(&[(candidate, reference)], config, weights, keywords)
}

pub fn corpus_score(
    pairs: &[(&CodeUnit, &CodeUnit)],
    config: &BleuConfig,
    weights: &CodeBleuWeights,
    keywords: &Keywords,
) -> Result<MetricReport, MetricsError> {
    corpus_score_detailed(pairs, config, weights, keywords).map(|(report, _)| report)
}

/// Corpus score plus the per-pair records behind it.
pub fn corpus_score_detailed(
    pairs: &[(&CodeUnit, &CodeUnit)],
    config: &BleuConfig,
    weights: &CodeBleuWeights,
    keywords: &Keywords,
) -> Result<(MetricReport, Vec<PairRecord>), MetricsError> {
    config.validate()?;
    weights.validate()?;
    if pairs.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    if let Some(i) = pairs.iter().position(|(_, r)| r.lexemes().is_empty()) {
        return Err(MetricsError::EmptyReferenceAt(i));
    }
    let records: Vec<PairRecord> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (c, r))| pair_stats(i, c, r, config, weights, keywords))
        .collect();

    let mut stats = BleuStats::empty(config.max_n);
    let mut weighted = WeightedStats::default();
    let (mut ast, mut dataflow) = (0.0, 0.0);
    for rec in &records {
        stats.add(&rec.bleu_stats);
        weighted.add(&rec.weighted);
        ast += rec.sub_scores.ast_match;
        dataflow += rec.sub_scores.dataflow_match;
    }
    let n = records.len() as f64;
    let breakdown = score_stats(&stats, config.brevity_mode, Smoothing::None);
    let sub_scores = SubScores {
        ngram: breakdown.score / 100.0,
        weighted_ngram: breakdown.brevity_penalty * weighted.precision(),
        ast_match: ast / n,
        dataflow_match: dataflow / n,
    };
    let bp_paper_ratio = BrevityMode::PaperRatio.penalty(stats.candidate_len, stats.reference_len);
    let bp_standard = BrevityMode::Standard.penalty(stats.candidate_len, stats.reference_len);
    let report = MetricReport {
        bleu: breakdown.score,
        codebleu: 100.0 * weights.combine(&sub_scores),
        sub_scores,
        n_pairs: records.len(),
        weights: *weights,
        brevity_mode: config.brevity_mode,
        max_n: config.max_n,
        bp_paper_ratio,
        bp_standard,
        bp_modes_diverge: (bp_paper_ratio - bp_standard).abs() > 1e-12,
        aggregation: AGGREGATION.to_string(),
        empty_dataflow: EMPTY_DATAFLOW_CONVENTION.to_string(),
    };
    Ok((report, records))
}

/// One JSON object per line.
pub fn write_debug_jsonl<W: std::io::Write>(records: &[PairRecord], mut out: W) -> std::io::Result<()> {
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
