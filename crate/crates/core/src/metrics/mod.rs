//! BLEU and CodeBLEU over lexeme streams and syntax trees.

mod bleu;
mod codebleu;
mod delta;

use thiserror::Error;

pub use bleu::{
    bleu, bleu_stats, corpus_bleu, score_stats, BleuBreakdown, BleuConfig, BleuStats, BrevityMode, Smoothing,
};
pub use codebleu::{
    ast_match, codebleu, corpus_score, corpus_score_detailed, dataflow_match, weighted_unigram_stats,
    write_debug_jsonl, CodeBleuWeights, MetricReport, PairRecord, SubScores, WeightedStats, AGGREGATION,
    EMPTY_DATAFLOW_CONVENTION, KEYWORD_WEIGHT, OTHER_WEIGHT,
};
pub use delta::{format_delta, relative_change, relative_delta};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("reference has no tokens")]
    EmptyReference,
    #[error("reference of pair {0} has no tokens")]
    EmptyReferenceAt(usize),
    #[error("no pairs to score")]
    EmptyCorpus,
    #[error("relative change needs a positive base score, got {0}")]
    NonPositiveBase(f64),
    #[error("invalid CodeBLEU weights: {0}")]
    InvalidWeights(String),
    #[error("invalid BLEU configuration: {0}")]
    InvalidConfig(String),
}
