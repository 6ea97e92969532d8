//! Experiment plans, the generate-and-score pipeline, multi-round
//! statistics and comparison reports.

mod artifacts;
mod pipeline;
mod report;
mod stats;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use artifacts::{
    load_pair_dir, load_run_dir, persist_round, read_round_report, round_dirs, write_pair_dir, PairFile, RoundReport, RunDir,
    INSTANCES_FILE, PAIRS_DIR, REPORT_FILE, SKIPPED_FILE, TRANSCRIPTS_FILE,
};
pub use pipeline::{
    open_backend, prepare_behaviours, run, InstanceRecord, RoundResult, RunInputs, SkipRecord,
};
pub use report::{comparison_csv, comparison_markdown, metric_csv, metric_markdown, rounds_csv, rounds_markdown, ReportHeader};
pub use stats::{
    compare, summarize, summarize_rounds, ComparisonRow, ComparisonTable, Metric, PublishedDelta, RoundStats,
    ScorePair, StatSummary,
};

use crate::code_analysis::{AnalysisError, Keywords, Language};
use crate::corpus::{self, CorpusError, TaskInstance, TaskKind};
use crate::llm_gateway::{BackendConfig, BackendError, GatewayError, SessionMode, SessionPolicy};
use crate::metrics::{BleuConfig, BrevityMode, CodeBleuWeights, MetricsError, Smoothing};
use crate::prompt_forge::{PromptError, PromptVariant, TemplateSet};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("replay fixtures have no response for instance {instance} (request key {key})")]
    ReplayMiss { instance: String, key: String },
    #[error("round {round}: every instance was skipped")]
    AllSkipped { round: u32 },
    #[error("no rounds to summarize")]
    NoRounds,
    #[error("baseline `{0}` is not among the rows")]
    MissingBaseline(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed pair files: {}", .0.join(", "))]
    MalformedPairs(Vec<String>),
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        ExperimentError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    /// Talk to the HTTP endpoint.
    Live,
    /// Talk to the endpoint and store every outcome in the fixture store.
    Record,
    /// Serve only stored responses.
    Replay,
}

impl std::str::FromStr for BackendMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "live" => Ok(BackendMode::Live),
            "record" => Ok(BackendMode::Record),
            "replay" => Ok(BackendMode::Replay),
            other => Err(format!("unknown backend mode `{other}` (expected live, record or replay)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviourSource {
    /// Parse the ground truth.
    #[default]
    Static,
    /// Ask the model with the extraction prompts.
    Llm,
}

impl std::str::FromStr for BehaviourSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "static" => Ok(BehaviourSource::Static),
            "llm" => Ok(BehaviourSource::Llm),
            other => Err(format!("unknown behaviour source `{other}` (expected static or llm)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRef {
    /// Canonical text-to-code JSONL file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2c: Option<PathBuf>,
    /// Parallel code-to-code files, one snippet per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2c_source: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2c_target: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSection {
    pub mode: BackendMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<PathBuf>,
    #[serde(flatten)]
    pub connection: BackendConfig,
}

impl Default for BackendSection {
    fn default() -> Self {
        BackendSection {
            mode: BackendMode::Replay,
            fixtures: None,
            connection: BackendConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub max_n: usize,
    pub brevity_mode: BrevityMode,
    pub weights: CodeBleuWeights,
    /// Replacement keyword list for the weighted n-gram component.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keywords: Option<PathBuf>,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            max_n: 4,
            brevity_mode: BrevityMode::PaperRatio,
            weights: CodeBleuWeights::default(),
            keywords: None,
        }
    }
}

impl MetricsSection {
    pub fn bleu_config(&self) -> BleuConfig {
        BleuConfig {
            max_n: self.max_n,
            brevity_mode: self.brevity_mode,
            smoothing: Smoothing::AddOne,
        }
    }

    pub fn keywords(&self) -> Result<Keywords, ExperimentError> {
        match &self.keywords {
            Some(path) => Ok(Keywords::from_file(path)?),
            None => Ok(Keywords::builtin(Language::Java)),
        }
    }
}

fn one() -> u32 {
    1
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub task: TaskKind,
    pub variant: PromptVariant,
    #[serde(default)]
    pub policy: SessionPolicy,
    #[serde(default = "one")]
    pub rounds: u32,
    pub corpus: CorpusRef,
    /// Draw this many instances (seeded) instead of using the whole corpus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub backend: BackendSection,
    #[serde(default)]
    pub behaviour_source: BehaviourSource,
    #[serde(default)]
    pub metrics: MetricsSection,
    /// Worker cap for individual-session dispatch; 0 lets the pool decide.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates: Option<PathBuf>,
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let plan: ExperimentPlan = toml::from_str(text).map_err(|e| ExperimentError::Plan(e.to_string()))?;
        Ok(plan)
    }

    /// Reads a plan file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        let mut plan = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            plan.rebase(base);
        }
        Ok(plan)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.corpus.t2c);
        fix(&mut self.corpus.c2c_source);
        fix(&mut self.corpus.c2c_target);
        fix(&mut self.backend.fixtures);
        fix(&mut self.metrics.keywords);
        fix(&mut self.templates);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plan serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Plan(m.to_string()));
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        match self.task {
            TaskKind::T2C if self.corpus.t2c.is_none() => return bad("t2c task needs corpus.t2c"),
            TaskKind::C2C if self.corpus.c2c_source.is_none() || self.corpus.c2c_target.is_none() => {
                return bad("c2c task needs corpus.c2c_source and corpus.c2c_target")
            }
            _ => {}
        }
        if self.sample == Some(0) {
            return bad("sample must be positive");
        }
        if matches!(self.backend.mode, BackendMode::Replay | BackendMode::Record) && self.backend.fixtures.is_none() {
            return bad("replay and record modes need backend.fixtures");
        }
        if self.policy.mode == SessionMode::Continuous && self.policy.max_prompts_per_session == 0 {
            return bad("max_prompts_per_session must be positive");
        }
        self.metrics.bleu_config().validate()?;
        self.metrics.weights.validate()?;
        Ok(())
    }

    /// Loads (and samples) the corpus named by the plan.
    pub fn load_corpus(&self) -> Result<Vec<TaskInstance>, ExperimentError> {
        let all = match self.task {
            TaskKind::T2C => corpus::load_t2c(self.corpus.t2c.as_ref().ok_or(ExperimentError::EmptyCorpus)?)?,
            TaskKind::C2C => corpus::load_c2c(
                self.corpus.c2c_source.as_ref().ok_or(ExperimentError::EmptyCorpus)?,
                self.corpus.c2c_target.as_ref().ok_or(ExperimentError::EmptyCorpus)?,
            )?,
        };
        if all.is_empty() {
            return Err(ExperimentError::EmptyCorpus);
        }
        match self.sample {
            Some(n) => Ok(corpus::sample(&all, n, self.seed)?),
            None => Ok(all),
        }
    }

    pub fn templates(&self) -> Result<TemplateSet, ExperimentError> {
        match &self.templates {
            Some(path) => Ok(TemplateSet::from_override_file(path)?),
            None => Ok(TemplateSet::default()),
        }
    }

    /// Baseline name such as `ChatGPT-behaviour-CS`.
    pub fn label(&self) -> String {
        variant_label(self.variant, self.policy)
    }
}

/// `ChatGPT-<level>` plus `-C` for concise, `S` for a continuous session.
pub fn variant_label(variant: PromptVariant, policy: SessionPolicy) -> String {
    let mut suffix = String::new();
    if variant.concise {
        suffix.push('C');
    }
    if policy.mode == SessionMode::Continuous {
        suffix.push('S');
    }
    if suffix.is_empty() {
        format!("ChatGPT-{}", variant.level)
    } else {
        format!("ChatGPT-{}-{suffix}", variant.level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt_forge::Level;

    const PLAN: &str = r#"
task = "t2c"
rounds = 5
seed = 7
sample = 3

[variant]
level = "behaviour"
concise = true

[policy]
mode = "continuous"
max_prompts_per_session = 2

[corpus]
t2c = "corpus.jsonl"

[backend]
mode = "replay"
fixtures = "fx"
model_name = "m"

[metrics]
brevity_mode = "standard"
"#;

    #[test]
    fn parses_plan() {
        let plan = ExperimentPlan::from_toml(PLAN).unwrap();
        assert_eq!(plan.variant, PromptVariant::new(Level::Behaviour, true));
        assert_eq!(plan.policy, SessionPolicy::continuous(2));
        assert_eq!(plan.rounds, 5);
        assert_eq!(plan.backend.connection.model_name, "m");
        assert_eq!(plan.metrics.brevity_mode, BrevityMode::Standard);
        assert_eq!(plan.metrics.max_n, 4);
        plan.validate().unwrap();
        assert_eq!(plan.label(), "ChatGPT-behaviour-CS");
        let again = ExperimentPlan::from_toml(&plan.to_toml()).unwrap();
        assert_eq!(again, plan);
    }

    #[test]
    fn rebases_relative_paths() {
        let mut plan = ExperimentPlan::from_toml(PLAN).unwrap();
        plan.rebase(Path::new("/data/demo"));
        assert_eq!(plan.corpus.t2c.as_deref(), Some(Path::new("/data/demo/corpus.jsonl")));
        assert_eq!(plan.backend.fixtures.as_deref(), Some(Path::new("/data/demo/fx")));
    }

    #[test]
    fn validation() {
        let mut plan = ExperimentPlan::from_toml(PLAN).unwrap();
        plan.rounds = 0;
        assert!(plan.validate().is_err());
        let mut plan = ExperimentPlan::from_toml(PLAN).unwrap();
        plan.backend.fixtures = None;
        assert!(plan.validate().is_err());
        let mut plan = ExperimentPlan::from_toml(PLAN).unwrap();
        plan.task = TaskKind::C2C;
        assert!(plan.validate().is_err());
        assert!(ExperimentPlan::from_toml("task = \"t2c\"\nbogus = 1").is_err());
    }

    #[test]
    fn labels() {
        let ind = SessionPolicy::individual();
        assert_eq!(variant_label(PromptVariant::new(Level::TaskOnly, false), ind), "ChatGPT-task");
        assert_eq!(variant_label(PromptVariant::new(Level::Detail, true), ind), "ChatGPT-detail-C");
        assert_eq!(
            variant_label(PromptVariant::new(Level::Detail, false), SessionPolicy::continuous(20)),
            "ChatGPT-detail-S"
        );
    }
}
