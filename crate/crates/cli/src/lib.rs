//! The `codeprompt` command line.

pub mod settings;

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use codeprompt_core::code_analysis::{BehaviourSpec, CodeUnit, Keywords, Language};
use codeprompt_core::corpus::{import_concode, TaskKind};
use codeprompt_core::experiments::{
    self, comparison_csv, comparison_markdown, compare, load_pair_dir, load_run_dir, metric_csv, metric_markdown,
    persist_round, read_round_report, round_dirs, rounds_csv, rounds_markdown, summarize_rounds, BackendMode,
    ExperimentError, ExperimentPlan, MetricsSection, ReportHeader, RoundResult, RunInputs, ScorePair, PAIRS_DIR,
    REPORT_FILE, TOOL_VERSION,
};
use codeprompt_core::llm_gateway::{ChatTranscript, FixtureStore};
use codeprompt_core::metrics::{corpus_score_detailed, write_debug_jsonl, MetricReport};
use codeprompt_core::prompt_forge::Level;

use settings::{resolve_with_defaults, Resolved};

pub const MANIFEST_FILE: &str = "run.json";
pub const BEHAVIOURS_FILE: &str = "behaviours.json";
pub const EXTRACTION_TRANSCRIPTS_FILE: &str = "extraction-transcripts.jsonl";

/// Exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "codeprompt", version, about = "Prompt-variant experiments for LLM code generation")]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Cap on concurrent requests in individual-session mode.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a plan: prompt, normalize and score, writing every artifact.
    Generate(GenerateArgs),
    /// Score candidate/reference pairs or a previous run directory.
    Score(ScoreArgs),
    /// Comparison and multi-round tables over run directories.
    Report(ReportArgs),
    /// Compute behaviour specs for a corpus.
    Extract(ExtractArgs),
    /// Run a plan against the live backend and store every response.
    Record(RecordArgs),
    /// Convert raw CONCODE lines to the canonical text-to-code format.
    ImportConcode(ImportArgs),
}

/// Plan fields settable on the command line. Any of them can also come
/// from a `CODEPROMPT_*` variable or the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct PlanArgs {
    /// Plan file (TOML).
    #[arg(long, alias = "plan", value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// t2c or c2c.
    #[arg(long)]
    pub task: Option<String>,
    /// task, detail or behaviour.
    #[arg(long)]
    pub variant: Option<String>,
    /// Ask for concise code.
    #[arg(long)]
    pub concise: bool,
    /// individual or continuous.
    #[arg(long)]
    pub session: Option<String>,
    #[arg(long, value_name = "N")]
    pub max_prompts: Option<String>,
    #[arg(long, value_name = "N")]
    pub rounds: Option<String>,
    /// live, record or replay.
    #[arg(long)]
    pub backend: Option<String>,
    /// Fixture store directory.
    #[arg(long, value_name = "DIR")]
    pub fixtures: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Text-to-code corpus (JSONL).
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub c2c_source: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub c2c_target: Option<String>,
    #[arg(long, value_name = "N")]
    pub sample: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// static or llm.
    #[arg(long)]
    pub behaviour_source: Option<String>,
    /// CodeBLEU weights as `ngram,weighted,ast,dataflow`.
    #[arg(long)]
    pub weights: Option<String>,
    /// paper-ratio or standard.
    #[arg(long)]
    pub brevity_mode: Option<String>,
    #[arg(long, value_name = "N")]
    pub max_n: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub keywords: Option<String>,
    /// Template override file.
    #[arg(long, value_name = "FILE")]
    pub templates: Option<String>,
}

impl PlanArgs {
    fn flags(&self, jobs: &Option<String>) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |key: &'static str, v: &Option<String>| {
            if let Some(v) = v {
                out.push((key, v.clone()));
            }
        };
        put("task", &self.task);
        put("variant.level", &self.variant);
        put("policy.mode", &self.session);
        put("policy.max_prompts_per_session", &self.max_prompts);
        put("rounds", &self.rounds);
        put("backend.mode", &self.backend);
        put("backend.fixtures", &self.fixtures);
        put("backend.model_name", &self.model);
        put("backend.endpoint", &self.endpoint);
        put("corpus.t2c", &self.corpus);
        put("corpus.c2c_source", &self.c2c_source);
        put("corpus.c2c_target", &self.c2c_target);
        put("sample", &self.sample);
        put("seed", &self.seed);
        put("behaviour_source", &self.behaviour_source);
        put("metrics.weights", &self.weights);
        put("metrics.brevity_mode", &self.brevity_mode);
        put("metrics.max_n", &self.max_n);
        put("metrics.keywords", &self.keywords);
        put("templates", &self.templates);
        put("jobs", jobs);
        if self.concise {
            out.push(("variant.concise", "true".into()));
        }
        out
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Precomputed behaviour specs from `extract`.
    #[arg(long, value_name = "FILE")]
    pub behaviours: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long, value_name = "FILE")]
    pub behaviours: Option<PathBuf>,
    /// Also write the run's artifacts here.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Behaviour spec file to write (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Pair directory, round directory or run directory.
    pub path: PathBuf,
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub brevity_mode: Option<String>,
    #[arg(long, value_name = "N")]
    pub max_n: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub keywords: Option<String>,
    /// Write score.md, score.csv and score.json here as well.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Per-pair sub-scores and counts, one JSON object per line.
    #[arg(long, value_name = "FILE")]
    pub debug_jsonl: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directories written by `generate`.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Label of the row deltas are computed against (default: the first run).
    #[arg(long)]
    pub baseline: Option<String>,
    /// Write report.md and CSV tables here as well.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Raw CONCODE JSONL file.
    pub raw: PathBuf,
    /// Class name to record for every instance; the raw format has none.
    #[arg(long)]
    pub class_name: String,
    /// Output JSONL file (default: stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Written as `run.json` at the top of a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub label: String,
    pub task: TaskKind,
    pub rounds: u32,
    pub seed: u64,
    /// Resolved plan plus the source of every field.
    pub config: String,
    pub fixture_digest: Option<String>,
    pub template_digest: String,
    pub instances: usize,
    pub skipped: Vec<usize>,
}

impl RunManifest {
    pub fn read(dir: &Path) -> anyhow::Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn plan(&self) -> anyhow::Result<ExperimentPlan> {
        ExperimentPlan::from_toml(&self.config).map_err(|e| anyhow!("recorded plan: {e}"))
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn env_lookup(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let outcome = match &cli.command {
        Command::Generate(a) => cmd_generate(a, &cli.jobs),
        Command::Record(a) => cmd_record(a, &cli.jobs),
        Command::Extract(a) => cmd_extract(a, &cli.jobs),
        Command::Score(a) => cmd_score(a),
        Command::Report(a) => cmd_report(a),
        Command::ImportConcode(a) => cmd_import(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn resolve_plan(
    args: &PlanArgs,
    jobs: &Option<String>,
    extra: &[(&'static str, String)],
    defaults: &[(&'static str, &'static str)],
) -> Result<Resolved, Failure> {
    let mut flags = args.flags(jobs);
    flags.extend(extra.iter().cloned());
    resolve_with_defaults(args.config.as_deref(), &env_lookup, &flags, defaults).map_err(Failure::Usage)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("serializable") + "\n")
        .collect()
}

fn fixture_digest(plan: &ExperimentPlan) -> anyhow::Result<Option<String>> {
    match (&plan.backend.fixtures, plan.backend.mode) {
        (Some(dir), BackendMode::Replay | BackendMode::Record) => Ok(Some(FixtureStore::open(dir)?.digest()?)),
        _ => Ok(None),
    }
}

fn read_behaviours(path: &Path) -> anyhow::Result<BTreeMap<String, BehaviourSpec>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

struct Executed {
    results: Vec<RoundResult>,
    behaviours: Option<BTreeMap<String, BehaviourSpec>>,
    extraction: Vec<ChatTranscript>,
    instances: usize,
}

fn execute(plan: &ExperimentPlan, behaviours: Option<&Path>) -> Result<Executed, Failure> {
    let instances = plan.load_corpus()?;
    let backend = experiments::open_backend(plan)?;
    let (specs, extraction) = match (plan.variant.level, behaviours) {
        (Level::Behaviour, Some(path)) => (Some(read_behaviours(path)?), Vec::new()),
        (Level::Behaviour, None) => {
            let (specs, transcripts) = experiments::prepare_behaviours(plan, &instances, backend.as_ref())?;
            (Some(specs), transcripts)
        }
        _ => (None, Vec::new()),
    };
    let inputs = RunInputs {
        instances: &instances,
        behaviours: specs.as_ref(),
    };
    let results = experiments::run(plan, &inputs, backend.as_ref())?;
    Ok(Executed {
        results,
        behaviours: specs,
        extraction,
        instances: instances.len(),
    })
}

fn header_for(resolved: &Resolved, reports: &[&MetricReport], fixture_digest: Option<String>) -> anyhow::Result<ReportHeader> {
    let plan = &resolved.plan;
    Ok(ReportHeader {
        tool_version: TOOL_VERSION.to_string(),
        config: resolved.describe(),
        seed: plan.seed,
        fixture_digest,
        template_digest: Some(plan.templates()?.digest()),
        aggregation: reports.first().map(|r| r.aggregation.clone()).unwrap_or_default(),
        brevity_mode: plan.metrics.brevity_mode.as_str().to_string(),
        bp_modes_diverge: reports.iter().any(|r| r.bp_modes_diverge),
    })
}

fn round_rows(results: &[RoundResult]) -> Vec<(String, MetricReport)> {
    results
        .iter()
        .map(|r| {
            let label = if results.len() > 1 {
                format!("{} R{}", r.label, r.round)
            } else {
                r.label.clone()
            };
            (label, r.report.clone())
        })
        .collect()
}

fn persist_run(resolved: &Resolved, done: &Executed, out: &Path) -> anyhow::Result<()> {
    let plan = &resolved.plan;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    if let Some(specs) = &done.behaviours {
        write(&out.join(BEHAVIOURS_FILE), serde_json::to_string_pretty(specs)? + "\n")?;
    }
    if !done.extraction.is_empty() {
        write(&out.join(EXTRACTION_TRANSCRIPTS_FILE), jsonl(&done.extraction))?;
    }
    for r in &done.results {
        persist_round(out, r)?;
    }
    let digest = fixture_digest(plan)?;
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        label: plan.label(),
        task: plan.task,
        rounds: plan.rounds,
        seed: plan.seed,
        config: resolved.describe(),
        fixture_digest: digest.clone(),
        template_digest: plan.templates()?.digest(),
        instances: done.instances,
        skipped: done.results.iter().map(|r| r.skipped.len()).collect(),
    };
    write(&out.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;

    let reports: Vec<&MetricReport> = done.results.iter().map(|r| &r.report).collect();
    let header = header_for(resolved, &reports, digest)?;
    let rows = round_rows(&done.results);
    let mut md = header.markdown("Scores") + &metric_markdown(&rows);
    let mut csv = header.csv() + &metric_csv(&rows);
    if done.results.len() > 1 {
        let stats = summarize_rounds(&done.results)?;
        let pairs: Vec<ScorePair> = done.results.iter().map(|r| ScorePair::from(&r.report)).collect();
        md.push_str("\n## Rounds\n\n");
        md.push_str(&rounds_markdown(&plan.label(), &pairs, &stats));
        write(&out.join("rounds.csv"), header.csv() + &rounds_csv(&plan.label(), &pairs, &stats))?;
    }
    let skipped: Vec<String> = done
        .results
        .iter()
        .flat_map(|r| r.skipped.iter().map(move |s| format!("- R{}: {} ({})", r.round, s.id, s.reason)))
        .collect();
    if !skipped.is_empty() {
        md.push_str("\nSkipped instances:\n\n");
        md.push_str(&(skipped.join("\n") + "\n"));
    }
    csv.truncate(csv.trim_end().len());
    csv.push('\n');
    write(&out.join("report.md"), md)?;
    write(&out.join("report.csv"), csv)?;
    Ok(())
}

/// Writes to stdout. A closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_summary(results: &[RoundResult]) {
    for r in results {
        emit(&format!(
            "{} round {}: BLEU {:.2}, CodeBLEU {:.2} over {} pair(s), {} skipped\n",
            r.label,
            r.round,
            r.report.bleu,
            r.report.codebleu,
            r.report.n_pairs,
            r.skipped.len()
        ));
    }
}

fn cmd_generate(args: &GenerateArgs, jobs: &Option<String>) -> Outcome {
    let resolved = resolve_plan(&args.plan, jobs, &[], &[])?;
    let done = execute(&resolved.plan, args.behaviours.as_deref())?;
    persist_run(&resolved, &done, &args.out)?;
    print_summary(&done.results);
    Ok(())
}

fn cmd_record(args: &RecordArgs, jobs: &Option<String>) -> Outcome {
    let resolved = resolve_plan(&args.plan, jobs, &[("backend.mode", "record".into())], &[])?;
    let done = execute(&resolved.plan, args.behaviours.as_deref())?;
    if let Some(out) = &args.out {
        persist_run(&resolved, &done, out)?;
    }
    print_summary(&done.results);
    if let Some(dir) = &resolved.plan.backend.fixtures {
        let store = FixtureStore::open(dir).map_err(anyhow::Error::from)?;
        emit(&format!("fixture store {} holds {} entries\n", dir.display(), store.len().map_err(anyhow::Error::from)?));
    }
    Ok(())
}

fn cmd_extract(args: &ExtractArgs, jobs: &Option<String>) -> Outcome {
    // Static extraction needs no backend, so don't demand fixtures for it.
    let resolved = resolve_plan(&args.plan, jobs, &[], &[("backend.mode", "live")])?;
    let plan = &resolved.plan;
    let instances = plan.load_corpus()?;
    let (specs, transcripts) = match plan.behaviour_source {
        experiments::BehaviourSource::Static => experiments::prepare_behaviours(plan, &instances, &NoBackend)?,
        experiments::BehaviourSource::Llm => {
            let backend = experiments::open_backend(plan)?;
            experiments::prepare_behaviours(plan, &instances, backend.as_ref())?
        }
    };
    write(&args.out, serde_json::to_string_pretty(&specs).map_err(anyhow::Error::from)? + "\n")?;
    if !transcripts.is_empty() {
        let path = args.out.with_extension("transcripts.jsonl");
        write(&path, jsonl(&transcripts))?;
    }
    emit(&format!("{} behaviour spec(s) written to {}\n", specs.len(), args.out.display()));
    Ok(())
}

/// Stands in for a backend where none may be contacted.
struct NoBackend;

impl codeprompt_core::llm_gateway::ChatBackend for NoBackend {
    fn complete_raw(
        &self,
        _: &codeprompt_core::llm_gateway::ChatRequest,
    ) -> Result<String, codeprompt_core::llm_gateway::BackendError> {
        Err(codeprompt_core::llm_gateway::BackendError::Transport {
            message: "no backend configured".into(),
            retryable: false,
        })
    }

    fn name(&self) -> String {
        "none".into()
    }
}

/// A set of pairs to score and where it came from.
struct ScoreTarget {
    label: String,
    pairs_dir: PathBuf,
}

fn score_targets(path: &Path) -> anyhow::Result<(Vec<ScoreTarget>, Option<RunManifest>)> {
    let rounds = if path.is_dir() { round_dirs(path)? } else { Vec::new() };
    if !rounds.is_empty() {
        let manifest = RunManifest::read(path).ok();
        let multi = rounds.len() > 1;
        let targets = rounds
            .iter()
            .map(|(n, dir)| {
                let recorded = read_round_report(dir)?;
                let label = if multi {
                    format!("{} R{n}", recorded.label)
                } else {
                    recorded.label
                };
                Ok(ScoreTarget {
                    label,
                    pairs_dir: dir.join(PAIRS_DIR),
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        return Ok((targets, manifest));
    }
    if path.join(REPORT_FILE).is_file() && path.join(PAIRS_DIR).is_dir() {
        let recorded = read_round_report(path)?;
        let manifest = path.parent().and_then(|p| RunManifest::read(p).ok());
        return Ok((
            vec![ScoreTarget {
                label: recorded.label,
                pairs_dir: path.join(PAIRS_DIR),
            }],
            manifest,
        ));
    }
    let label = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pairs".into());
    Ok((
        vec![ScoreTarget {
            label,
            pairs_dir: path.to_path_buf(),
        }],
        None,
    ))
}

/// Scoring settings: flags, then the environment, then the recorded plan
/// of a run directory, then defaults.
fn score_settings(args: &ScoreArgs, base: MetricsSection) -> Result<MetricsSection, Failure> {
    let mut flags = Vec::new();
    let mut put = |key: &'static str, v: &Option<String>| {
        if let Some(v) = v {
            flags.push((key, v.clone()));
        }
    };
    put("metrics.weights", &args.weights);
    put("metrics.brevity_mode", &args.brevity_mode);
    put("metrics.max_n", &args.max_n);
    put("metrics.keywords", &args.keywords);
    // Resolve against a stand-in plan so the same parsing and validation apply.
    let mut stand_in = ExperimentPlan::from_toml(
        "task = \"t2c\"\n[variant]\nlevel = \"task\"\n[corpus]\nt2c = \"-\"\n[backend]\nmode = \"live\"\n",
    )?;
    stand_in.metrics = base;
    let table: toml::Table = toml::from_str(&stand_in.to_toml()).map_err(|e| Failure::Runtime(e.into()))?;
    let env = |k: &str| match k {
        "CODEPROMPT_WEIGHTS" | "CODEPROMPT_BREVITY_MODE" | "CODEPROMPT_MAX_N" | "CODEPROMPT_KEYWORDS" => env_lookup(k),
        _ => None,
    };
    let resolved = settings::resolve_table(table, &env, &flags, &[]).map_err(Failure::Usage)?;
    Ok(resolved.plan.metrics)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoredSet {
    pub label: String,
    pub report: MetricReport,
}

fn cmd_score(args: &ScoreArgs) -> Outcome {
    let (targets, manifest) = score_targets(&args.path)?;
    let base = match &manifest {
        Some(m) => m.plan()?.metrics,
        None => MetricsSection::default(),
    };
    let metrics = score_settings(args, base)?;
    let config = metrics.bleu_config();
    let keywords: Keywords = metrics.keywords()?;
    let mut scored = Vec::new();
    let mut debug = Vec::new();
    for t in &targets {
        let pairs = load_pair_dir(&t.pairs_dir)?;
        let units: Vec<(CodeUnit, CodeUnit)> = pairs
            .iter()
            .map(|p| {
                (
                    CodeUnit::parse(Language::Java, p.candidate.as_str()),
                    CodeUnit::parse(Language::Java, p.reference.as_str()),
                )
            })
            .collect();
        let refs: Vec<(&CodeUnit, &CodeUnit)> = units.iter().map(|(c, r)| (c, r)).collect();
        let (report, records) = corpus_score_detailed(&refs, &config, &metrics.weights, &keywords)
            .map_err(|e| anyhow!("{}: {e}", t.pairs_dir.display()))?;
        debug.extend(records);
        scored.push(ScoredSet {
            label: t.label.clone(),
            report,
        });
    }
    let mut settings_toml = toml::to_string(&metrics).map_err(anyhow::Error::from)?;
    if let Some(m) = &manifest {
        settings_toml.push_str(&format!("\n# scored run: {}\n", m.label));
    }
    let header = ReportHeader {
        tool_version: TOOL_VERSION.to_string(),
        config: settings_toml,
        seed: manifest.as_ref().map(|m| m.seed).unwrap_or(0),
        fixture_digest: manifest.as_ref().and_then(|m| m.fixture_digest.clone()),
        template_digest: manifest.as_ref().map(|m| m.template_digest.clone()),
        aggregation: scored.first().map(|s| s.report.aggregation.clone()).unwrap_or_default(),
        brevity_mode: metrics.brevity_mode.as_str().to_string(),
        bp_modes_diverge: scored.iter().any(|s| s.report.bp_modes_diverge),
    };
    let rows: Vec<(String, MetricReport)> = scored.iter().map(|s| (s.label.clone(), s.report.clone())).collect();
    let md = header.markdown("Scores") + &metric_markdown(&rows);
    emit(&md);
    if let Some(out) = &args.out {
        write(&out.join("score.md"), &md)?;
        write(&out.join("score.csv"), header.csv() + &metric_csv(&rows))?;
        write(&out.join("score.json"), serde_json::to_string_pretty(&scored).map_err(anyhow::Error::from)? + "\n")?;
    }
    if let Some(path) = &args.debug_jsonl {
        let mut buf = Vec::new();
        write_debug_jsonl(&debug, &mut buf).map_err(anyhow::Error::from)?;
        write(path, buf)?;
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Outcome {
    let mut runs = Vec::new();
    for dir in &args.runs {
        let manifest = RunManifest::read(dir)?;
        let run = load_run_dir(dir)?;
        runs.push((manifest, run));
    }
    let tasks: BTreeSet<TaskKind> = runs.iter().map(|(m, _)| m.task).collect();
    if tasks.len() > 1 {
        let listing: Vec<String> = runs.iter().map(|(m, _)| format!("{} ({})", m.label, m.task)).collect();
        return Err(Failure::Runtime(anyhow!(
            "runs mix tasks and cannot share a table: {}",
            listing.join(", ")
        )));
    }
    let rows: Vec<(String, ScorePair)> = runs
        .iter()
        .map(|(m, run)| (m.label.clone(), ScorePair::from(&run.rounds[0].report)))
        .collect();
    let baseline = args.baseline.clone().unwrap_or_else(|| rows[0].0.clone());
    let table = compare(&rows, &baseline, &[])?;

    let distinct = |values: Vec<Option<String>>| -> Option<String> {
        let set: BTreeSet<String> = values.into_iter().flatten().collect();
        if set.is_empty() {
            None
        } else {
            Some(set.into_iter().collect::<Vec<_>>().join(", "))
        }
    };
    let all_reports: Vec<&MetricReport> = runs.iter().flat_map(|(_, r)| r.rounds.iter().map(|x| &x.report)).collect();
    let header = ReportHeader {
        tool_version: TOOL_VERSION.to_string(),
        config: runs
            .iter()
            .map(|(m, _)| format!("# run: {}\n{}", m.label, m.config.trim_end()))
            .collect::<Vec<_>>()
            .join("\n\n"),
        seed: runs[0].0.seed,
        fixture_digest: distinct(runs.iter().map(|(m, _)| m.fixture_digest.clone()).collect()),
        template_digest: distinct(runs.iter().map(|(m, _)| Some(m.template_digest.clone())).collect()),
        aggregation: all_reports[0].aggregation.clone(),
        brevity_mode: all_reports[0].brevity_mode.as_str().to_string(),
        bp_modes_diverge: all_reports.iter().any(|r| r.bp_modes_diverge),
    };

    let mut md = header.markdown("Report");
    md.push_str("## Comparison\n\n");
    md.push_str(&comparison_markdown(&table));
    let mut round_csvs = Vec::new();
    for (m, run) in &runs {
        if run.rounds.len() < 2 {
            continue;
        }
        let pairs: Vec<ScorePair> = run.rounds.iter().map(|r| ScorePair::from(&r.report)).collect();
        let stats = experiments::RoundStats {
            bleu: experiments::summarize(&pairs.iter().map(|p| p.bleu).collect::<Vec<_>>())?,
            codebleu: experiments::summarize(&pairs.iter().map(|p| p.codebleu).collect::<Vec<_>>())?,
        };
        md.push_str(&format!("\n## Rounds: {}\n\n", m.label));
        md.push_str(&rounds_markdown(&m.label, &pairs, &stats));
        round_csvs.push((m.label.clone(), rounds_csv(&m.label, &pairs, &stats)));
    }
    emit(&md);
    if let Some(out) = &args.out {
        write(&out.join("report.md"), &md)?;
        write(&out.join("comparison.csv"), header.csv() + &comparison_csv(&table))?;
        for (label, csv) in round_csvs {
            let name: String = label
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
                .collect();
            write(&out.join(format!("rounds-{name}.csv")), header.csv() + &csv)?;
        }
    }
    Ok(())
}

fn cmd_import(args: &ImportArgs) -> Outcome {
    let raw = fs::read_to_string(&args.raw).with_context(|| format!("reading {}", args.raw.display()))?;
    let records = import_concode(&raw, &args.class_name).map_err(anyhow::Error::from)?;
    let body = jsonl(&records);
    match &args.out {
        Some(path) => {
            write(path, body)?;
            eprintln!("{} instance(s) written to {}", records.len(), path.display());
        }
        None => emit(&body),
    }
    Ok(())
}
