//! Layered plan resolution: flags over `CODEPROMPT_*` environment variables
//! over the config file over built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use codeprompt_core::corpus::TaskKind;
use codeprompt_core::experiments::{BackendMode, BehaviourSource, ExperimentPlan};
use codeprompt_core::metrics::{BrevityMode, CodeBleuWeights};
use codeprompt_core::prompt_forge::Level;
use serde::Serialize;
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Default,
    Config,
    Env,
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Default => "default",
            Source::Config => "config",
            Source::Env => "env",
            Source::Flag => "flag",
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Text,
    Path,
    UInt,
    Bool,
    Task,
    Level,
    Session,
    Backend,
    Behaviour,
    Weights,
    Brevity,
}

pub struct Setting {
    pub key: &'static str,
    pub env: &'static str,
    kind: Kind,
}

const fn setting(key: &'static str, env: &'static str, kind: Kind) -> Setting {
    Setting { key, env, kind }
}

/// Every plan field that can come from a flag or the environment. The
/// credential itself is deliberately absent: only the name of the variable
/// holding it can be configured, and only in the config file.
pub const SETTINGS: &[Setting] = &[
    setting("task", "CODEPROMPT_TASK", Kind::Task),
    setting("variant.level", "CODEPROMPT_VARIANT", Kind::Level),
    setting("variant.concise", "CODEPROMPT_CONCISE", Kind::Bool),
    setting("policy.mode", "CODEPROMPT_SESSION", Kind::Session),
    setting("policy.max_prompts_per_session", "CODEPROMPT_MAX_PROMPTS", Kind::UInt),
    setting("rounds", "CODEPROMPT_ROUNDS", Kind::UInt),
    setting("backend.mode", "CODEPROMPT_BACKEND", Kind::Backend),
    setting("backend.fixtures", "CODEPROMPT_FIXTURES", Kind::Path),
    setting("backend.model_name", "CODEPROMPT_MODEL", Kind::Text),
    setting("backend.endpoint", "CODEPROMPT_ENDPOINT", Kind::Text),
    setting("corpus.t2c", "CODEPROMPT_CORPUS", Kind::Path),
    setting("corpus.c2c_source", "CODEPROMPT_C2C_SOURCE", Kind::Path),
    setting("corpus.c2c_target", "CODEPROMPT_C2C_TARGET", Kind::Path),
    setting("sample", "CODEPROMPT_SAMPLE", Kind::UInt),
    setting("seed", "CODEPROMPT_SEED", Kind::UInt),
    setting("behaviour_source", "CODEPROMPT_BEHAVIOUR_SOURCE", Kind::Behaviour),
    setting("metrics.weights", "CODEPROMPT_WEIGHTS", Kind::Weights),
    setting("metrics.brevity_mode", "CODEPROMPT_BREVITY_MODE", Kind::Brevity),
    setting("metrics.max_n", "CODEPROMPT_MAX_N", Kind::UInt),
    setting("metrics.keywords", "CODEPROMPT_KEYWORDS", Kind::Path),
    setting("templates", "CODEPROMPT_TEMPLATES", Kind::Path),
    setting("jobs", "CODEPROMPT_JOBS", Kind::UInt),
];

const PATH_KEYS: &[&str] = &[
    "corpus.t2c",
    "corpus.c2c_source",
    "corpus.c2c_target",
    "backend.fixtures",
    "metrics.keywords",
    "templates",
];

/// Filled in when no layer sets them, because the plan format requires them.
const REQUIRED_DEFAULTS: &[(&str, &str)] = &[
    ("variant.level", "task"),
    ("policy.mode", "individual"),
    ("backend.mode", "replay"),
];

fn typed<T: Serialize, E: fmt::Display>(parsed: Result<T, E>) -> Result<Value, String> {
    let v = parsed.map_err(|e| e.to_string())?;
    Value::try_from(v).map_err(|e| e.to_string())
}

fn convert(kind: Kind, raw: &str) -> Result<Value, String> {
    match kind {
        Kind::Text | Kind::Path => Ok(Value::String(raw.to_string())),
        Kind::UInt => raw
            .trim()
            .parse::<i64>()
            .ok()
            .filter(|v| *v >= 0)
            .map(Value::Integer)
            .ok_or_else(|| format!("`{raw}` is not a non-negative integer")),
        Kind::Bool => match raw.trim().to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" | "on" => Ok(Value::Boolean(true)),
            "0" | "false" | "no" | "off" => Ok(Value::Boolean(false)),
            _ => Err(format!("`{raw}` is not a boolean")),
        },
        Kind::Task => typed(raw.parse::<TaskKind>()),
        Kind::Level => typed(raw.parse::<Level>()),
        Kind::Session => match raw.trim().to_ascii_lowercase().as_str() {
            "individual" => Ok(Value::String("individual".into())),
            "continuous" => Ok(Value::String("continuous".into())),
            other => Err(format!("unknown session policy `{other}` (expected individual or continuous)")),
        },
        Kind::Backend => typed(raw.parse::<BackendMode>()),
        Kind::Behaviour => typed(raw.parse::<BehaviourSource>()),
        Kind::Weights => typed(raw.parse::<CodeBleuWeights>()),
        Kind::Brevity => typed(raw.parse::<BrevityMode>()),
    }
}

fn get_dotted<'a>(table: &'a Table, key: &str) -> Option<&'a Value> {
    let mut parts = key.split('.');
    let mut current = table.get(parts.next()?)?;
    for part in parts {
        current = current.as_table()?.get(part)?;
    }
    Some(current)
}

fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<(), String> {
    let (head, last) = match key.rsplit_once('.') {
        Some((head, last)) => (Some(head), last),
        None => (None, key),
    };
    let mut current = table;
    if let Some(head) = head {
        for part in head.split('.') {
            let entry = current
                .entry(part.to_string())
                .or_insert_with(|| Value::Table(Table::new()));
            current = entry
                .as_table_mut()
                .ok_or_else(|| format!("`{part}` in the config must be a table"))?;
        }
    }
    current.insert(last.to_string(), value);
    Ok(())
}

/// The plan after all layers, with the layer each known field came from.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub plan: ExperimentPlan,
    pub provenance: BTreeMap<&'static str, Source>,
}

impl Resolved {
    /// The plan as TOML followed by one comment line per field naming its
    /// source.
    pub fn describe(&self) -> String {
        let mut out = self.plan.to_toml();
        if !out.ends_with('\n') {
            out.push('\n');
        }
        out.push('\n');
        for (key, source) in &self.provenance {
            out.push_str(&format!("# {key}: {source}\n"));
        }
        out
    }
}

/// Resolves a plan from a config file (optional), an environment lookup
/// and flag values keyed like [`SETTINGS`]. Relative paths in the config
/// file are taken relative to the file's directory; relative paths from
/// flags and the environment are left as given.
pub fn resolve(
    config: Option<&Path>,
    env: &dyn Fn(&str) -> Option<String>,
    flags: &[(&'static str, String)],
) -> Result<Resolved, String> {
    resolve_with_defaults(config, env, flags, &[])
}

/// Like [`resolve`], with command-specific defaults that apply before the
/// built-in ones.
pub fn resolve_with_defaults(
    config: Option<&Path>,
    env: &dyn Fn(&str) -> Option<String>,
    flags: &[(&'static str, String)],
    defaults: &[(&'static str, &'static str)],
) -> Result<Resolved, String> {
    let table = match config {
        Some(path) => read_config(path)?,
        None => Table::new(),
    };
    resolve_table(table, env, flags, defaults)
}

fn read_config(path: &Path) -> Result<Table, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut t: Table = text.parse().map_err(|e| format!("{}: {e}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for key in PATH_KEYS {
        if let Some(Value::String(p)) = get_dotted(&t, key).cloned() {
            if Path::new(&p).is_relative() {
                let joined = base.join(&p).to_string_lossy().into_owned();
                set_dotted(&mut t, key, Value::String(joined))?;
            }
        }
    }
    Ok(t)
}

/// Resolves on top of an already-parsed config layer.
pub fn resolve_table(
    mut table: Table,
    env: &dyn Fn(&str) -> Option<String>,
    flags: &[(&'static str, String)],
    defaults: &[(&'static str, &'static str)],
) -> Result<Resolved, String> {
    let mut provenance = BTreeMap::new();
    for s in SETTINGS {
        if get_dotted(&table, s.key).is_some() {
            provenance.insert(s.key, Source::Config);
        }
    }
    for s in SETTINGS {
        if let Some(raw) = env(s.env) {
            let value = convert(s.kind, &raw).map_err(|e| format!("{}: {e}", s.env))?;
            set_dotted(&mut table, s.key, value)?;
            provenance.insert(s.key, Source::Env);
        }
    }
    for (key, raw) in flags {
        let s = SETTINGS
            .iter()
            .find(|s| s.key == *key)
            .ok_or_else(|| format!("unknown setting {key}"))?;
        let value = convert(s.kind, raw).map_err(|e| format!("--{}: {e}", flag_name(key)))?;
        set_dotted(&mut table, s.key, value)?;
        provenance.insert(s.key, Source::Flag);
    }
    for (key, value) in defaults.iter().chain(REQUIRED_DEFAULTS) {
        if get_dotted(&table, key).is_none() {
            set_dotted(&mut table, key, Value::String((*value).to_string()))?;
            provenance.insert(*key, Source::Default);
        }
    }
    for s in SETTINGS {
        provenance.entry(s.key).or_insert(Source::Default);
    }
    let text = toml::to_string(&table).map_err(|e| e.to_string())?;
    let plan = ExperimentPlan::from_toml(&text).map_err(|e| e.to_string())?;
    plan.validate().map_err(|e| e.to_string())?;
    Ok(Resolved { plan, provenance })
}

/// Flag spelling used in messages for a setting key.
pub fn flag_name(key: &str) -> &'static str {
    match key {
        "task" => "task",
        "variant.level" => "variant",
        "variant.concise" => "concise",
        "policy.mode" => "session",
        "policy.max_prompts_per_session" => "max-prompts",
        "rounds" => "rounds",
        "backend.mode" => "backend",
        "backend.fixtures" => "fixtures",
        "backend.model_name" => "model",
        "backend.endpoint" => "endpoint",
        "corpus.t2c" => "corpus",
        "corpus.c2c_source" => "c2c-source",
        "corpus.c2c_target" => "c2c-target",
        "sample" => "sample",
        "seed" => "seed",
        "behaviour_source" => "behaviour-source",
        "metrics.weights" => "weights",
        "metrics.brevity_mode" => "brevity-mode",
        "metrics.max_n" => "max-n",
        "metrics.keywords" => "keywords",
        "templates" => "templates",
        "jobs" => "jobs",
        _ => "?",
    }
}
