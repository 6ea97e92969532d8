//! Dataset loading for the two generation tasks.
//!
//! Text-to-code records live in a line-delimited JSON file with an explicit
//! schema (see [`T2cRecord`]); code-to-code pairs live in two parallel plain
//! text files, one snippet per line, paired by line index.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: schema violation: {message}")]
    Schema { line: usize, message: String },
    #[error("source and target files are not aligned: {source_lines} source lines vs {target_lines} target lines")]
    Alignment {
        source_lines: usize,
        target_lines: usize,
    },
    #[error("cannot sample {requested} instances from a corpus of {available}")]
    SampleSize { requested: usize, available: usize },
}

/// Which of the two generation tasks an instance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "t2c")]
    T2C,
    #[serde(rename = "c2c")]
    C2C,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::T2C => "t2c",
            TaskKind::C2C => "c2c",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::T2C => "T2C",
            TaskKind::C2C => "C2C",
        })
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "t2c" => Ok(TaskKind::T2C),
            "c2c" => Ok(TaskKind::C2C),
            other => Err(format!("unknown task `{other}` (expected t2c or c2c)")),
        }
    }
}

/// The class a text-to-code method is supposed to live in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeEnvironment {
    pub class_name: String,
    pub member_variables: Vec<String>,
    pub member_functions: Vec<String>,
}

/// Task-specific input of an instance. The variant fixes the [`TaskKind`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskInput {
    TextToCode {
        nl_description: String,
        environment: CodeEnvironment,
    },
    CodeToCode {
        source_code: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub input: TaskInput,
    /// Target-language (Java) reference solution.
    pub ground_truth: String,
}

impl TaskInstance {
    pub fn text_to_code(
        id: impl Into<String>,
        nl_description: impl Into<String>,
        environment: CodeEnvironment,
        ground_truth: impl Into<String>,
    ) -> Self {
        TaskInstance {
            id: id.into(),
            input: TaskInput::TextToCode {
                nl_description: nl_description.into(),
                environment,
            },
            ground_truth: ground_truth.into(),
        }
    }

    pub fn code_to_code(
        id: impl Into<String>,
        source_code: impl Into<String>,
        ground_truth: impl Into<String>,
    ) -> Self {
        TaskInstance {
            id: id.into(),
            input: TaskInput::CodeToCode {
                source_code: source_code.into(),
            },
            ground_truth: ground_truth.into(),
        }
    }

    pub fn kind(&self) -> TaskKind {
        match self.input {
            TaskInput::TextToCode { .. } => TaskKind::T2C,
            TaskInput::CodeToCode { .. } => TaskKind::C2C,
        }
    }

    pub fn nl_description(&self) -> Option<&str> {
        match &self.input {
            TaskInput::TextToCode { nl_description, .. } => Some(nl_description),
            TaskInput::CodeToCode { .. } => None,
        }
    }

    pub fn environment(&self) -> Option<&CodeEnvironment> {
        match &self.input {
            TaskInput::TextToCode { environment, .. } => Some(environment),
            TaskInput::CodeToCode { .. } => None,
        }
    }

    pub fn source_code(&self) -> Option<&str> {
        match &self.input {
            TaskInput::CodeToCode { source_code } => Some(source_code),
            TaskInput::TextToCode { .. } => None,
        }
    }
}

/// One line of the canonical text-to-code file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct T2cRecord {
    pub id: String,
    pub nl: String,
    pub class_name: String,
    pub member_variables: Vec<String>,
    pub member_functions: Vec<String>,
    pub code: String,
}

impl T2cRecord {
    fn into_instance(self, line: usize) -> Result<TaskInstance, CorpusError> {
        let schema = |message: &str| CorpusError::Schema {
            line,
            message: message.to_string(),
        };
        if self.id.trim().is_empty() {
            return Err(schema("`id` must be non-empty"));
        }
        if self.class_name.trim().is_empty() {
            return Err(schema("`class_name` must be non-empty"));
        }
        if self.code.trim().is_empty() {
            return Err(schema("`code` must be non-empty"));
        }
        Ok(TaskInstance::text_to_code(
            self.id,
            self.nl,
            CodeEnvironment {
                class_name: self.class_name,
                member_variables: self.member_variables,
                member_functions: self.member_functions,
            },
            self.code,
        ))
    }

    /// Returns `None` for code-to-code instances.
    pub fn from_instance(instance: &TaskInstance) -> Option<Self> {
        match &instance.input {
            TaskInput::TextToCode {
                nl_description,
                environment,
            } => Some(T2cRecord {
                id: instance.id.clone(),
                nl: nl_description.clone(),
                class_name: environment.class_name.clone(),
                member_variables: environment.member_variables.clone(),
                member_functions: environment.member_functions.clone(),
                code: instance.ground_truth.clone(),
            }),
            TaskInput::CodeToCode { .. } => None,
        }
    }
}

fn read_text(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses canonical text-to-code records from a string. Blank lines are
/// skipped; line numbers in errors are 1-based.
pub fn parse_t2c(text: &str) -> Result<Vec<TaskInstance>, CorpusError> {
    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record: T2cRecord = serde_json::from_str(raw).map_err(|err| {
            if err.is_data() {
                CorpusError::Schema {
                    line,
                    message: err.to_string(),
                }
            } else {
                CorpusError::Parse {
                    line,
                    message: err.to_string(),
                }
            }
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::Schema {
                line,
                message: format!("duplicate id `{}`", record.id),
            });
        }
        instances.push(record.into_instance(line)?);
    }
    Ok(instances)
}

pub fn load_t2c(path: impl AsRef<Path>) -> Result<Vec<TaskInstance>, CorpusError> {
    parse_t2c(&read_text(path.as_ref())?)
}

/// Serializes text-to-code instances in the canonical line format.
/// Code-to-code instances are skipped.
pub fn write_t2c<W: Write>(instances: &[TaskInstance], mut out: W) -> std::io::Result<()> {
    for record in instances.iter().filter_map(T2cRecord::from_instance) {
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Pairs line `i` of the C# source text with line `i` of the Java target text.
pub fn parse_c2c(source: &str, target: &str) -> Result<Vec<TaskInstance>, CorpusError> {
    let sources: Vec<&str> = source.lines().collect();
    let targets: Vec<&str> = target.lines().collect();
    if sources.len() != targets.len() {
        return Err(CorpusError::Alignment {
            source_lines: sources.len(),
            target_lines: targets.len(),
        });
    }
    sources
        .into_iter()
        .zip(targets)
        .enumerate()
        .map(|(idx, (src, tgt))| {
            if tgt.trim().is_empty() {
                return Err(CorpusError::Schema {
                    line: idx + 1,
                    message: "target snippet is empty".into(),
                });
            }
            Ok(TaskInstance::code_to_code(format!("c2c-{idx}"), src, tgt))
        })
        .collect()
}

pub fn load_c2c(
    source_path: impl AsRef<Path>,
    target_path: impl AsRef<Path>,
) -> Result<Vec<TaskInstance>, CorpusError> {
    let source = read_text(source_path.as_ref())?;
    let target = read_text(target_path.as_ref())?;
    parse_c2c(&source, &target)
}

/// Draws `n` distinct instances with a seeded shuffle followed by a prefix take.
pub fn sample(instances: &[TaskInstance], n: usize, seed: u64) -> Result<Vec<TaskInstance>, CorpusError> {
    if n == 0 || n > instances.len() {
        return Err(CorpusError::SampleSize {
            requested: n,
            available: instances.len(),
        });
    }
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    Ok(order[..n].iter().map(|&i| instances[i].clone()).collect())
}

const CONCODE_FIELD_SEP: &str = "concode_field_sep";
const CONCODE_ELEM_SEP: &str = "concode_elem_sep";

#[derive(Debug, Deserialize)]
struct RawConcode {
    nl: String,
    code: String,
}

/// Converts upstream CONCODE lines (`{"nl": ..., "code": ...}` with the class
/// environment packed into `nl` behind separator tokens) into canonical records.
///
/// The upstream encoding carries member variables and member-function
/// signatures but no class name, so `class_name` is supplied by the caller.
pub fn import_concode(raw: &str, class_name: &str) -> Result<Vec<T2cRecord>, CorpusError> {
    let mut records = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RawConcode = serde_json::from_str(line).map_err(|err| CorpusError::Parse {
            line: idx + 1,
            message: err.to_string(),
        })?;
        let mut fields = parsed.nl.split(CONCODE_FIELD_SEP).map(str::trim);
        let nl = fields.next().unwrap_or_default().to_string();
        let split_elems = |field: Option<&str>| -> Vec<String> {
            field
                .map(|f| {
                    f.split(CONCODE_ELEM_SEP)
                        .map(|e| e.trim().to_string())
                        .filter(|e| !e.is_empty())
                        .collect()
                })
                .unwrap_or_default()
        };
        let member_variables = split_elems(fields.next());
        let member_functions = split_elems(fields.next());
        records.push(T2cRecord {
            id: format!("concode-{idx}"),
            nl,
            class_name: class_name.to_string(),
            member_variables,
            member_functions,
            code: parsed.code,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record_line(id: &str, nl: &str, code: &str) -> String {
        serde_json::json!({
            "id": id,
            "nl": nl,
            "class_name": "Util",
            "member_variables": ["int n"],
            "member_functions": ["String render()"],
            "code": code,
        })
        .to_string()
    }

    #[test]
    fn loads_single_t2c_record() {
        let line = record_line("1", "convert int to string", "String s = Integer.toString(n);");
        let got = parse_t2c(&line).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].kind(), TaskKind::T2C);
        assert_eq!(got[0].nl_description(), Some("convert int to string"));
        assert_eq!(got[0].environment().unwrap().class_name, "Util");
        assert_eq!(got[0].ground_truth, "String s = Integer.toString(n);");
        assert_eq!(got[0].source_code(), None);
    }

    #[test]
    fn empty_t2c_file_is_empty_corpus() {
        assert!(parse_t2c("").unwrap().is_empty());
    }

    #[test]
    fn missing_code_field_is_schema_error() {
        let line = r#"{"id":"1","nl":"x","class_name":"A","member_variables":[],"member_functions":[]}"#;
        match parse_t2c(line) {
            Err(CorpusError::Schema { line: 1, message }) => assert!(message.contains("code")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_names_line() {
        let text = format!("{}\n{{not json", record_line("1", "a", "int f(){return 1;}"));
        match parse_t2c(&text) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_and_empty_class_rejected() {
        let extra = r#"{"id":"1","nl":"x","class_name":"A","member_variables":[],"member_functions":[],"code":"c","path":"p"}"#;
        assert!(matches!(parse_t2c(extra), Err(CorpusError::Schema { .. })));
        let no_class = r#"{"id":"1","nl":"x","class_name":"","member_variables":[],"member_functions":[],"code":"c"}"#;
        assert!(matches!(parse_t2c(no_class), Err(CorpusError::Schema { .. })));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = format!("{}\n{}", record_line("1", "a", "x"), record_line("1", "b", "y"));
        assert!(matches!(parse_t2c(&text), Err(CorpusError::Schema { line: 2, .. })));
    }

    #[test]
    fn c2c_pairs_by_line() {
        let got = parse_c2c("String s = n.ToString();\n", "String s = Integer.toString(n);\n").unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].kind(), TaskKind::C2C);
        assert_eq!(got[0].source_code(), Some("String s = n.ToString();"));
        assert_eq!(got[0].ground_truth, "String s = Integer.toString(n);");
        assert!(got[0].nl_description().is_none());
    }

    #[test]
    fn c2c_empty_and_misaligned() {
        assert!(parse_c2c("", "").unwrap().is_empty());
        let src = "a\n".repeat(10);
        let tgt = "b\n".repeat(9);
        match parse_c2c(&src, &tgt) {
            Err(CorpusError::Alignment {
                source_lines,
                target_lines,
            }) => assert_eq!((source_lines, target_lines), (10, 9)),
            other => panic!("expected alignment error, got {other:?}"),
        }
    }

    fn corpus(n: usize) -> Vec<TaskInstance> {
        (0..n)
            .map(|i| TaskInstance::code_to_code(format!("id{i}"), "x", "y"))
            .collect()
    }

    #[test]
    fn sample_full_is_permutation() {
        let xs = corpus(25);
        let got = sample(&xs, 25, 3).unwrap();
        let mut ids: Vec<_> = got.iter().map(|t| t.id.clone()).collect();
        ids.sort();
        let mut expected: Vec<_> = xs.iter().map(|t| t.id.clone()).collect();
        expected.sort();
        assert_eq!(ids, expected);
    }

    #[test]
    fn sample_is_deterministic() {
        let xs = corpus(500);
        let a: Vec<_> = sample(&xs, 100, 42).unwrap().into_iter().map(|t| t.id).collect();
        let b: Vec<_> = sample(&xs, 100, 42).unwrap().into_iter().map(|t| t.id).collect();
        assert_eq!(a, b);
        let unique: HashSet<_> = a.iter().collect();
        assert_eq!(unique.len(), 100);
        let c: Vec<_> = sample(&xs, 100, 43).unwrap().into_iter().map(|t| t.id).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_too_many_is_error() {
        assert!(matches!(
            sample(&corpus(3), 4, 0),
            Err(CorpusError::SampleSize { requested: 4, available: 3 })
        ));
        assert!(sample(&corpus(3), 0, 0).is_err());
    }

    #[test]
    fn imports_concode_encoding() {
        let raw = r#"{"nl": "Get the namespace . concode_field_sep String namespaceURI concode_elem_sep int count concode_field_sep String getNamespaceURI concode_elem_sep void reset", "code": "String function ( ) { return namespaceURI ; }"}"#;
        let recs = import_concode(raw, "Config").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].nl, "Get the namespace .");
        assert_eq!(recs[0].member_variables, vec!["String namespaceURI", "int count"]);
        assert_eq!(recs[0].member_functions, vec!["String getNamespaceURI", "void reset"]);
        assert_eq!(recs[0].class_name, "Config");
        assert_eq!(recs[0].code, "String function ( ) { return namespaceURI ; }");
    }
}
