//! Prompt templates and their assembly into per-instance chat messages.
//!
//! Templates carry `#{Slot}` markers that are filled from a task instance
//! and, for behaviour prompts, a [`BehaviourSpec`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::code_analysis::BehaviourSpec;
use crate::corpus::{TaskInstance, TaskKind};

/// Bumped whenever a built-in template string changes.
pub const TEMPLATE_VERSION: &str = "1";

const T2C_TASK: &str = "write a Java method that #{NL}";
const T2C_CONTEXT: &str =
    "remember you have a Java class named '#{CN}', member variables '#{MV}', member functions '#{MF}'";
const T2C_PROCESSING: &str = "remove comments; remove summary; remove throws; remove function modifiers; change method name to \"function\"; change argument names to \"arg0\", \"arg1\"...; change local variable names to \"loc0\", \"loc1\"...";
const T2C_BEHAVIOUR: &str = "write a Java method#{ApiList} #{ExceptionFlag} exception handling to #{NL}";
const C2C_TASK: &str = "translate C# code into Java code: #{Code}";
const C2C_PROCESSING: &str = "do not provide annotation";
const C2C_UPDATED_TASK: &str =
    "translate C# code delimited by triple backticks into Java code: '''#{Code}'''";
const C2C_BEHAVIOUR: &str =
    "translate C# code into Java code: '''#{Code}'''#{ApiList} #{ExceptionFlag} exception handling";

const API_LIST_PROMPT: &str =
    "list the used methods with names only in the following Java methods and do not explain: ";
const EXCEPTION_PROMPT: &str = "does the code contain exception handling? ";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("slot #{{{slot}}} has no value for {part} ({task})")]
    MissingSlot {
        slot: Slot,
        part: PartKind,
        task: TaskKind,
    },
    #[error("template for {part} ({task}) uses unknown marker `{marker}`")]
    UnknownMarker {
        marker: String,
        part: PartKind,
        task: TaskKind,
    },
    #[error("{part} has no template for {task}")]
    NoTemplate { part: PartKind, task: TaskKind },
    #[error("behaviour prompt requested without a behaviour spec")]
    MissingBehaviour,
    #[error("behaviour spec supplied for a {0} prompt")]
    UnexpectedBehaviour(Level),
    #[error("instance {id} is {found}, not {expected}")]
    TaskMismatch {
        id: String,
        expected: TaskKind,
        found: TaskKind,
    },
    #[error("extraction prompt needs non-empty code")]
    EmptyCode,
    #[error("template override line {line}: {message}")]
    Override { line: usize, message: String },
    #[error("reading template overrides: {0}")]
    Io(#[from] std::io::Error),
}

/// Prompt categories P1 to P5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartKind {
    Task,
    Context,
    Processing,
    UpdatedTask,
    Behaviour,
}

impl PartKind {
    pub const ALL: [PartKind; 5] = [
        PartKind::Task,
        PartKind::Context,
        PartKind::Processing,
        PartKind::UpdatedTask,
        PartKind::Behaviour,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PartKind::Task => "P1",
            PartKind::Context => "P2",
            PartKind::Processing => "P3",
            PartKind::UpdatedTask => "P4",
            PartKind::Behaviour => "P5",
        }
    }

    fn key(self) -> &'static str {
        match self {
            PartKind::Task => "task",
            PartKind::Context => "context",
            PartKind::Processing => "processing",
            PartKind::UpdatedTask => "updated_task",
            PartKind::Behaviour => "behaviour",
        }
    }

    /// Context is T2C-only, the updated task prompt C2C-only.
    pub fn applies_to(self, task: TaskKind) -> bool {
        !matches!(
            (self, task),
            (PartKind::Context, TaskKind::C2C) | (PartKind::UpdatedTask, TaskKind::T2C)
        )
    }
}

impl fmt::Display for PartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.label(), self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    NL,
    CN,
    MV,
    MF,
    Code,
    ApiList,
    ExceptionFlag,
}

impl Slot {
    pub fn marker(self) -> &'static str {
        match self {
            Slot::NL => "NL",
            Slot::CN => "CN",
            Slot::MV => "MV",
            Slot::MF => "MF",
            Slot::Code => "Code",
            Slot::ApiList => "ApiList",
            Slot::ExceptionFlag => "ExceptionFlag",
        }
    }

    fn from_marker(name: &str) -> Option<Slot> {
        [
            Slot::NL,
            Slot::CN,
            Slot::MV,
            Slot::MF,
            Slot::Code,
            Slot::ApiList,
            Slot::ExceptionFlag,
        ]
        .into_iter()
        .find(|s| s.marker() == name)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.marker())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    #[serde(rename = "task", alias = "task_only")]
    TaskOnly,
    Detail,
    Behaviour,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::TaskOnly => "task",
            Level::Detail => "detail",
            Level::Behaviour => "behaviour",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "task" | "task_only" | "taskonly" => Ok(Level::TaskOnly),
            "detail" => Ok(Level::Detail),
            "behaviour" | "behavior" => Ok(Level::Behaviour),
            other => Err(format!("unknown prompt level `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PromptVariant {
    pub level: Level,
    #[serde(default)]
    pub concise: bool,
}

impl PromptVariant {
    pub fn new(level: Level, concise: bool) -> Self {
        PromptVariant { level, concise }
    }

    /// `detail`, `behaviour-C` and so on; `C` marks the concise form.
    pub fn label(&self) -> String {
        if self.concise {
            format!("{}-C", self.level)
        } else {
            self.level.to_string()
        }
    }

    /// Part sequence for a task.
    pub fn recipe(&self, task: TaskKind) -> &'static [PartKind] {
        use PartKind::*;
        match (task, self.level) {
            (TaskKind::T2C, Level::TaskOnly) => &[Task],
            (TaskKind::T2C, Level::Detail) => &[Context, Task, Processing],
            (TaskKind::T2C, Level::Behaviour) => &[Context, Behaviour, Processing],
            (TaskKind::C2C, Level::TaskOnly) => &[Task],
            (TaskKind::C2C, Level::Detail) => &[UpdatedTask, Processing],
            (TaskKind::C2C, Level::Behaviour) => &[Behaviour, Processing],
        }
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub parts: Vec<(PartKind, String)>,
    pub variant: PromptVariant,
    pub task: TaskKind,
    pub instance_id: String,
}

impl PromptBundle {
    pub fn kinds(&self) -> Vec<PartKind> {
        self.parts.iter().map(|(k, _)| *k).collect()
    }

    /// `P2+P1+P3` style recipe name.
    pub fn recipe(&self) -> String {
        self.parts
            .iter()
            .map(|(k, _)| k.label())
            .collect::<Vec<_>>()
            .join("+")
    }

    /// All parts as one user message, newline separated.
    pub fn message(&self) -> String {
        self.parts
            .iter()
            .map(|(_, t)| t.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractionKind {
    ApiList,
    ExceptionHandling,
}

/// Prompt asking the model to describe a ground-truth method.
pub fn extraction_prompt(kind: ExtractionKind, code: &str) -> Result<String, PromptError> {
    if code.trim().is_empty() {
        return Err(PromptError::EmptyCode);
    }
    let lead = match kind {
        ExtractionKind::ApiList => API_LIST_PROMPT,
        ExtractionKind::ExceptionHandling => EXCEPTION_PROMPT,
    };
    Ok(format!("{lead}{code}"))
}

/// Where the word "concise" goes for each task.
fn concise_anchor(task: TaskKind) -> &'static str {
    match task {
        TaskKind::T2C => "Java method",
        TaskKind::C2C => "Java code",
    }
}

enum Piece<'t> {
    Text(&'t str),
    Slot(Slot),
}

fn split_template(
    template: &str,
    part: PartKind,
    task: TaskKind,
) -> Result<Vec<Piece<'_>>, PromptError> {
    let mut pieces = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find("#{") {
        pieces.push(Piece::Text(&rest[..open]));
        let after = &rest[open + 2..];
        let close = after.find('}').ok_or_else(|| PromptError::UnknownMarker {
            marker: rest[open..].to_string(),
            part,
            task,
        })?;
        let name = &after[..close];
        let slot = Slot::from_marker(name).ok_or_else(|| PromptError::UnknownMarker {
            marker: format!("#{{{name}}}"),
            part,
            task,
        })?;
        pieces.push(Piece::Slot(slot));
        rest = &after[close + 1..];
    }
    pieces.push(Piece::Text(rest));
    Ok(pieces)
}

/// The built-in templates, optionally with overrides applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<(TaskKind, PartKind), String>,
    overridden: Vec<String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        let mut templates = BTreeMap::new();
        for (task, part, text) in [
            (TaskKind::T2C, PartKind::Task, T2C_TASK),
            (TaskKind::T2C, PartKind::Context, T2C_CONTEXT),
            (TaskKind::T2C, PartKind::Processing, T2C_PROCESSING),
            (TaskKind::T2C, PartKind::Behaviour, T2C_BEHAVIOUR),
            (TaskKind::C2C, PartKind::Task, C2C_TASK),
            (TaskKind::C2C, PartKind::Processing, C2C_PROCESSING),
            (TaskKind::C2C, PartKind::UpdatedTask, C2C_UPDATED_TASK),
            (TaskKind::C2C, PartKind::Behaviour, C2C_BEHAVIOUR),
        ] {
            templates.insert((task, part), text.to_string());
        }
        TemplateSet {
            templates,
            overridden: Vec::new(),
        }
    }
}

impl TemplateSet {
    /// Applies an override file. Each section starts with a `[task.part]`
    /// header line (e.g. `[t2c.context]`); the following lines up to the
    /// next header, minus surrounding blank lines, replace that template.
    /// Lines starting with `;;` are comments.
    pub fn with_overrides(mut self, text: &str) -> Result<Self, PromptError> {
        let mut current: Option<((TaskKind, PartKind), String, Vec<&str>)> = None;
        let mut sections = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.starts_with(";;") {
                continue;
            }
            if trimmed.starts_with('[') && trimmed.ends_with(']') {
                if let Some(done) = current.take() {
                    sections.push(done);
                }
                let key = &trimmed[1..trimmed.len() - 1];
                current = Some((parse_key(key, idx + 1)?, key.to_string(), Vec::new()));
                continue;
            }
            match current.as_mut() {
                Some((_, _, body)) => body.push(line),
                None if trimmed.is_empty() => {}
                None => {
                    return Err(PromptError::Override {
                        line: idx + 1,
                        message: "text before the first [task.part] header".into(),
                    })
                }
            }
        }
        sections.extend(current);
        for (slot, key, body) in sections {
            let body = body.join("\n").trim_matches('\n').to_string();
            split_template(&body, slot.1, slot.0)?;
            self.templates.insert(slot, body);
            self.overridden.push(key);
        }
        Ok(self)
    }

    pub fn from_override_file(path: impl AsRef<Path>) -> Result<Self, PromptError> {
        Self::default().with_overrides(&std::fs::read_to_string(path)?)
    }

    pub fn template(&self, task: TaskKind, part: PartKind) -> Option<&str> {
        self.templates.get(&(task, part)).map(String::as_str)
    }

    /// Section keys replaced by overrides, in file order.
    pub fn overridden(&self) -> &[String] {
        &self.overridden
    }

    /// Hex SHA-256 over all templates, for run provenance.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(TEMPLATE_VERSION.as_bytes());
        for ((task, part), text) in &self.templates {
            hasher.update([0u8]);
            hasher.update(format!("{task}.{}", part.key()).as_bytes());
            hasher.update([0u8]);
            hasher.update(text.as_bytes());
        }
        hex::encode(hasher.finalize())
    }

    /// Renders one prompt part for `instance`.
    pub fn render_part(
        &self,
        part: PartKind,
        task: TaskKind,
        instance: &TaskInstance,
        behaviour: Option<&BehaviourSpec>,
        concise: bool,
    ) -> Result<String, PromptError> {
        if instance.kind() != task {
            return Err(PromptError::TaskMismatch {
                id: instance.id.clone(),
                expected: task,
                found: instance.kind(),
            });
        }
        if part == PartKind::Behaviour && behaviour.is_none() {
            return Err(PromptError::MissingBehaviour);
        }
        let template = self
            .template(task, part)
            .filter(|_| part.applies_to(task))
            .ok_or(PromptError::NoTemplate { part, task })?;
        let template = if concise {
            let anchor = concise_anchor(task);
            template.replacen(anchor, &format!("concise {anchor}"), 1)
        } else {
            template.to_string()
        };

        let mut out = String::new();
        for piece in split_template(&template, part, task)? {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(slot) => out.push_str(&slot_value(slot, instance, behaviour).ok_or(
                    PromptError::MissingSlot { slot, part, task },
                )?),
            }
        }
        Ok(out)
    }

    /// Renders the part sequence for `variant`. A behaviour spec must be
    /// given exactly when the variant is at the behaviour level.
    pub fn assemble(
        &self,
        variant: PromptVariant,
        task: TaskKind,
        instance: &TaskInstance,
        behaviour: Option<&BehaviourSpec>,
    ) -> Result<PromptBundle, PromptError> {
        match (variant.level, behaviour) {
            (Level::Behaviour, None) => return Err(PromptError::MissingBehaviour),
            (level, Some(_)) if level != Level::Behaviour => {
                return Err(PromptError::UnexpectedBehaviour(level))
            }
            _ => {}
        }
        let parts = variant
            .recipe(task)
            .iter()
            .map(|&kind| {
                self.render_part(kind, task, instance, behaviour, variant.concise)
                    .map(|text| (kind, text))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PromptBundle {
            parts,
            variant,
            task,
            instance_id: instance.id.clone(),
        })
    }
}

fn parse_key(key: &str, line: usize) -> Result<(TaskKind, PartKind), PromptError> {
    let bad = |message: String| PromptError::Override { line, message };
    let (task, part) = key
        .split_once('.')
        .ok_or_else(|| bad(format!("section `{key}` is not of the form task.part")))?;
    let task: TaskKind = task.parse().map_err(|e| bad(format!("{e}")))?;
    let part = PartKind::ALL
        .into_iter()
        .find(|p| p.key() == part || p.label().eq_ignore_ascii_case(part))
        .ok_or_else(|| bad(format!("unknown prompt part `{part}`")))?;
    if !part.applies_to(task) {
        return Err(bad(format!("{part} does not exist for {task}")));
    }
    Ok((task, part))
}

fn slot_value(slot: Slot, instance: &TaskInstance, behaviour: Option<&BehaviourSpec>) -> Option<String> {
    match slot {
        Slot::NL => instance.nl_description().map(str::to_string),
        Slot::CN => instance.environment().map(|e| e.class_name.clone()),
        Slot::MV => instance.environment().map(|e| e.member_variables.join(", ")),
        Slot::MF => instance.environment().map(|e| e.member_functions.join(", ")),
        Slot::Code => instance.source_code().map(str::to_string),
        Slot::ApiList => behaviour.map(|b| {
            if b.api_names().is_empty() {
                String::new()
            } else {
                format!(" that calls {}", b.api_names().join(", "))
            }
        }),
        Slot::ExceptionFlag => behaviour.map(|b| if b.uses_exceptions { "with" } else { "without" }.to_string()),
    }
}

/// [`TemplateSet::render_part`] with the built-in templates.
pub fn render_part(
    part: PartKind,
    task: TaskKind,
    instance: &TaskInstance,
    behaviour: Option<&BehaviourSpec>,
    concise: bool,
) -> Result<String, PromptError> {
    TemplateSet::default().render_part(part, task, instance, behaviour, concise)
}

/// [`TemplateSet::assemble`] with the built-in templates.
pub fn assemble(
    variant: PromptVariant,
    task: TaskKind,
    instance: &TaskInstance,
    behaviour: Option<&BehaviourSpec>,
) -> Result<PromptBundle, PromptError> {
    TemplateSet::default().assemble(variant, task, instance, behaviour)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CodeEnvironment;

    fn t2c(nl: &str) -> TaskInstance {
        TaskInstance::text_to_code(
            "t-1",
            nl,
            CodeEnvironment {
                class_name: "Util".into(),
                member_variables: vec!["int n".into(), "String s".into()],
                member_functions: vec!["size".into()],
            },
            "int function(){return n;}",
        )
    }

    fn c2c(code: &str) -> TaskInstance {
        TaskInstance::code_to_code("c-1", code, "int f(){return 1;}")
    }

    #[test]
    fn task_prompt_example() {
        let got = render_part(PartKind::Task, TaskKind::T2C, &t2c("converts int to string"), None, false).unwrap();
        assert_eq!(got, "write a Java method that converts int to string");
    }

    #[test]
    fn concise_behaviour_without_apis() {
        let spec = BehaviourSpec::new(Vec::<String>::new(), false);
        let got = render_part(PartKind::Behaviour, TaskKind::T2C, &t2c("D"), Some(&spec), true).unwrap();
        assert_eq!(got, "write a concise Java method without exception handling to D");
    }

    #[test]
    fn behaviour_with_apis() {
        let spec = BehaviourSpec::new(["toString", "valueOf"], true);
        let got = render_part(PartKind::Behaviour, TaskKind::T2C, &t2c("D"), Some(&spec), false).unwrap();
        assert_eq!(got, "write a Java method that calls toString, valueOf with exception handling to D");
        let got = render_part(PartKind::Behaviour, TaskKind::C2C, &c2c("C"), Some(&spec), false).unwrap();
        assert_eq!(got, "translate C# code into Java code: '''C''' that calls toString, valueOf with exception handling");
    }

    #[test]
    fn updated_task_example() {
        let got = render_part(PartKind::UpdatedTask, TaskKind::C2C, &c2c("C"), None, false).unwrap();
        assert_eq!(got, "translate C# code delimited by triple backticks into Java code: '''C'''");
        let got = render_part(PartKind::UpdatedTask, TaskKind::C2C, &c2c("C"), None, true).unwrap();
        assert_eq!(got, "translate C# code delimited by triple backticks into concise Java code: '''C'''");
    }

    #[test]
    fn context_lists_are_joined() {
        let got = render_part(PartKind::Context, TaskKind::T2C, &t2c("D"), None, false).unwrap();
        assert_eq!(
            got,
            "remember you have a Java class named 'Util', member variables 'int n, String s', member functions 'size'"
        );
    }

    #[test]
    fn slot_contents_are_not_rescanned() {
        let got = render_part(PartKind::Task, TaskKind::C2C, &c2c("var s = \"#{NL}\";"), None, false).unwrap();
        assert_eq!(got, "translate C# code into Java code: var s = \"#{NL}\";");
    }

    #[test]
    fn recipes() {
        let inst = t2c("D");
        let spec = BehaviourSpec::new(["a"], false);
        let detail = assemble(PromptVariant::new(Level::Detail, false), TaskKind::T2C, &inst, None).unwrap();
        assert_eq!(detail.kinds(), [PartKind::Context, PartKind::Task, PartKind::Processing]);
        assert_eq!(detail.recipe(), "P2+P1+P3");
        assert_eq!(detail.message().lines().count(), 3);

        let c = c2c("C");
        let beh = assemble(PromptVariant::new(Level::Behaviour, false), TaskKind::C2C, &c, Some(&spec)).unwrap();
        assert_eq!(beh.kinds(), [PartKind::Behaviour, PartKind::Processing]);
        let task = assemble(PromptVariant::new(Level::TaskOnly, false), TaskKind::C2C, &c, None).unwrap();
        assert_eq!(
            task.parts,
            vec![(PartKind::Task, render_part(PartKind::Task, TaskKind::C2C, &c, None, false).unwrap())]
        );
        let detail = assemble(PromptVariant::new(Level::Detail, false), TaskKind::C2C, &c, None).unwrap();
        assert_eq!(detail.recipe(), "P4+P3");
    }

    #[test]
    fn no_cross_task_parts() {
        for level in [Level::TaskOnly, Level::Detail, Level::Behaviour] {
            let v = PromptVariant::new(level, false);
            assert!(!v.recipe(TaskKind::C2C).contains(&PartKind::Context));
            assert!(!v.recipe(TaskKind::T2C).contains(&PartKind::UpdatedTask));
        }
        assert!(matches!(
            render_part(PartKind::Context, TaskKind::C2C, &c2c("C"), None, false),
            Err(PromptError::NoTemplate { .. })
        ));
    }

    #[test]
    fn concise_changes_one_word() {
        let spec = BehaviourSpec::new(["a"], true);
        for (task, inst) in [(TaskKind::T2C, t2c("D")), (TaskKind::C2C, c2c("C"))] {
            for level in [Level::TaskOnly, Level::Detail, Level::Behaviour] {
                let b = (level == Level::Behaviour).then_some(&spec);
                let plain = assemble(PromptVariant::new(level, false), task, &inst, b).unwrap().message();
                let concise = assemble(PromptVariant::new(level, true), task, &inst, b).unwrap().message();
                assert_eq!(concise.replacen("concise ", "", 1), plain);
                assert_eq!(concise.matches("concise").count(), 1);
            }
        }
    }

    #[test]
    fn behaviour_mismatch_errors() {
        let inst = t2c("D");
        let spec = BehaviourSpec::default();
        assert!(matches!(
            assemble(PromptVariant::new(Level::Behaviour, false), TaskKind::T2C, &inst, None),
            Err(PromptError::MissingBehaviour)
        ));
        assert!(matches!(
            assemble(PromptVariant::new(Level::Detail, false), TaskKind::T2C, &inst, Some(&spec)),
            Err(PromptError::UnexpectedBehaviour(Level::Detail))
        ));
        assert!(matches!(
            assemble(PromptVariant::new(Level::Detail, false), TaskKind::C2C, &inst, None),
            Err(PromptError::TaskMismatch { .. })
        ));
    }

    #[test]
    fn extraction_prompts() {
        assert_eq!(
            extraction_prompt(ExtractionKind::ApiList, "return x.size();").unwrap(),
            "list the used methods with names only in the following Java methods and do not explain: return x.size();"
        );
        assert_eq!(
            extraction_prompt(ExtractionKind::ExceptionHandling, "C").unwrap(),
            "does the code contain exception handling? C"
        );
        assert!(matches!(extraction_prompt(ExtractionKind::ApiList, ""), Err(PromptError::EmptyCode)));
    }

    #[test]
    fn overrides_replace_templates() {
        let set = TemplateSet::default()
            .with_overrides(";; ablation\n[t2c.context]\nremember you have a Java class named + '#{CN}'\n\n[c2c.P3]\ndo not provide annotations\n")
            .unwrap();
        assert_eq!(set.overridden(), ["t2c.context", "c2c.P3"]);
        let got = set.render_part(PartKind::Context, TaskKind::T2C, &t2c("D"), None, false).unwrap();
        assert_eq!(got, "remember you have a Java class named + 'Util'");
        assert_ne!(set.digest(), TemplateSet::default().digest());
        assert_eq!(TemplateSet::default().digest(), TemplateSet::default().digest());
    }

    #[test]
    fn bad_overrides() {
        let err = |text: &str| TemplateSet::default().with_overrides(text).unwrap_err();
        assert!(matches!(err("stray\n[t2c.task]\nx"), PromptError::Override { line: 1, .. }));
        assert!(matches!(err("[c2c.context]\nx"), PromptError::Override { .. }));
        assert!(matches!(err("[t2c.task]\nwrite #{Name}"), PromptError::UnknownMarker { .. }));
    }

    #[test]
    fn missing_slot_names_slot() {
        let set = TemplateSet::default()
            .with_overrides("[t2c.task]\nwrite #{Code}")
            .unwrap();
        let e = set.render_part(PartKind::Task, TaskKind::T2C, &t2c("D"), None, false).unwrap_err();
        assert!(e.to_string().contains("#{Code}"), "{e}");
    }
}
