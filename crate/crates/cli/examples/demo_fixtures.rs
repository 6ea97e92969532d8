//! Rebuilds `data/demo/fixtures` by recording every demo plan against a
//! deterministic stand-in for a chat model. No network access is involved.
//!
//!     cargo run -p codeprompt-cli --example demo_fixtures -- data/demo

use std::path::{Path, PathBuf};

use codeprompt_core::code_analysis::{extract_behaviour, CodeUnit, Language};
use codeprompt_core::corpus::TaskInstance;
use codeprompt_core::experiments::{self, BackendMode, ExperimentPlan, RunInputs};
use codeprompt_core::llm_gateway::{BackendError, ChatRequest, FixtureStore, FnBackend, RecordingBackend, RetryPolicy};
use codeprompt_core::prompt_forge::{extraction_prompt, ExtractionKind, Level};

fn is_word(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn replace_word(text: &str, from: &str, to: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find(from) {
        let before = rest[..pos].chars().last();
        let after = rest[pos + from.len()..].chars().next();
        out.push_str(&rest[..pos]);
        if before.is_some_and(is_word) || after.is_some_and(is_word) {
            out.push_str(from);
        } else {
            out.push_str(to);
        }
        rest = &rest[pos + from.len()..];
    }
    out.push_str(rest);
    out
}

/// Breaks a one-line method into indented lines.
fn pretty(code: &str) -> String {
    let mut lines = vec![String::new()];
    let (mut depth, mut parens, mut in_str) = (0usize, 0usize, false);
    let newline = |lines: &mut Vec<String>| {
        if !lines.last().unwrap().trim().is_empty() {
            lines.push(String::new());
        }
    };
    let mut prev = ' ';
    for c in code.chars() {
        if in_str {
            lines.last_mut().unwrap().push(c);
            if c == '"' && prev != '\\' {
                in_str = false;
            }
            prev = c;
            continue;
        }
        match c {
            '"' => {
                in_str = true;
                lines.last_mut().unwrap().push(c);
            }
            '(' => {
                parens += 1;
                lines.last_mut().unwrap().push(c);
            }
            ')' => {
                parens = parens.saturating_sub(1);
                lines.last_mut().unwrap().push(c);
            }
            '{' => {
                lines.last_mut().unwrap().push('{');
                depth += 1;
                newline(&mut lines);
            }
            '}' => {
                newline(&mut lines);
                depth = depth.saturating_sub(1);
                let last = lines.last_mut().unwrap();
                *last = format!("{}}}", "    ".repeat(depth));
                newline(&mut lines);
            }
            ';' if parens == 0 => {
                lines.last_mut().unwrap().push(';');
                newline(&mut lines);
            }
            ' ' if lines.last().unwrap().trim().is_empty() => {
                let last = lines.last_mut().unwrap();
                *last = "    ".repeat(depth);
            }
            _ => {
                let last = lines.last_mut().unwrap();
                if last.trim().is_empty() {
                    *last = "    ".repeat(depth);
                }
                last.push(c);
            }
        }
        prev = c;
    }
    lines
        .iter()
        .map(|l| l.trim_end())
        .filter(|l| !l.trim().is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Small plausible mistakes, picked by `choice`.
fn mutate(code: &str, choice: u8) -> String {
    let candidates: [(&str, &str); 6] = [
        (" + ", " - "),
        (" == ", " != "),
        ("return 1;", "return 0;"),
        (" <= ", " < "),
        ("this.", ""),
        (" > ", " >= "),
    ];
    for k in 0..candidates.len() {
        let (from, to) = candidates[(choice as usize + k) % candidates.len()];
        if code.contains(from) {
            return code.replacen(from, to, 1);
        }
    }
    code.to_string()
}

fn camel_name(nl: &str) -> String {
    let words: Vec<&str> = nl
        .split_whitespace()
        .filter(|w| w.chars().all(|c| c.is_ascii_alphabetic()))
        .take(3)
        .collect();
    let mut name = String::new();
    for (i, w) in words.iter().enumerate() {
        let w = w.to_ascii_lowercase();
        if i == 0 {
            name.push_str(&w);
        } else {
            let mut cs = w.chars();
            if let Some(f) = cs.next() {
                name.push(f.to_ascii_uppercase());
                name.extend(cs);
            }
        }
    }
    if name.is_empty() {
        "compute".into()
    } else {
        name
    }
}

/// Undoes the corpus normalization so the answer looks hand-written.
fn humanize(code: &str, nl: &str) -> String {
    const ARGS: [&str; 4] = ["input", "other", "extra", "last"];
    const LOCALS: [&str; 4] = ["result", "item", "line", "error"];
    let mut out = replace_word(code, "function", &camel_name(nl));
    for (i, a) in ARGS.iter().enumerate() {
        out = replace_word(&out, &format!("arg{i}"), a);
    }
    for (i, l) in LOCALS.iter().enumerate() {
        out = replace_word(&out, &format!("loc{i}"), l);
    }
    out
}

struct Responder {
    instances: Vec<TaskInstance>,
    api_lead: String,
    exc_lead: String,
}

impl Responder {
    fn new(instances: Vec<TaskInstance>) -> Self {
        let lead = |k| {
            let p = extraction_prompt(k, "x").unwrap();
            p[..p.len() - 1].to_string()
        };
        Responder {
            instances,
            api_lead: lead(ExtractionKind::ApiList),
            exc_lead: lead(ExtractionKind::ExceptionHandling),
        }
    }

    fn respond(&self, req: &ChatRequest) -> Result<String, BackendError> {
        let prompt = &req.messages.last().expect("a prompt").content;
        let key = req.key();
        let bits = u64::from_str_radix(&key[..16], 16).unwrap();
        let byte = |i: u32| ((bits >> (8 * i)) & 0xff) as u8;

        if let Some(code) = prompt.strip_prefix(&self.api_lead) {
            let spec = extract_behaviour(&CodeUnit::parse(Language::Java, code)).unwrap_or_default();
            return Ok(if spec.api_names().is_empty() {
                "None. The method does not call any other API.".into()
            } else {
                spec.api_names()
                    .iter()
                    .enumerate()
                    .map(|(i, n)| format!("{}. {n}", i + 1))
                    .collect::<Vec<_>>()
                    .join("\n")
            });
        }
        if let Some(code) = prompt.strip_prefix(&self.exc_lead) {
            let spec = extract_behaviour(&CodeUnit::parse(Language::Java, code)).unwrap_or_default();
            return Ok(if spec.uses_exceptions {
                "Yes, the code handles exceptions with a try-catch block.".into()
            } else {
                "No, the code does not contain exception handling.".into()
            });
        }

        let (index, inst) = self
            .instances
            .iter()
            .enumerate()
            .filter(|(_, i)| prompt.contains(i.nl_description().or(i.source_code()).unwrap_or("\u{0}")))
            .max_by_key(|(_, i)| i.nl_description().or(i.source_code()).map_or(0, str::len))
            .expect("prompt names a corpus instance");
        let c2c = inst.source_code().is_some();
        if c2c && index == 4 && req.round == 3 {
            return Err(BackendError::Transport {
                message: "connection reset by peer".into(),
                retryable: false,
            });
        }
        let level = if prompt.contains("exception handling") {
            Level::Behaviour
        } else if prompt.contains("remember you have") || prompt.contains("do not provide annotation") {
            Level::Detail
        } else {
            Level::TaskOnly
        };
        let concise = prompt.contains("concise");

        let mut code = match inst.nl_description() {
            Some(nl) => humanize(&inst.ground_truth, nl),
            None => inst.ground_truth.clone(),
        };
        let mistakes = match level {
            Level::TaskOnly => 2,
            Level::Detail => 1,
            Level::Behaviour => byte(1) as usize % 2,
        };
        for m in 0..mistakes {
            code = mutate(&code, byte(2 + m as u32));
        }
        if !c2c && !code.starts_with("public") && level != Level::Detail {
            code = format!("public {code}");
        }
        let mut body = pretty(&code);
        if !concise {
            let summary = inst.nl_description().unwrap_or("Translated from the C# original.");
            body = format!("/**\n * {summary}\n */\n{body}");
        }
        if c2c && level == Level::TaskOnly && byte(5) % 2 == 0 {
            let indented: Vec<String> = body.lines().map(|l| format!("    {l}")).collect();
            body = format!("public class Converted {{\n{}\n}}", indented.join("\n"));
        }
        let intro = if c2c {
            "Here is the equivalent Java code:"
        } else {
            "Here is a Java method that does this:"
        };
        let mut answer = format!("{intro}\n\n```java\n{body}\n```");
        if !concise {
            answer.push_str("\n\nThe method keeps the behaviour described above.");
        }
        Ok(answer)
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/demo".into()));
    let plans_dir = root.join("plans");
    let mut plans: Vec<PathBuf> = std::fs::read_dir(&plans_dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    plans.retain(|p| p.extension().is_some_and(|e| e == "toml"));
    plans.sort();
    for path in plans {
        record(&path)?;
    }
    Ok(())
}

fn record(path: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let plan = ExperimentPlan::load(path)?;
    assert_eq!(plan.backend.mode, BackendMode::Replay, "{}: demo plans replay", path.display());
    let instances = plan.load_corpus()?;
    let store = FixtureStore::create(plan.backend.fixtures.as_ref().expect("fixtures"))?;
    let responder = Responder::new(instances.clone());
    let live = FnBackend::new("demo-responder", move |r: &ChatRequest| responder.respond(r));
    let backend = RecordingBackend::new(live, store, RetryPolicy::none());
    let (specs, _) = experiments::prepare_behaviours(&plan, &instances, &backend)?;
    let inputs = RunInputs {
        instances: &instances,
        behaviours: Some(&specs),
    };
    let results = experiments::run(&plan, &inputs, &backend)?;
    for r in &results {
        println!(
            "{} ({}) round {}: BLEU {:.2} CodeBLEU {:.2}, {} skipped",
            path.file_name().unwrap().to_string_lossy(),
            r.label,
            r.round,
            r.report.bleu,
            r.report.codebleu,
            r.skipped.len()
        );
    }
    Ok(())
}
