use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pipeline::RoundResult;
use super::ExperimentError;
use crate::metrics::MetricReport;

pub const INSTANCES_FILE: &str = "instances.jsonl";
pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const SKIPPED_FILE: &str = "skipped.json";
pub const PAIRS_DIR: &str = "pairs";

const CANDIDATE_EXT: &str = ".candidate.java";
const REFERENCE_EXT: &str = ".reference.java";

/// A candidate/reference pair as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairFile {
    pub id: String,
    pub candidate: String,
    pub reference: String,
}

/// Contents of `report.json` in a round directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u32,
    pub label: String,
    pub skipped: usize,
    pub report: MetricReport,
}

/// Round reports found under a run directory, ordered by round.
#[derive(Debug, Clone, PartialEq)]
pub struct RunDir {
    pub root: PathBuf,
    pub rounds: Vec<RoundReport>,
}

impl RunDir {
    pub fn label(&self) -> Option<&str> {
        self.rounds.first().map(|r| r.label.as_str())
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_') { c } else { '_' })
        .collect()
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|e| ExperimentError::io(path, e))
}

fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("serializable");
        out.push(b'\n');
    }
    out
}

pub fn write_pair_dir(dir: &Path, pairs: &[PairFile]) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let mut seen = BTreeMap::new();
    for pair in pairs {
        let stem = sanitize(&pair.id);
        if let Some(other) = seen.insert(stem.clone(), pair.id.clone()) {
            return Err(ExperimentError::MalformedPairs(vec![format!(
                "ids {other} and {} share the file name {stem}",
                pair.id
            )]));
        }
        write_file(&dir.join(format!("{stem}{CANDIDATE_EXT}")), pair.candidate.as_bytes())?;
        write_file(&dir.join(format!("{stem}{REFERENCE_EXT}")), pair.reference.as_bytes())?;
    }
    Ok(())
}

/// Reads `<id>.candidate.java` / `<id>.reference.java` pairs, sorted by id.
/// Unpaired files, other files and non-UTF-8 contents are all reported
/// together.
pub fn load_pair_dir(dir: &Path) -> Result<Vec<PairFile>, ExperimentError> {
    let entries = fs::read_dir(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let mut candidates = BTreeMap::new();
    let mut references = BTreeMap::new();
    let mut problems = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| ExperimentError::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        let (map, stem) = if let Some(stem) = name.strip_suffix(CANDIDATE_EXT) {
            (&mut candidates, stem.to_string())
        } else if let Some(stem) = name.strip_suffix(REFERENCE_EXT) {
            (&mut references, stem.to_string())
        } else {
            problems.push(format!("{name}: not a .candidate.java or .reference.java file"));
            continue;
        };
        let bytes = fs::read(&path).map_err(|e| ExperimentError::io(&path, e))?;
        match String::from_utf8(bytes) {
            Ok(text) => {
                map.insert(stem, text);
            }
            Err(_) => problems.push(format!("{name}: not valid UTF-8")),
        }
    }
    for stem in candidates.keys().filter(|k| !references.contains_key(*k)) {
        problems.push(format!("{stem}: candidate without reference"));
    }
    for stem in references.keys().filter(|k| !candidates.contains_key(*k)) {
        problems.push(format!("{stem}: reference without candidate"));
    }
    if !problems.is_empty() {
        problems.sort();
        return Err(ExperimentError::MalformedPairs(problems));
    }
    if candidates.is_empty() {
        return Err(ExperimentError::EmptyCorpus);
    }
    Ok(candidates
        .into_iter()
        .map(|(id, candidate)| {
            let reference = references.remove(&id).unwrap_or_default();
            PairFile { id, candidate, reference }
        })
        .collect())
}

/// Writes `round-<n>/` under `root` and returns its path.
pub fn persist_round(root: &Path, result: &RoundResult) -> Result<PathBuf, ExperimentError> {
    let dir = root.join(format!("round-{}", result.round));
    fs::create_dir_all(&dir).map_err(|e| ExperimentError::io(&dir, e))?;
    write_file(&dir.join(INSTANCES_FILE), &jsonl(&result.instances))?;
    write_file(&dir.join(TRANSCRIPTS_FILE), &jsonl(&result.transcripts))?;
    let skipped = serde_json::to_vec_pretty(&result.skipped).expect("serializable");
    write_file(&dir.join(SKIPPED_FILE), &skipped)?;
    let report = RoundReport {
        round: result.round,
        label: result.label.clone(),
        skipped: result.skipped.len(),
        report: result.report.clone(),
    };
    let mut body = serde_json::to_vec_pretty(&report).expect("serializable");
    body.write_all(b"\n").expect("in memory");
    write_file(&dir.join(REPORT_FILE), &body)?;
    let pairs: Vec<PairFile> = result
        .instances
        .iter()
        .map(|i| PairFile {
            id: i.id.clone(),
            candidate: i.normalized_code.clone(),
            reference: i.reference.clone(),
        })
        .collect();
    write_pair_dir(&dir.join(PAIRS_DIR), &pairs)?;
    Ok(dir)
}

pub fn read_round_report(dir: &Path) -> Result<RoundReport, ExperimentError> {
    let path = dir.join(REPORT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| ExperimentError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::io(&path, e))
}

/// `round-<n>` directories under `root`, ordered by n.
pub fn round_dirs(root: &Path) -> Result<Vec<(u32, PathBuf)>, ExperimentError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| ExperimentError::io(root, e))? {
        let entry = entry.map_err(|e| ExperimentError::io(root, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(n) = name.strip_prefix("round-").and_then(|n| n.parse::<u32>().ok()) {
            if entry.path().is_dir() {
                out.push((n, entry.path()));
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn load_run_dir(root: &Path) -> Result<RunDir, ExperimentError> {
    let rounds = round_dirs(root)?
        .iter()
        .map(|(_, dir)| read_round_report(dir))
        .collect::<Result<Vec<_>, _>>()?;
    if rounds.is_empty() {
        return Err(ExperimentError::NoRounds);
    }
    Ok(RunDir {
        root: root.to_path_buf(),
        rounds,
    })
}
