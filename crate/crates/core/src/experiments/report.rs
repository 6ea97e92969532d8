use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::stats::{ComparisonTable, RoundStats, ScorePair, StatSummary};
use crate::metrics::MetricReport;

/// Provenance printed at the top of every report. Nothing in it depends
/// on the clock, so identical inputs give identical files.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportHeader {
    pub tool_version: String,
    /// Resolved configuration as TOML.
    pub config: String,
    pub seed: u64,
    pub fixture_digest: Option<String>,
    pub template_digest: Option<String>,
    pub aggregation: String,
    pub brevity_mode: String,
    pub bp_modes_diverge: bool,
}

impl ReportHeader {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("tool version", self.tool_version.clone()),
            ("seed", self.seed.to_string()),
            ("fixture digest", self.fixture_digest.clone().unwrap_or_else(|| "none".into())),
            ("template digest", self.template_digest.clone().unwrap_or_else(|| "none".into())),
            ("aggregation", self.aggregation.clone()),
            ("brevity penalty", self.brevity_mode.clone()),
            ("brevity modes diverge", self.bp_modes_diverge.to_string()),
        ]
    }

    /// Title line, header fields and the resolved config.
    pub fn markdown(&self, title: &str) -> String {
        let mut out = format!("# {title}\n\n");
        for (k, v) in self.fields() {
            let _ = writeln!(out, "- {k}: {v}");
        }
        if !self.config.trim().is_empty() {
            let _ = write!(out, "\n```toml\n{}\n```\n", self.config.trim_end());
        }
        out.push('\n');
        out
    }

    /// The same fields as `#` comment lines.
    pub fn csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "# {k}: {v}");
        }
        for line in self.config.lines() {
            let _ = writeln!(out, "# | {line}");
        }
        out
    }
}

fn score(x: f64) -> String {
    format!("{x:05.2}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per labelled report.
pub fn metric_markdown(rows: &[(String, MetricReport)]) -> String {
    let mut out = String::new();
    out.push_str("| Baseline | Pairs | BLEU | CodeBLEU | n-gram | weighted n-gram | AST match | data-flow match |\n");
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for (label, report) in rows {
        let s = &report.sub_scores;
        let _ = writeln!(
            out,
            "| {label} | {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
            report.n_pairs,
            score(report.bleu),
            score(report.codebleu),
            s.ngram,
            s.weighted_ngram,
            s.ast_match,
            s.dataflow_match
        );
    }
    if let Some((_, first)) = rows.first() {
        let _ = writeln!(out, "\nweights {}; empty data-flow: {}", first.weights, first.empty_dataflow);
        for (label, r) in rows {
            let _ = writeln!(
                out,
                "- {label}: brevity penalty {:.4} (paper-ratio) / {:.4} (standard)",
                r.bp_paper_ratio, r.bp_standard
            );
        }
    }
    out
}

pub fn metric_csv(rows: &[(String, MetricReport)]) -> String {
    let mut out = String::new();
    out.push_str("baseline,pairs,bleu,codebleu,ngram,weighted_ngram,ast_match,dataflow_match,bp_paper_ratio,bp_standard\n");
    for (label, report) in rows {
        let s = &report.sub_scores;
        let _ = writeln!(
            out,
            "{},{},{:.4},{:.4},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            csv_field(label),
            report.n_pairs,
            report.bleu,
            report.codebleu,
            s.ngram,
            s.weighted_ngram,
            s.ast_match,
            s.dataflow_match,
            report.bp_paper_ratio,
            report.bp_standard
        );
    }
    out
}

fn with_delta(value: f64, delta: Option<&str>) -> String {
    match delta {
        Some(d) => format!("{} ({d})", score(value)),
        None => score(value),
    }
}

pub fn comparison_markdown(table: &ComparisonTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Deltas are relative to {}.\n", table.baseline);
    out.push_str("| Baseline | BLEU | CodeBLEU |\n|---|---|---|\n");
    for row in &table.rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            row.label,
            with_delta(row.scores.bleu, row.bleu_delta.as_deref()),
            with_delta(row.scores.codebleu, row.codebleu_delta.as_deref())
        );
    }
    let notes: Vec<String> = table
        .rows
        .iter()
        .flat_map(|r| r.notes.iter().map(move |n| format!("- {}: {n}", r.label)))
        .collect();
    if !notes.is_empty() {
        out.push_str("\nNotes:\n\n");
        for n in notes {
            out.push_str(&n);
            out.push('\n');
        }
    }
    out
}

pub fn comparison_csv(table: &ComparisonTable) -> String {
    let mut out = String::new();
    out.push_str("baseline,bleu,bleu_delta,codebleu,codebleu_delta\n");
    for row in &table.rows {
        let _ = writeln!(
            out,
            "{},{:.2},{},{:.2},{}",
            csv_field(&row.label),
            row.scores.bleu,
            row.bleu_delta.as_deref().unwrap_or(""),
            row.scores.codebleu,
            row.codebleu_delta.as_deref().unwrap_or("")
        );
    }
    out
}

fn stat_rows(stats: &RoundStats) -> [(&'static str, f64, f64); 4] {
    let (b, c): (&StatSummary, &StatSummary) = (&stats.bleu, &stats.codebleu);
    [
        ("MIN", b.min, c.min),
        ("MAX", b.max, c.max),
        ("AVG", b.avg, c.avg),
        ("STD", b.std, c.std),
    ]
}

pub fn rounds_markdown(label: &str, rounds: &[ScorePair], stats: &RoundStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{label}, {} round(s).\n", rounds.len());
    out.push_str("| Round | BLEU | CodeBLEU |\n|---|---|---|\n");
    for (i, r) in rounds.iter().enumerate() {
        let _ = writeln!(out, "| R{} | {} | {} |", i + 1, score(r.bleu), score(r.codebleu));
    }
    for (name, b, c) in stat_rows(stats) {
        let _ = writeln!(out, "| {name} | {b:.2} | {c:.2} |");
    }
    out
}

pub fn rounds_csv(label: &str, rounds: &[ScorePair], stats: &RoundStats) -> String {
    let mut out = String::new();
    out.push_str("baseline,round,bleu,codebleu\n");
    let label = csv_field(label);
    for (i, r) in rounds.iter().enumerate() {
        let _ = writeln!(out, "{label},R{},{:.4},{:.4}", i + 1, r.bleu, r.codebleu);
    }
    for (name, b, c) in stat_rows(stats) {
        let _ = writeln!(out, "{label},{name},{b:.4},{c:.4}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::stats::{compare, summarize};

    fn header() -> ReportHeader {
        ReportHeader {
            tool_version: "0.1.0".into(),
            config: "task = \"t2c\"\nseed = 3".into(),
            seed: 3,
            fixture_digest: Some("abc".into()),
            template_digest: None,
            aggregation: "corpus".into(),
            brevity_mode: "paper-ratio".into(),
            bp_modes_diverge: false,
        }
    }

    #[test]
    fn comparison_cells() {
        let rows = vec![
            ("ChatGPT-task".to_string(), ScorePair::new(5.63, 28.05)),
            ("ChatGPT-behaviour".to_string(), ScorePair::new(21.59, 48.69)),
        ];
        let table = compare(&rows, "ChatGPT-task", &[]).unwrap();
        let md = header().markdown("Comparison") + &comparison_markdown(&table);
        assert!(md.contains("| ChatGPT-task | 05.63 | 28.05 |"), "{md}");
        assert!(md.contains("| ChatGPT-behaviour | 21.59 (+283.48%) | 48.69 (+73.58%) |"), "{md}");
        assert!(md.contains("- fixture digest: abc"));
        let csv = header().csv() + &comparison_csv(&table);
        assert!(csv.contains("\nChatGPT-behaviour,21.59,+283.48%,48.69,+73.58%\n"));
        assert!(csv.lines().all(|l| l.starts_with('#') || l.split(',').count() == 5));
    }

    #[test]
    fn rounds_table() {
        let rounds: Vec<ScorePair> = [(26.86, 50.18), (26.85, 50.07), (27.02, 50.18), (26.92, 50.20), (27.00, 50.17)]
            .iter()
            .map(|&(b, c)| ScorePair::new(b, c))
            .collect();
        let stats = RoundStats {
            bleu: summarize(&rounds.iter().map(|r| r.bleu).collect::<Vec<_>>()).unwrap(),
            codebleu: summarize(&rounds.iter().map(|r| r.codebleu).collect::<Vec<_>>()).unwrap(),
        };
        let md = rounds_markdown("ChatGPT-behaviour-C", &rounds, &stats);
        assert!(md.contains("| R5 | 27.00 | 50.17 |"));
        assert!(md.contains("| AVG | 26.93 | 50.16 |"));
        assert!(md.contains("| STD | 0.08 | 0.05 |"));
        let csv = rounds_csv("ChatGPT-behaviour-C", &rounds, &stats);
        assert!(csv.contains("ChatGPT-behaviour-C,MAX,27.0200,50.2000"));
    }
}
