//! Plain-text file formats: score tables, fit traces, ROC curves, message
//! and lexicon files.
//!
//! Everything is UTF-8 and tab-separated. Floating-point values are written
//! with Rust's shortest round-trip formatting, so identical runs produce
//! byte-identical files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pvc_core::corpus::{Lexicon, Message};
use pvc_core::eval::RocResult;
use pvc_core::solver::FitTrace;

pub const KIND_BULLY: &str = "bully";
pub const KIND_VICTIM: &str = "victim";
pub const KIND_WORD: &str = "word";
pub const KIND_LIFT: &str = "lift";

/// One `kind<TAB>name<TAB>score` row.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub kind: String,
    pub name: String,
    pub score: f64,
}

impl ScoreRow {
    pub fn new(kind: &str, name: impl Into<String>, score: f64) -> Self {
        ScoreRow {
            kind: kind.to_string(),
            name: name.into(),
            score,
        }
    }
}

/// Serializes rows sorted by kind, then descending score, ties by name.
pub fn score_table_to_string(rows: &[ScoreRow]) -> String {
    let mut sorted: Vec<&ScoreRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.kind
            .cmp(&b.kind)
            .then_with(|| b.score.total_cmp(&a.score))
            .then_with(|| a.name.cmp(&b.name))
    });
    let mut out = String::new();
    for row in sorted {
        out.push_str(&format!("{}\t{}\t{}\n", row.kind, row.name, row.score));
    }
    out
}

pub fn write_score_table(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    fs::write(path, score_table_to_string(rows))
        .with_context(|| format!("writing score table {}", path.display()))
}

/// Reads a score table, validating the three-column shape and the kind tags.
pub fn read_score_table(path: &Path) -> Result<Vec<ScoreRow>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading score table {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            bail!(
                "{}:{line_no}: expected kind<TAB>name<TAB>score, got {} fields",
                path.display(),
                fields.len()
            );
        }
        let kind = fields[0];
        if ![KIND_BULLY, KIND_VICTIM, KIND_WORD].contains(&kind) {
            bail!("{}:{line_no}: unknown score kind {kind:?}", path.display());
        }
        if fields[1].is_empty() {
            bail!("{}:{line_no}: empty name field", path.display());
        }
        let score: f64 = fields[2]
            .parse()
            .with_context(|| format!("{}:{line_no}: bad score {:?}", path.display(), fields[2]))?;
        rows.push(ScoreRow::new(kind, fields[1], score));
    }
    Ok(rows)
}

/// One `iter<TAB>objective` line per recorded value, starting with the
/// initial objective as iteration 0.
pub fn write_trace(path: &Path, trace: &FitTrace) -> Result<()> {
    let mut out = String::new();
    for (i, objective) in trace.objectives.iter().enumerate() {
        out.push_str(&format!("{i}\t{objective}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing trace {}", path.display()))
}

/// `fpr<TAB>tpr` lines followed by a `# auc = <value>` comment.
pub fn write_roc(path: &Path, roc: &RocResult) -> Result<()> {
    let mut out = String::new();
    for (fpr, tpr) in &roc.points {
        out.push_str(&format!("{fpr}\t{tpr}\n"));
    }
    out.push_str(&format!("# auc = {}\n", roc.auc));
    fs::write(path, out).with_context(|| format!("writing ROC {}", path.display()))
}

pub fn write_messages(path: &Path, messages: &[Message]) -> Result<()> {
    let mut out = String::new();
    for m in messages {
        debug_assert!(!m.text.contains('\t') && !m.text.contains('\n'));
        out.push_str(&format!("{}\t{}\t{}\t{}\n", m.id, m.sender, m.receiver, m.text));
    }
    fs::write(path, out).with_context(|| format!("writing messages {}", path.display()))
}

pub fn write_lexicon(path: &Path, lexicon: &Lexicon) -> Result<()> {
    let mut out = String::new();
    for phrase in lexicon.iter() {
        out.push_str(phrase);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing lexicon {}", path.display()))
}
