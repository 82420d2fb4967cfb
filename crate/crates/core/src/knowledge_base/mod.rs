//! Concept-to-pattern knowledge base.
//!
//! The knowledge base is a CSV file with the header
//! `framework,concept_path,summary,pattern`. Output is canonical: RFC 4180
//! quoting only where needed, UTF-8, LF line endings. Loading and saving a
//! canonical file reproduces it byte for byte.

mod catalog;

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{seed_catalog, Catalog, Pattern, PatternOrigin, CATALOG_HEADER};

pub const KB_HEADER: [&str; 4] = ["framework", "concept_path", "summary", "pattern"];

#[derive(Debug, Error)]
pub enum KbError {
    #[error("line {line}: malformed CSV: {message}")]
    Csv { line: u64, message: String },
    #[error("unexpected header `{found}`, expected `{expected}`")]
    Header { expected: String, found: String },
    #[error("line {line}: unknown pattern `{pattern}`")]
    UnknownPattern { line: u64, pattern: String },
    #[error("line {line}: duplicate concept path `{path}` (first seen on line {first_line})")]
    DuplicatePath { line: u64, path: String, first_line: u64 },
    #[error("line {line}: {message}")]
    InvalidEntry { line: u64, message: String },
    #[error("catalog: {0}")]
    Catalog(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl KbError {
    pub(crate) fn from_csv(err: csv::Error, line: u64) -> Self {
        KbError::Csv {
            line,
            message: err.to_string(),
        }
    }
}

impl From<csv::Error> for KbError {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map_or(0, |p| p.line());
        KbError::from_csv(err, line)
    }
}

/// Source framework of a concept.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Framework {
    Classiq,
    PennyLane,
    Qiskit,
    Other(String),
}

impl Framework {
    /// Identifier used in CSV files.
    pub fn as_str(&self) -> &str {
        match self {
            Framework::Classiq => "classiq",
            Framework::PennyLane => "pennylane",
            Framework::Qiskit => "qiskit",
            Framework::Other(s) => s,
        }
    }

    /// Human-readable name used in reports.
    pub fn display_name(&self) -> &str {
        match self {
            Framework::Classiq => "Classiq",
            Framework::PennyLane => "PennyLane",
            Framework::Qiskit => "Qiskit",
            Framework::Other(s) => s,
        }
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Framework {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "classiq" => Framework::Classiq,
            "pennylane" => Framework::PennyLane,
            "qiskit" => Framework::Qiskit,
            other => Framework::Other(other.to_string()),
        })
    }
}

/// A documented, reusable framework component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub framework: Framework,
    /// Dot-separated path, e.g. `qiskit.circuit.library.QFTGate`.
    pub qualified_path: String,
    /// The definition's docstring.
    pub summary: String,
}

impl Concept {
    /// The segment after the last dot.
    pub fn terminal_name(&self) -> &str {
        terminal_segment(&self.qualified_path)
    }
}

pub fn terminal_segment(path: &str) -> &str {
    path.rsplit('.').next().unwrap_or(path)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBaseEntry {
    pub concept: Concept,
    pub pattern_name: String,
}

/// A validated mapping from concepts to catalog patterns.
///
/// Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    catalog: Catalog,
    entries: Vec<KnowledgeBaseEntry>,
    by_path: HashMap<String, usize>,
}

impl KnowledgeBase {
    /// Builds a knowledge base without validating it. Use [`validate_kb`]
    /// to check the invariants.
    pub fn from_parts(catalog: Catalog, entries: Vec<KnowledgeBaseEntry>) -> Self {
        let mut by_path = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            by_path.entry(e.concept.qualified_path.clone()).or_insert(i);
        }
        Self {
            catalog,
            entries,
            by_path,
        }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn entries(&self) -> &[KnowledgeBaseEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, concept_path: &str) -> Option<&KnowledgeBaseEntry> {
        self.by_path.get(concept_path).map(|&i| &self.entries[i])
    }

    /// Distinct pattern names used by entries, in first-use order.
    pub fn used_patterns(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.entries
            .iter()
            .map(|e| e.pattern_name.as_str())
            .filter(|p| seen.insert(*p))
            .collect()
    }

    /// Writes the canonical CSV form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), KbError> {
        let mut wtr = csv_writer(writer);
        wtr.write_record(KB_HEADER)?;
        for e in &self.entries {
            wtr.write_record([
                e.concept.framework.as_str(),
                e.concept.qualified_path.as_str(),
                e.concept.summary.as_str(),
                e.pattern_name.as_str(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(writer)
}

#[derive(Debug, Deserialize)]
struct KbRow {
    framework: String,
    concept_path: String,
    summary: String,
    pattern: String,
}

/// Loads and validates a knowledge base CSV against `catalog`.
///
/// Line numbers in errors count the header as line 1.
pub fn load_kb<R: Read>(csv_source: R, catalog: &Catalog) -> Result<KnowledgeBase, KbError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(csv_source);
    let headers = rdr.headers().map_err(|e| KbError::from_csv(e, 1))?.clone();
    if headers.iter().ne(KB_HEADER.iter().copied()) {
        return Err(KbError::Header {
            expected: KB_HEADER.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut entries = Vec::new();
    let mut first_line: HashMap<String, u64> = HashMap::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            KbError::from_csv(e, line)
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let row: KbRow = record
            .deserialize(Some(&headers))
            .map_err(|e| KbError::from_csv(e, line))?;

        if !catalog.contains(&row.pattern) {
            return Err(KbError::UnknownPattern {
                line,
                pattern: row.pattern,
            });
        }
        if let Err(message) = check_path(&row.concept_path) {
            return Err(KbError::InvalidEntry { line, message });
        }
        if row.summary.trim().is_empty() {
            return Err(KbError::InvalidEntry {
                line,
                message: format!("empty summary for `{}`", row.concept_path),
            });
        }
        if let Some(&first) = first_line.get(&row.concept_path) {
            return Err(KbError::DuplicatePath {
                line,
                path: row.concept_path,
                first_line: first,
            });
        }
        first_line.insert(row.concept_path.clone(), line);

        let framework = row.framework.parse().unwrap_or_else(|e| match e {});
        entries.push(KnowledgeBaseEntry {
            concept: Concept {
                framework,
                qualified_path: row.concept_path,
                summary: row.summary,
            },
            pattern_name: row.pattern,
        });
    }
    Ok(KnowledgeBase::from_parts(catalog.clone(), entries))
}

fn check_path(path: &str) -> Result<(), String> {
    if path.trim().is_empty() {
        return Err("empty concept path".into());
    }
    if terminal_segment(path).is_empty() {
        return Err(format!("concept path `{path}` has an empty terminal segment"));
    }
    Ok(())
}

/// Which invariant a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    UnknownPattern,
    DuplicatePath,
    EmptySummary,
    EmptyPath,
    EmptyTerminalSegment,
    /// Warning only: a pattern name matches a catalog entry after case-folding.
    PatternCaseMismatch,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::UnknownPattern => "unknown_pattern",
            Rule::DuplicatePath => "duplicate_path",
            Rule::EmptySummary => "empty_summary",
            Rule::EmptyPath => "empty_path",
            Rule::EmptyTerminalSegment => "empty_terminal_segment",
            Rule::PatternCaseMismatch => "pattern_case_mismatch",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Zero-based index into [`KnowledgeBase::entries`].
    pub index: usize,
    pub rule: Rule,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if self.violations.is_empty() {
            out.push_str("knowledge base OK\n");
        }
        for v in &self.violations {
            out.push_str(&format!("error\tentry {}\t{}\t{}\n", v.index, v.rule, v.detail));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning\tentry {}\t{}\t{}\n", w.index, w.rule, w.detail));
        }
        out
    }
}

/// Checks every knowledge base invariant and reports all violations.
pub fn validate_kb(kb: &KnowledgeBase) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (index, entry) in kb.entries.iter().enumerate() {
        let path = entry.concept.qualified_path.as_str();
        if path.trim().is_empty() {
            report.violations.push(Violation {
                index,
                rule: Rule::EmptyPath,
                detail: "concept path is empty".into(),
            });
        } else if terminal_segment(path).is_empty() {
            report.violations.push(Violation {
                index,
                rule: Rule::EmptyTerminalSegment,
                detail: format!("`{path}` ends with a dot"),
            });
        }
        if entry.concept.summary.trim().is_empty() {
            report.violations.push(Violation {
                index,
                rule: Rule::EmptySummary,
                detail: format!("`{path}` has no summary"),
            });
        }
        if !kb.catalog.contains(&entry.pattern_name) {
            report.violations.push(Violation {
                index,
                rule: Rule::UnknownPattern,
                detail: format!("`{}` is not in the catalog", entry.pattern_name),
            });
            if let Some(p) = kb.catalog.find_case_insensitive(&entry.pattern_name) {
                report.warnings.push(Violation {
                    index,
                    rule: Rule::PatternCaseMismatch,
                    detail: format!("`{}` differs from `{}` only by case", entry.pattern_name, p.name),
                });
            }
        }
        match seen.get(path) {
            Some(&first) => report.violations.push(Violation {
                index,
                rule: Rule::DuplicatePath,
                detail: format!("`{path}` already used by entry {first}"),
            }),
            None => {
                seen.insert(path, index);
            }
        }
    }
    report
}
