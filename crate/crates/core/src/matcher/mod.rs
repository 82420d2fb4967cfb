//! Name and summary matching of scripts against the knowledge base.

mod calls;
mod comments;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

pub use calls::{extract_call_names, mask_magics};
pub use comments::extract_comment_block;

use crate::embedding::{embed_texts, matches_above, EmbeddingError, EmbeddingProvider, EmbeddingVector};
use crate::fsutil::list_files;
use crate::knowledge_base::{csv_writer, KnowledgeBase};

pub const MATCHES_FILE: &str = "quantum_concept_matches_with_patterns.csv";
pub const SKIPPED_FILE: &str = "skipped_files.csv";
pub const MATCHES_HEADER: [&str; 6] = ["file_path", "concept_path", "pattern_name", "match_type", "matched_text", "score"];
pub const SKIPPED_HEADER: [&str; 2] = ["path", "reason"];
/// Longest `matched_text` written to the match CSV, in characters.
pub const MATCHED_TEXT_LIMIT: usize = 500;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("invalid matcher configuration: {0}")]
    Config(String),
    #[error("converted root `{0}` does not exist")]
    MissingRoot(PathBuf),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("while matching `{file}`: {source}")]
    Embedding {
        file: String,
        #[source]
        source: EmbeddingError,
    },
    #[error("building concept index: {0}")]
    Index(#[source] EmbeddingError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchType {
    Name,
    Summary,
}

impl MatchType {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchType::Name => "name",
            MatchType::Summary => "summary",
        }
    }
}

impl fmt::Display for MatchType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatchType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "name" => Ok(MatchType::Name),
            "summary" => Ok(MatchType::Summary),
            other => Err(format!("unknown match type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub file_path: String,
    pub concept_path: String,
    pub pattern_name: String,
    pub match_type: MatchType,
    pub matched_text: String,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatcherConfig {
    pub name_threshold: f64,
    pub summary_threshold: f64,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self {
            name_threshold: 0.95,
            summary_threshold: 0.7,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        for (label, t) in [("name", self.name_threshold), ("summary", self.summary_threshold)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(MatchError::Config(format!("{label} threshold {t} is outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Embedded KB: terminal names for the name channel, summaries for the
/// summary channel. Both are keyed by entry position in the KB.
pub struct ConceptIndex<'kb> {
    kb: &'kb KnowledgeBase,
    names: Vec<(usize, EmbeddingVector)>,
    summaries: Vec<(usize, EmbeddingVector)>,
}

impl<'kb> ConceptIndex<'kb> {
    pub fn build(kb: &'kb KnowledgeBase, provider: &dyn EmbeddingProvider) -> Result<Self, MatchError> {
        let entries = kb.entries();
        let names: Vec<&str> = entries.iter().map(|e| e.concept.terminal_name()).collect();
        let summaries: Vec<&str> = entries.iter().map(|e| e.concept.summary.as_str()).collect();
        let name_vecs = embed_texts(provider, &names).map_err(MatchError::Index)?;
        let summary_vecs = embed_texts(provider, &summaries).map_err(MatchError::Index)?;
        Ok(Self {
            kb,
            names: name_vecs.into_iter().enumerate().collect(),
            summaries: summary_vecs.into_iter().enumerate().collect(),
        })
    }

    pub fn knowledge_base(&self) -> &KnowledgeBase {
        self.kb
    }

    /// Hits sorted by score descending, concept path ascending.
    fn lookup(&self, index: &[(usize, EmbeddingVector)], query: &EmbeddingVector, threshold: f64) -> Vec<(usize, f64)> {
        let mut hits = matches_above(query, index, threshold);
        let entries = self.kb.entries();
        hits.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| entries[a.0].concept.qualified_path.cmp(&entries[b.0].concept.qualified_path))
        });
        hits
    }

    fn to_match(&self, file: &str, entry: usize, match_type: MatchType, text: &str, score: f64) -> Match {
        let e = &self.kb.entries()[entry];
        Match {
            file_path: file.to_string(),
            concept_path: e.concept.qualified_path.clone(),
            pattern_name: e.pattern_name.clone(),
            match_type,
            matched_text: text.to_string(),
            score,
        }
    }
}

/// Result of matching one script. `parse_error` is set when the call
/// channel could not run; the summary channel still did.
#[derive(Debug, Clone, PartialEq)]
pub struct FileMatches {
    pub matches: Vec<Match>,
    pub parse_error: Option<String>,
}

/// Runs both channels over one script's text.
pub fn match_source(
    file_path: &str,
    source: &str,
    index: &ConceptIndex<'_>,
    provider: &dyn EmbeddingProvider,
    cfg: &MatcherConfig,
) -> Result<FileMatches, MatchError> {
    let wrap = |source: EmbeddingError| MatchError::Embedding {
        file: file_path.to_string(),
        source,
    };
    let mut matches = Vec::new();
    let mut parse_error = None;

    match extract_call_names(source) {
        Ok(calls) => {
            let mut seen = HashSet::new();
            let distinct: Vec<String> = calls.into_iter().filter(|c| seen.insert(c.clone())).collect();
            let vectors = embed_texts(provider, &distinct).map_err(wrap)?;
            for (name, vector) in distinct.iter().zip(&vectors) {
                for (entry, score) in index.lookup(&index.names, vector, cfg.name_threshold) {
                    matches.push(index.to_match(file_path, entry, MatchType::Name, name, score));
                }
            }
        }
        Err(e) => parse_error = Some(e.to_string()),
    }

    let block = extract_comment_block(source);
    if !block.trim().is_empty() {
        let vector = embed_texts(provider, &[block.as_str()]).map_err(wrap)?.remove(0);
        for (entry, score) in index.lookup(&index.summaries, &vector, cfg.summary_threshold) {
            matches.push(index.to_match(file_path, entry, MatchType::Summary, &block, score));
        }
    }

    let mut seen = HashSet::new();
    matches.retain(|m| seen.insert((m.concept_path.clone(), m.match_type, m.matched_text.clone())));
    Ok(FileMatches { matches, parse_error })
}

/// Reads and matches a script. `file_path` is the label written to the CSV.
pub fn match_file(
    script: &Path,
    file_path: &str,
    index: &ConceptIndex<'_>,
    provider: &dyn EmbeddingProvider,
    cfg: &MatcherConfig,
) -> Result<FileMatches, MatchError> {
    let source = fs::read_to_string(script).map_err(|source| MatchError::Io {
        path: script.to_path_buf(),
        source,
    })?;
    match_source(file_path, &source, index, provider, cfg)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusMatches {
    pub matches: Vec<Match>,
    /// Files with a problem: unreadable (no matches) or unparseable
    /// (summary channel only).
    pub skipped: Vec<(String, String)>,
    pub scanned_files: Vec<String>,
}

/// Matches every `.py` script under `converted_root` in lexicographic path
/// order. Files are processed in parallel; output order is fixed.
pub fn match_corpus(
    converted_root: &Path,
    index: &ConceptIndex<'_>,
    provider: &dyn EmbeddingProvider,
    cfg: &MatcherConfig,
) -> Result<CorpusMatches, MatchError> {
    cfg.validate()?;
    if !converted_root.is_dir() {
        return Err(MatchError::MissingRoot(converted_root.to_path_buf()));
    }
    let (files, walk_warnings) = list_files(converted_root, "py", &[]);
    let results: Vec<Result<FileMatches, MatchError>> = files
        .par_iter()
        .map(|f| match_file(&f.path, &f.relative, index, provider, cfg))
        .collect();

    let mut out = CorpusMatches::default();
    for w in walk_warnings {
        out.skipped.push((w.path.display().to_string(), w.message));
    }
    for (file, result) in files.iter().zip(results) {
        out.scanned_files.push(file.relative.clone());
        match result {
            Ok(fm) => {
                if let Some(reason) = fm.parse_error {
                    warn!(file = %file.relative, "call extraction skipped: {reason}");
                    out.skipped.push((file.relative.clone(), reason));
                }
                out.matches.extend(fm.matches);
            }
            Err(MatchError::Io { source, .. }) => {
                warn!(file = %file.relative, "unreadable: {source}");
                out.skipped.push((file.relative.clone(), format!("unreadable: {source}")));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Truncates to [`MATCHED_TEXT_LIMIT`] characters, marking the cut with `…`.
pub fn truncate_matched_text(text: &str) -> String {
    match text.char_indices().nth(MATCHED_TEXT_LIMIT) {
        Some((cut, _)) => format!("{}…", &text[..cut]),
        None => text.to_string(),
    }
}

pub fn write_matches_csv<W: Write>(matches: &[Match], writer: W) -> Result<(), MatchError> {
    let mut wtr = csv_writer(writer);
    wtr.write_record(MATCHES_HEADER)?;
    for m in matches {
        wtr.write_record([
            m.file_path.as_str(),
            m.concept_path.as_str(),
            m.pattern_name.as_str(),
            m.match_type.as_str(),
            &truncate_matched_text(&m.matched_text),
            &format!("{:.4}", m.score),
        ])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_skipped_csv<W: Write>(skipped: &[(String, String)], writer: W) -> Result<(), MatchError> {
    let mut wtr = csv_writer(writer);
    wtr.write_record(SKIPPED_HEADER)?;
    for (path, reason) in skipped {
        wtr.write_record([path, reason])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::HashedEmbedding;
    use crate::knowledge_base::{load_kb, seed_catalog};

    const KB: &str = "framework,concept_path,summary,pattern\n\
classiq,classiq.open_library.functions.hadamard_transform,Apply a Hadamard gate to every qubit of the register.,Uniform Superposition\n\
classiq,classiq.open_library.functions.qft,Quantum Fourier transform on a register.,Basis Change\n";

    fn kb() -> KnowledgeBase {
        load_kb(KB.as_bytes(), &seed_catalog()).unwrap()
    }

    #[test]
    fn identical_call_name_scores_one() {
        let kb = kb();
        let p = HashedEmbedding::default();
        let index = ConceptIndex::build(&kb, &p).unwrap();
        let out = match_source("a.py", "hadamard_transform(q)\nhadamard_transform(q)\n", &index, &p, &MatcherConfig::default()).unwrap();
        assert_eq!(out.matches.len(), 1);
        let m = &out.matches[0];
        assert_eq!(m.match_type, MatchType::Name);
        assert_eq!(m.pattern_name, "Uniform Superposition");
        assert_eq!(format!("{:.4}", m.score), "1.0000");
    }

    #[test]
    fn verbatim_docstring_comment_matches_summary() {
        let kb = kb();
        let p = HashedEmbedding::default();
        let index = ConceptIndex::build(&kb, &p).unwrap();
        let out = match_source("a.py", "# Quantum Fourier transform on a register.\nx = 1\n", &index, &p, &MatcherConfig::default()).unwrap();
        assert_eq!(out.matches.len(), 1);
        assert_eq!(out.matches[0].match_type, MatchType::Summary);
        assert!(out.matches[0].score > 0.999_999);
    }

    #[test]
    fn empty_script_has_no_matches() {
        let kb = kb();
        let p = HashedEmbedding::default();
        let index = ConceptIndex::build(&kb, &p).unwrap();
        let out = match_source("a.py", "", &index, &p, &MatcherConfig::default()).unwrap();
        assert!(out.matches.is_empty() && out.parse_error.is_none());
    }

    #[test]
    fn parse_failure_keeps_summary_channel() {
        let kb = kb();
        let p = HashedEmbedding::default();
        let index = ConceptIndex::build(&kb, &p).unwrap();
        let out = match_source("a.py", "# Quantum Fourier transform on a register.\ndef (:\n", &index, &p, &MatcherConfig::default()).unwrap();
        assert!(out.parse_error.is_some());
        assert_eq!(out.matches.len(), 1);
    }

    #[test]
    fn truncation_marks_cut() {
        let long = "é".repeat(MATCHED_TEXT_LIMIT + 3);
        let t = truncate_matched_text(&long);
        assert_eq!(t.chars().count(), MATCHED_TEXT_LIMIT + 1);
        assert!(t.ends_with('…'));
        assert_eq!(truncate_matched_text("short"), "short");
    }

    #[test]
    fn thresholds_validated() {
        assert!(MatcherConfig { name_threshold: 0.0, summary_threshold: 0.7 }.validate().is_err());
        assert!(MatcherConfig { name_threshold: 1.0, summary_threshold: 0.7 }.validate().is_ok());
    }
}
