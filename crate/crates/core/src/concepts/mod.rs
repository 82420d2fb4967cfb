//! Concept extraction from framework source trees and de-duplication.

mod dedup;
mod extract;

use std::fmt;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge_base::{csv_writer, Concept, Framework};

pub use dedup::{dedup_exact, dedup_semantic, name_key, DEFAULT_CLUSTER_THRESHOLD};
pub use extract::{extract_concepts, Extraction, ExtractionWarning};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("source root `{0}` does not exist")]
    MissingRoot(PathBuf),
    #[error("public API list not found in `{0}`")]
    MissingApiList(PathBuf),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
}

impl From<csv::Error> for ExtractError {
    fn from(e: csv::Error) -> Self {
        ExtractError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptKind {
    Callable,
    TypeDefinition,
    Method,
}

impl ConceptKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConceptKind::Callable => "callable",
            ConceptKind::TypeDefinition => "type_definition",
            ConceptKind::Method => "method",
        }
    }
}

impl fmt::Display for ConceptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConceptKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "callable" => Ok(ConceptKind::Callable),
            "type_definition" => Ok(ConceptKind::TypeDefinition),
            "method" => Ok(ConceptKind::Method),
            other => Err(format!("unknown concept kind `{other}`")),
        }
    }
}

/// A concept as found in source, before pattern assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawConcept {
    pub concept: Concept,
    pub kind: ConceptKind,
    pub deprecated: bool,
    /// Defining file, relative to the source root.
    pub origin_file: PathBuf,
}

impl RawConcept {
    pub fn qualified_path(&self) -> &str {
        &self.concept.qualified_path
    }

    pub fn summary(&self) -> &str {
        &self.concept.summary
    }
}

/// Which definitions a rule collects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inclusion {
    /// Names listed in the package initializer's `__all__`, resolved to
    /// their definitions through the import graph.
    PublicApiList,
    /// Every class with a docstring, at any nesting depth.
    DocumentedTypeDefinitions,
    /// Module-level classes and functions with a docstring.
    DocumentedPublicDefinitions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRule {
    pub framework: Framework,
    /// Package directory to scan, relative to the source root.
    pub root_relative_path: PathBuf,
    pub inclusion: Inclusion,
    /// Directories skipped during the scan, relative to `root_relative_path`.
    pub excluded_subdirs: Vec<PathBuf>,
    pub exclude_underscore_prefixed: bool,
    /// Run the exact and semantic de-duplication stages after extraction.
    pub deduplicate: bool,
}

impl ExtractionRule {
    pub fn classiq() -> Self {
        Self {
            framework: Framework::Classiq,
            root_relative_path: PathBuf::from("classiq/open_library/functions"),
            inclusion: Inclusion::PublicApiList,
            excluded_subdirs: Vec::new(),
            exclude_underscore_prefixed: false,
            deduplicate: false,
        }
    }

    pub fn pennylane() -> Self {
        Self {
            framework: Framework::PennyLane,
            root_relative_path: PathBuf::from("pennylane/templates"),
            inclusion: Inclusion::DocumentedTypeDefinitions,
            excluded_subdirs: Vec::new(),
            exclude_underscore_prefixed: false,
            deduplicate: false,
        }
    }

    pub fn qiskit() -> Self {
        Self {
            framework: Framework::Qiskit,
            root_relative_path: PathBuf::from("qiskit/circuit/library"),
            inclusion: Inclusion::DocumentedPublicDefinitions,
            excluded_subdirs: vec![PathBuf::from("standard_gates"), PathBuf::from("templates")],
            exclude_underscore_prefixed: true,
            deduplicate: true,
        }
    }

    /// The built-in rule for a known framework.
    pub fn builtin(framework: &Framework) -> Option<Self> {
        match framework {
            Framework::Classiq => Some(Self::classiq()),
            Framework::PennyLane => Some(Self::pennylane()),
            Framework::Qiskit => Some(Self::qiskit()),
            Framework::Other(_) => None,
        }
    }
}

pub const CONCEPTS_HEADER: [&str; 5] = ["framework", "concept_path", "summary", "kind", "deprecated"];

/// Writes the per-framework concept list.
pub fn write_concepts_csv<W: Write>(concepts: &[RawConcept], writer: W) -> Result<(), ExtractError> {
    let mut wtr = csv_writer(writer);
    wtr.write_record(CONCEPTS_HEADER)?;
    for c in concepts {
        wtr.write_record([
            c.concept.framework.as_str(),
            c.concept.qualified_path.as_str(),
            c.concept.summary.as_str(),
            c.kind.as_str(),
            if c.deprecated { "true" } else { "false" },
        ])?;
    }
    wtr.flush().map_err(|source| ExtractError::Io {
        path: PathBuf::from("<concepts csv>"),
        source,
    })?;
    Ok(())
}

#[derive(Deserialize)]
struct ConceptRow {
    framework: String,
    concept_path: String,
    summary: String,
    kind: String,
    deprecated: String,
}

/// Reads a concept list written by [`write_concepts_csv`]. `origin_file` is
/// not part of the file and comes back empty.
pub fn read_concepts_csv<R: Read>(reader: R) -> Result<Vec<RawConcept>, ExtractError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<ConceptRow>() {
        let row = row?;
        let kind = row.kind.parse().map_err(|message| ExtractError::Csv { line: 0, message })?;
        out.push(RawConcept {
            concept: Concept {
                framework: row.framework.parse().unwrap_or_else(|e| match e {}),
                qualified_path: row.concept_path,
                summary: row.summary,
            },
            kind,
            deprecated: row.deprecated == "true",
            origin_file: PathBuf::new(),
        });
    }
    Ok(out)
}
