//! The pattern catalog: named solution blueprints that concepts are mapped to.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::KbError;

/// Where a catalog entry comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternOrigin {
    /// Inherited unchanged from the upstream pattern atlas.
    Atlas,
    /// Replaces several atlas entries with one broader pattern.
    Unified,
    /// Introduced while classifying framework concepts.
    New,
}

impl PatternOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            PatternOrigin::Atlas => "atlas",
            PatternOrigin::Unified => "unified",
            PatternOrigin::New => "new",
        }
    }
}

impl fmt::Display for PatternOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternOrigin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "atlas" => Ok(PatternOrigin::Atlas),
            "unified" => Ok(PatternOrigin::Unified),
            "new" => Ok(PatternOrigin::New),
            other => Err(format!("unknown pattern origin `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub name: String,
    pub description: String,
    pub origin: PatternOrigin,
}

impl Pattern {
    pub fn new(name: impl Into<String>, description: impl Into<String>, origin: PatternOrigin) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            origin,
        }
    }
}

/// An ordered set of patterns with unique names.
///
/// Names are stored case-preserving and looked up exactly; two names that
/// differ only by case are rejected on insertion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    patterns: Vec<Pattern>,
    by_name: HashMap<String, usize>,
    by_folded: HashMap<String, usize>,
}

#[derive(Debug, Deserialize)]
struct CatalogRow {
    name: String,
    description: String,
    origin: String,
}

pub const CATALOG_HEADER: [&str; 3] = ["name", "description", "origin"];

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Pattern> {
        self.patterns.iter()
    }

    pub fn get(&self, name: &str) -> Option<&Pattern> {
        self.by_name.get(name).map(|&i| &self.patterns[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    /// Finds a pattern whose name equals `name` after case-folding.
    pub fn find_case_insensitive(&self, name: &str) -> Option<&Pattern> {
        self.by_folded
            .get(&fold(name))
            .map(|&i| &self.patterns[i])
    }

    pub fn insert(&mut self, pattern: Pattern) -> Result<(), KbError> {
        if pattern.name.trim().is_empty() {
            return Err(KbError::Catalog("pattern name must not be empty".into()));
        }
        let folded = fold(&pattern.name);
        if let Some(&i) = self.by_folded.get(&folded) {
            return Err(KbError::Catalog(format!(
                "pattern `{}` collides with existing `{}`",
                pattern.name, self.patterns[i].name
            )));
        }
        let idx = self.patterns.len();
        self.by_name.insert(pattern.name.clone(), idx);
        self.by_folded.insert(folded, idx);
        self.patterns.push(pattern);
        Ok(())
    }

    /// Reads a `name,description,origin` catalog file.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, KbError> {
        let mut catalog = Catalog::new();
        catalog.extend_from_csv(reader)?;
        Ok(catalog)
    }

    /// Merges a catalog file into this catalog.
    ///
    /// Rows whose name is already present (exact match) are skipped, so a
    /// complete catalog file can be layered on top of the seed.
    pub fn extend_from_csv<R: Read>(&mut self, reader: R) -> Result<usize, KbError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers().map_err(|e| KbError::from_csv(e, 1))?.clone();
        if headers.iter().ne(CATALOG_HEADER.iter().copied()) {
            return Err(KbError::Header {
                expected: CATALOG_HEADER.join(","),
                found: headers.iter().collect::<Vec<_>>().join(","),
            });
        }
        let mut added = 0;
        for result in rdr.deserialize::<CatalogRow>() {
            let row = result.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                KbError::from_csv(e, line)
            })?;
            if self.contains(&row.name) {
                continue;
            }
            let origin = row.origin.parse().map_err(KbError::Catalog)?;
            self.insert(Pattern::new(row.name, row.description, origin))?;
            added += 1;
        }
        Ok(added)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), KbError> {
        let mut wtr = super::csv_writer(writer);
        wtr.write_record(CATALOG_HEADER)?;
        for p in &self.patterns {
            wtr.write_record([p.name.as_str(), p.description.as_str(), p.origin.as_str()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn fold(name: &str) -> String {
    name.trim().to_lowercase()
}

/// The built-in pattern catalog.
///
/// Holds the unified and newly introduced patterns plus the atlas patterns
/// used by the bundled knowledge bases. Other atlas entries are loaded from a
/// catalog file with [`Catalog::extend_from_csv`].
pub fn seed_catalog() -> Catalog {
    let mut catalog = Catalog::new();
    for &(name, origin, description) in SEED {
        catalog
            .insert(Pattern::new(name, description, origin))
            .expect("seed catalog names are unique");
    }
    catalog
}

use PatternOrigin::{Atlas, New, Unified};

const SEED: &[(&str, PatternOrigin, &str)] = &[
    ("Basis Change", Unified, "Transforms a state between computational bases, covering Fourier, Hadamard, cosine and sine transforms."),
    ("Data Encoding", Unified, "Maps classical data onto a quantum state by any encoding method."),
    ("Quantum Amplitude Estimation", New, "Estimates the probability amplitude of a marked outcome."),
    ("Linear Combination of Unitaries", New, "Builds an operator as a weighted sum of unitaries selected through an ancilla register."),
    ("Quantum Arithmetic", New, "Performs integer arithmetic such as addition or multiplication on basis-encoded registers."),
    ("Quantum Logical Operators", New, "Computes Boolean functions such as AND, OR and XOR on quantum registers."),
    ("Circuit Construction Utility", New, "Helper routines for assembling and rearranging circuits rather than full algorithms."),
    ("Domain Specific Application", New, "Composite subroutine solving a problem from a particular application domain."),
    ("Hamiltonian Simulation", New, "Approximates the time evolution generated by a Hamiltonian, e.g. by product formulas."),
    ("Initialization", Atlas, "Prepares the starting state of a register."),
    ("Uniform Superposition", Atlas, "Puts a register into an equal-weight superposition of all basis states."),
    ("Creating Entanglement", Atlas, "Entangles qubits of a register."),
    ("Oracle", Atlas, "Black-box operation that marks solution states."),
    ("Amplitude Amplification", Atlas, "Increases the probability of measuring marked states."),
    ("Function Table", Atlas, "Evaluates a classical function on all inputs held in superposition."),
    ("Uncompute", Atlas, "Reverses intermediate computation to release ancilla qubits."),
    ("Schmidt Decomposition", Atlas, "Prepares states using their Schmidt decomposition across a bipartition."),
    ("Quantum Phase Estimation (QPE)", Atlas, "Estimates the eigenphase of a unitary operator."),
    ("Grover", Atlas, "Unstructured search by repeated oracle and diffusion steps."),
    ("Variational Quantum Algorithm (VQA)", Atlas, "Parameterised circuit optimised by a classical loop."),
    ("Variational Quantum Eigensolver (VQE)", Atlas, "Variational search for the ground-state energy of a Hamiltonian."),
    ("Quantum Approximate Optimization Algorithm (QAOA)", Atlas, "Alternating cost and mixer layers for combinatorial optimisation."),
    ("Quantum Singular Value Transformation (QSVT)", Atlas, "Applies polynomial transformations to the singular values of a block-encoded operator."),
    ("Quantum Neural Network (QNN)", Atlas, "Trainable parameterised circuit used as a machine learning model."),
    ("Quantum Kernel Estimation (QKE)", Atlas, "Evaluates kernel functions through state overlaps."),
    ("Quantum Clustering", Atlas, "Groups data points with a quantum subroutine."),
    ("Error Correction", Atlas, "Detects and fixes errors through redundant encoding."),
    ("Readout Error Mitigation", Atlas, "Reduces errors introduced by measurement."),
    ("Gate Error Mitigation", Atlas, "Reduces errors caused by noisy gate execution."),
    ("Circuit Cutting", Atlas, "Splits a circuit into smaller fragments that fit available devices."),
    ("Gate Cut", Atlas, "Circuit cutting by decomposing a multi-qubit gate."),
    ("Wire Cut", Atlas, "Circuit cutting by interrupting a qubit wire."),
    ("Standalone Circuit Execution", Atlas, "Runs a single circuit on a backend."),
    ("Orchestrated Execution", Atlas, "Runs hybrid applications through workflow orchestration."),
    ("Quantum Hardware Selection", Atlas, "Chooses a suitable backend for a given workload."),
    ("Quantum Module", Atlas, "Packages a quantum algorithm as a reusable component."),
    ("Quantum Module Template", Atlas, "Reusable skeleton for building quantum modules."),
    ("Hybrid Module", Atlas, "Bundles quantum and classical parts into one module."),
    ("Quantum Circuit Translation", Atlas, "Converts circuits between representations for interoperability."),
    ("Quantum-Classic Split", Atlas, "Separates the classical and quantum parts of an application."),
    ("Quantum Middleware Layer", Atlas, "Mediates between classical systems and quantum resources."),
    ("Quantum Application Testing", Atlas, "Tests quantum programs at several levels."),
];

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    const REFINED_PATTERNS: [&str; 9] = [
        "Basis Change",
        "Circuit Construction Utility",
        "Data Encoding",
        "Domain Specific Application",
        "Hamiltonian Simulation",
        "Linear Combination of Unitaries",
        "Quantum Amplitude Estimation",
        "Quantum Arithmetic",
        "Quantum Logical Operators",
    ];

    #[test]
    fn seed_has_exactly_the_nine_new_or_unified_patterns() {
        let catalog = seed_catalog();
        let refined: HashSet<&str> = catalog
            .iter()
            .filter(|p| p.origin != PatternOrigin::Atlas)
            .map(|p| p.name.as_str())
            .collect();
        assert_eq!(refined, REFINED_PATTERNS.into_iter().collect());
        assert_eq!(catalog.get("Basis Change").unwrap().origin, PatternOrigin::Unified);
        assert_eq!(catalog.get("Data Encoding").unwrap().origin, PatternOrigin::Unified);
    }

    #[test]
    fn seed_contains_gap_patterns() {
        let catalog = seed_catalog();
        assert!(catalog.contains("Function Table"));
        assert!(catalog.contains("Schmidt Decomposition"));
    }

    #[test]
    fn seed_names_distinct_after_case_folding() {
        let catalog = seed_catalog();
        let folded: HashSet<String> = catalog.iter().map(|p| p.name.to_lowercase()).collect();
        assert_eq!(folded.len(), catalog.len());
        assert!(catalog.len() <= 61);
    }

    #[test]
    fn seed_is_deterministic() {
        assert_eq!(seed_catalog(), seed_catalog());
    }

    #[test]
    fn extension_file_skips_known_and_adds_new() {
        let mut catalog = seed_catalog();
        let before = catalog.len();
        let data = "name,description,origin\nOracle,dup,atlas\nPost-Selective Measurement,keeps selected shots,atlas\n";
        let added = catalog.extend_from_csv(data.as_bytes()).unwrap();
        assert_eq!(added, 1);
        assert_eq!(catalog.len(), before + 1);
    }

    #[test]
    fn extension_rejects_case_folded_collision() {
        let mut catalog = seed_catalog();
        let data = "name,description,origin\noracle,dup,atlas\n";
        assert!(catalog.extend_from_csv(data.as_bytes()).is_err());
    }

    #[test]
    fn catalog_csv_round_trip() {
        let catalog = seed_catalog();
        let mut buf = Vec::new();
        catalog.write_csv(&mut buf).unwrap();
        let back = Catalog::from_csv(buf.as_slice()).unwrap();
        assert_eq!(back, catalog);
    }
}
