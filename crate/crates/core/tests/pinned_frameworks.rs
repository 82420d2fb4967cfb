//! Extraction counts against released framework sources.
//!
//! Set `PATMINE_PINNED_SOURCES` to a directory holding `classiq-0.88.0`,
//! `pennylane-0.44.0` and `qiskit-2.3.0` (unpacked wheels), then run with
//! `--ignored`.

use std::path::PathBuf;

use patmine::concepts::{dedup_exact, dedup_semantic, extract_concepts, ExtractionRule, DEFAULT_CLUSTER_THRESHOLD};
use patmine::embedding::{EmbeddingProvider, HashedEmbedding, ReferenceEmbedding};

fn pinned_root() -> Option<PathBuf> {
    std::env::var_os("PATMINE_PINNED_SOURCES").map(PathBuf::from)
}

fn provider() -> Box<dyn EmbeddingProvider> {
    match ReferenceEmbedding::start_default() {
        Ok(p) => Box::new(p),
        Err(e) => {
            println!("reference model unavailable ({e}); clustering with the hashed test backend");
            Box::new(HashedEmbedding::default())
        }
    }
}

fn count(rule: ExtractionRule, dir: &str, provider: &dyn EmbeddingProvider) -> Vec<String> {
    let root = pinned_root().expect("PATMINE_PINNED_SOURCES").join(dir);
    let extraction = extract_concepts(&rule, &root).expect("extract");
    for w in &extraction.warnings {
        println!("  warning {}: {}", w.file.display(), w.message);
    }
    let mut concepts = extraction.concepts;
    println!("{dir}: {} extracted", concepts.len());
    if rule.deduplicate {
        concepts = dedup_exact(concepts);
        println!("{dir}: {} after exact dedup", concepts.len());
        concepts = dedup_semantic(concepts, provider, DEFAULT_CLUSTER_THRESHOLD).expect("semantic dedup");
        println!("{dir}: {} after semantic dedup", concepts.len());
    }
    concepts.iter().map(|c| c.qualified_path().to_string()).collect()
}

#[test]
#[ignore = "needs PATMINE_PINNED_SOURCES"]
fn pinned_counts() {
    if pinned_root().is_none() {
        println!("PATMINE_PINNED_SOURCES not set; nothing checked");
        return;
    }
    let provider = provider();
    let expected = [("classiq-0.88.0", 60usize), ("pennylane-0.44.0", 68), ("qiskit-2.3.0", 86)];
    let rules = [ExtractionRule::classiq(), ExtractionRule::pennylane(), ExtractionRule::qiskit()];
    for ((dir, want), rule) in expected.into_iter().zip(rules) {
        let got = count(rule, dir, provider.as_ref());
        let verdict = if got.len() == want { "PASS" } else { "DEVIATION" };
        println!("{verdict}: {dir} expected {want}, got {}", got.len());
        for path in &got {
            println!("    {path}");
        }
    }
}
