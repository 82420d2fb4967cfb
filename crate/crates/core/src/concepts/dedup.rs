use std::cmp::Ordering;
use std::collections::HashMap;

use super::{ConceptKind, RawConcept};
use crate::embedding::{cosine_similarity, embed_texts, EmbeddingError, EmbeddingProvider, EmbeddingVector};
use crate::knowledge_base::terminal_segment;

pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.95;

/// Terminal name folded to lower case with underscores removed.
pub fn name_key(qualified_path: &str) -> String {
    terminal_segment(qualified_path)
        .chars()
        .filter(|&c| c != '_')
        .flat_map(char::to_lowercase)
        .collect()
}

fn kind_rank(kind: ConceptKind) -> u8 {
    match kind {
        ConceptKind::TypeDefinition => 0,
        ConceptKind::Callable => 1,
        ConceptKind::Method => 2,
    }
}

/// Ordering under which the smallest element of a group is its canonical member.
fn canonical_order(a: &RawConcept, b: &RawConcept) -> Ordering {
    a.deprecated
        .cmp(&b.deprecated)
        .then_with(|| kind_rank(a.kind).cmp(&kind_rank(b.kind)))
        .then_with(|| a.qualified_path().cmp(b.qualified_path()))
}

/// Keeps the canonical member of each group; survivors stay in input order.
fn keep_canonical(concepts: Vec<RawConcept>, group_of: &[usize]) -> Vec<RawConcept> {
    let mut best: HashMap<usize, usize> = HashMap::new();
    for (i, &g) in group_of.iter().enumerate() {
        best.entry(g)
            .and_modify(|cur| {
                if canonical_order(&concepts[i], &concepts[*cur]) == Ordering::Less {
                    *cur = i;
                }
            })
            .or_insert(i);
    }
    concepts
        .into_iter()
        .enumerate()
        .filter(|(i, _)| best.get(&group_of[*i]) == Some(i))
        .map(|(_, c)| c)
        .collect()
}

/// Collapses entries sharing a byte-identical summary and the same
/// [`name_key`].
pub fn dedup_exact(concepts: Vec<RawConcept>) -> Vec<RawConcept> {
    let mut groups: HashMap<(String, String), usize> = HashMap::new();
    let group_of: Vec<usize> = concepts
        .iter()
        .map(|c| {
            let next = groups.len();
            *groups
                .entry((c.summary().to_string(), name_key(c.qualified_path())))
                .or_insert(next)
        })
        .collect();
    keep_canonical(concepts, &group_of)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Single-linkage clustering of summaries: two concepts join a cluster when
/// their summary embeddings have cosine similarity of at least
/// `cluster_threshold`. One canonical concept survives per cluster.
///
/// # Panics
///
/// Panics if `cluster_threshold` is outside `(0, 1]`.
pub fn dedup_semantic(
    concepts: Vec<RawConcept>,
    provider: &dyn EmbeddingProvider,
    cluster_threshold: f64,
) -> Result<Vec<RawConcept>, EmbeddingError> {
    assert!(
        cluster_threshold > 0.0 && cluster_threshold <= 1.0,
        "cluster threshold must lie in (0, 1]"
    );
    let mut distinct: Vec<&str> = Vec::new();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let text_of: Vec<usize> = concepts
        .iter()
        .map(|c| {
            *slot.entry(c.summary()).or_insert_with(|| {
                distinct.push(c.summary());
                distinct.len() - 1
            })
        })
        .collect();
    let vectors = embed_all(provider, &distinct)?;

    let mut uf = UnionFind((0..concepts.len()).collect());
    for i in 0..concepts.len() {
        for j in (i + 1)..concepts.len() {
            let (ti, tj) = (text_of[i], text_of[j]);
            let linked = ti == tj || cosine_similarity(&vectors[ti], &vectors[tj])? >= cluster_threshold;
            if linked {
                uf.union(i, j);
            }
        }
    }
    let group_of: Vec<usize> = (0..concepts.len()).map(|i| uf.find(i)).collect();
    Ok(keep_canonical(concepts, &group_of))
}

/// Embeds every text, attributing a failure to the text that caused it.
fn embed_all(provider: &dyn EmbeddingProvider, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
    match embed_texts(provider, texts) {
        Ok(v) => Ok(v),
        Err(err @ EmbeddingError::Text { .. }) => Err(err),
        Err(batch_err) => {
            for text in texts {
                if let Err(e) = embed_texts(provider, &[*text]) {
                    return Err(EmbeddingError::Text {
                        text: text.to_string(),
                        source: Box::new(e),
                    });
                }
            }
            Err(batch_err)
        }
    }
}
