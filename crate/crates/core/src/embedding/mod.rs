//! Text embeddings and cosine similarity search.
//!
//! Every backend implements [`EmbeddingProvider`] and returns unit-norm
//! vectors. Callers go through [`embed_text`] / [`embed_texts`], which
//! canonicalize the text (trim, collapse whitespace runs) before it reaches
//! the backend, so caching and comparison see one spelling per text.

mod cache;
mod hashed;
mod reference;
mod remote;

use std::fmt;

use thiserror::Error;

pub use cache::{CachedProvider, EmbeddingCache};
pub use hashed::{HashedEmbedding, HASHED_DEFAULT_DIMENSION};
pub use reference::{ReferenceEmbedding, PYTHON_ENV, REFERENCE_MODEL, REFERENCE_MODEL_ENV};
pub use remote::RemoteEmbedding;

/// Environment variable naming the remote embedding service.
pub const EMBED_URL_ENV: &str = "PATMINE_EMBED_URL";

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("backend `{backend}` unavailable: {message}")]
    Unavailable { backend: String, message: String },
    #[error("backend `{backend}` transport error: {message}")]
    Transport { backend: String, message: String },
    #[error("backend returned an invalid vector for {text:?}: {reason}")]
    InvalidVector { text: String, reason: String },
    #[error("embedding failed for {text:?}: {source}")]
    Text {
        text: String,
        #[source]
        source: Box<EmbeddingError>,
    },
    #[error("embedding cache: {0}")]
    Cache(#[from] std::io::Error),
}

/// A unit-norm embedding.
#[derive(Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    /// Normalizes `values` to unit Euclidean length.
    pub fn normalized(values: Vec<f64>) -> Result<Self, String> {
        if values.is_empty() {
            return Err("empty vector".into());
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err("non-finite component".into());
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err("zero vector".into());
        }
        Ok(Self(values.into_iter().map(|v| (v / norm) as f32).collect()))
    }

    /// Wraps values that are already unit-norm (e.g. read back from a cache).
    pub(crate) fn from_stored(values: Vec<f32>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
    }
}

impl fmt::Debug for EmbeddingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EmbeddingVector(dim={})", self.0.len())
    }
}

/// A deterministic text-embedding backend.
///
/// Implementations receive canonical, non-empty texts and must return one
/// unit-norm vector of [`dimension`](Self::dimension) per input.
pub trait EmbeddingProvider: Send + Sync {
    fn backend_id(&self) -> &str;

    fn dimension(&self) -> usize;

    fn embed_canonical(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbeddingError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn embed_canonical(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        (**self).embed_canonical(texts)
    }
}

/// Trims and collapses every whitespace run to a single space.
pub fn canonicalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn embed_text(
    provider: &dyn EmbeddingProvider,
    text: &str,
) -> Result<EmbeddingVector, EmbeddingError> {
    let mut out = embed_texts(provider, &[text])?;
    Ok(out.pop().expect("one vector per text"))
}

/// Embeds a batch of texts; the output is index-aligned with the input.
pub fn embed_texts<S: AsRef<str>>(
    provider: &dyn EmbeddingProvider,
    texts: &[S],
) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
    let canonical: Vec<String> = texts.iter().map(|t| canonicalize(t.as_ref())).collect();
    if canonical.iter().any(String::is_empty) {
        return Err(EmbeddingError::EmptyText);
    }
    if canonical.is_empty() {
        return Ok(Vec::new());
    }
    let vectors = provider.embed_canonical(&canonical)?;
    if vectors.len() != canonical.len() {
        return Err(EmbeddingError::Transport {
            backend: provider.backend_id().to_string(),
            message: format!("expected {} vectors, got {}", canonical.len(), vectors.len()),
        });
    }
    for (v, text) in vectors.iter().zip(&canonical) {
        if v.dimension() != provider.dimension() {
            return Err(EmbeddingError::Text {
                text: text.clone(),
                source: Box::new(EmbeddingError::DimensionMismatch {
                    expected: provider.dimension(),
                    found: v.dimension(),
                }),
            });
        }
    }
    Ok(vectors)
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    if a.dimension() != b.dimension() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: a.dimension(),
            found: b.dimension(),
        });
    }
    Ok(cosine_unchecked(a.values(), b.values()))
}

fn cosine_unchecked(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Every index entry whose similarity to `query` is strictly greater than
/// `threshold`, sorted by score descending then key ascending.
///
/// # Panics
///
/// Panics if an index vector's dimension differs from the query's.
pub fn matches_above<K: Ord + Clone>(
    query: &EmbeddingVector,
    index: &[(K, EmbeddingVector)],
    threshold: f64,
) -> Vec<(K, f64)> {
    let mut hits: Vec<(K, f64)> = index
        .iter()
        .filter_map(|(key, v)| {
            assert_eq!(v.dimension(), query.dimension(), "index dimension mismatch");
            let score = cosine_unchecked(query.values(), v.values());
            (score > threshold).then(|| (key.clone(), score))
        })
        .collect();
    hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    hits
}
