use std::hash::Hasher;

use fnv::FnvHasher;

use super::{EmbeddingError, EmbeddingProvider, EmbeddingVector};

/// Offline pseudo-embedding built by feature hashing.
///
/// Each text is lower-cased and split into alphanumeric words. Every word
/// contributes a word feature (weight 1) and its boundary-padded character
/// trigrams (weight 0.5); features are hashed with FNV-1a into signed buckets.
/// Identical texts map to identical vectors and texts sharing words or
/// sub-words land closer together, which is enough structure for tests.
#[derive(Debug, Clone)]
pub struct HashedEmbedding {
    id: String,
    dimension: usize,
}

pub const HASHED_DEFAULT_DIMENSION: usize = 384;

impl Default for HashedEmbedding {
    fn default() -> Self {
        Self::with_dimension(HASHED_DEFAULT_DIMENSION)
    }
}

impl HashedEmbedding {
    pub fn with_dimension(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        Self {
            id: format!("test-hash-v1-d{dimension}"),
            dimension,
        }
    }

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        let mut acc = vec![0.0f64; self.dimension];
        let lowered = text.to_lowercase();
        let mut any = false;
        for word in lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
        {
            any = true;
            self.add(&mut acc, b'w', word, 1.0);
            let padded: Vec<char> = std::iter::once('^')
                .chain(word.chars())
                .chain(std::iter::once('$'))
                .collect();
            for tri in padded.windows(3) {
                let tri: String = tri.iter().collect();
                self.add(&mut acc, b'c', &tri, 0.5);
            }
        }
        if !any {
            // Punctuation-only text: fall back to the raw characters.
            self.add(&mut acc, b'r', &lowered, 1.0);
        }
        EmbeddingVector::normalized(acc).map_err(|reason| EmbeddingError::InvalidVector {
            text: text.to_string(),
            reason,
        })
    }

    fn add(&self, acc: &mut [f64], tag: u8, feature: &str, weight: f64) {
        let mut h = FnvHasher::default();
        h.write_u8(tag);
        h.write(feature.as_bytes());
        let hash = h.finish();
        let bucket = (hash % self.dimension as u64) as usize;
        let sign = if hash >> 63 == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign * weight;
    }
}

impl EmbeddingProvider for HashedEmbedding {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_canonical(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        texts.iter().map(|t| self.embed_one(t)).collect()
    }
}
