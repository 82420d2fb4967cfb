use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use sha2::{Digest, Sha256};

use super::{EmbeddingError, EmbeddingProvider, EmbeddingVector};

/// Content-addressed store of embeddings keyed by `(backend_id, sha256(text))`.
///
/// Layout: `<root>/<backend>/<hh>/<sha256>.f32`, each file holding the
/// vector as little-endian `f32` values. Reads are served from memory once
/// loaded; disk writes go through a temp file and an atomic rename.
#[derive(Debug)]
pub struct EmbeddingCache {
    root: Option<PathBuf>,
    memory: RwLock<HashMap<(String, String), EmbeddingVector>>,
    write_lock: Mutex<()>,
}

impl EmbeddingCache {
    /// Cache that never touches disk.
    pub fn in_memory() -> Self {
        Self {
            root: None,
            memory: RwLock::new(HashMap::new()),
            write_lock: Mutex::new(()),
        }
    }

    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root: Some(root),
            memory: RwLock::new(HashMap::new()),
            write_lock: Mutex::new(()),
        })
    }

    pub fn content_hash(text: &str) -> String {
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    fn file_for(&self, backend_id: &str, hash: &str) -> Option<PathBuf> {
        self.root.as_ref().map(|root| {
            root.join(sanitize(backend_id))
                .join(&hash[..2])
                .join(format!("{hash}.f32"))
        })
    }

    pub fn get(&self, backend_id: &str, text: &str, dimension: usize) -> Option<EmbeddingVector> {
        let key = (backend_id.to_string(), Self::content_hash(text));
        if let Some(v) = self.memory.read().expect("cache lock").get(&key) {
            return Some(v.clone());
        }
        let path = self.file_for(backend_id, &key.1)?;
        let vector = read_vector(&path, dimension)?;
        self.memory
            .write()
            .expect("cache lock")
            .insert(key, vector.clone());
        Some(vector)
    }

    pub fn put(&self, backend_id: &str, text: &str, vector: &EmbeddingVector) -> io::Result<()> {
        let key = (backend_id.to_string(), Self::content_hash(text));
        if let Some(path) = self.file_for(backend_id, &key.1) {
            let _guard = self.write_lock.lock().expect("cache write lock");
            if !path.exists() {
                write_vector(&path, vector)?;
            }
        }
        self.memory
            .write()
            .expect("cache lock")
            .insert(key, vector.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.memory.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

fn read_vector(path: &Path, dimension: usize) -> Option<EmbeddingVector> {
    let bytes = fs::read(path).ok()?;
    if bytes.len() != dimension * 4 {
        return None;
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Some(EmbeddingVector::from_stored(values))
}

fn write_vector(path: &Path, vector: &EmbeddingVector) -> io::Result<()> {
    let dir = path.parent().expect("cache file has a parent");
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    let mut bytes = Vec::with_capacity(vector.dimension() * 4);
    for v in vector.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    tmp.write_all(&bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Wraps a provider with an [`EmbeddingCache`].
pub struct CachedProvider<P> {
    inner: P,
    cache: EmbeddingCache,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P, cache: EmbeddingCache) -> Self {
        Self { inner, cache }
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn backend_id(&self) -> &str {
        self.inner.backend_id()
    }

    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn embed_canonical(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        let id = self.inner.backend_id();
        let dim = self.inner.dimension();
        let mut out: Vec<Option<EmbeddingVector>> =
            texts.iter().map(|t| self.cache.get(id, t, dim)).collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            let batch: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let fresh = self.inner.embed_canonical(&batch)?;
            for (&i, v) in missing.iter().zip(fresh) {
                self.cache.put(id, &texts[i], &v)?;
                out[i] = Some(v);
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{embed_text, HashedEmbedding};

    #[test]
    fn disk_cache_is_transparent() {
        let dir = tempfile::tempdir().unwrap();
        let plain = HashedEmbedding::default();
        let expected = embed_text(&plain, "qft on four qubits").unwrap();

        let cached = CachedProvider::new(HashedEmbedding::default(), EmbeddingCache::open(dir.path()).unwrap());
        let first = embed_text(&cached, "qft on four qubits").unwrap();
        assert_eq!(first.values(), expected.values());

        // A fresh cache over the same directory serves the stored bytes.
        let reopened = EmbeddingCache::open(dir.path()).unwrap();
        let hit = reopened
            .get(plain.backend_id(), "qft on four qubits", plain.dimension())
            .unwrap();
        assert_eq!(hit.values(), expected.values());
    }

    #[test]
    fn corrupt_entry_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EmbeddingCache::open(dir.path()).unwrap();
        let hash = EmbeddingCache::content_hash("x");
        let path = cache.file_for("b", &hash).unwrap();
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, b"abc").unwrap();
        assert!(cache.get("b", "x", 4).is_none());
    }
}
