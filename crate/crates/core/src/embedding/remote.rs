use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbeddingError, EmbeddingProvider, EmbeddingVector};

const BATCH: usize = 64;

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dimension: usize,
    vectors: Vec<Vec<f64>>,
}

/// Embedding service reached over HTTP.
///
/// `POST <base>/embed` with `{"texts":[...]}`, answered by
/// `{"dimension":N,"vectors":[[...],...]}`.
#[derive(Debug)]
pub struct RemoteEmbedding {
    endpoint: String,
    id: String,
    dimension: usize,
    agent: ureq::Agent,
}

impl RemoteEmbedding {
    /// Connects to `base_url` and learns the vector dimension with a probe request.
    pub fn connect(base_url: &str) -> Result<Self, EmbeddingError> {
        let base = base_url.trim_end_matches('/');
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        let mut remote = Self {
            endpoint: format!("{base}/embed"),
            id: format!("remote:{base}"),
            dimension: 0,
            agent,
        };
        let probe = remote.request(&["dimension probe".to_string()]).map_err(|e| match e {
            EmbeddingError::Transport { backend, message } => EmbeddingError::Unavailable { backend, message },
            other => other,
        })?;
        remote.dimension = probe.dimension;
        Ok(remote)
    }

    fn request(&self, texts: &[String]) -> Result<EmbedResponse, EmbeddingError> {
        let transport = |message: String| EmbeddingError::Transport {
            backend: self.id.clone(),
            message,
        };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(EmbedRequest { texts })
            .map_err(|e| transport(e.to_string()))?;
        let body: EmbedResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| transport(format!("bad response body: {e}")))?;
        if body.vectors.len() != texts.len() {
            return Err(transport(format!(
                "expected {} vectors, got {}",
                texts.len(),
                body.vectors.len()
            )));
        }
        Ok(body)
    }
}

impl EmbeddingProvider for RemoteEmbedding {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_canonical(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(BATCH) {
            let body = self.request(chunk)?;
            if body.dimension != self.dimension {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: self.dimension,
                    found: body.dimension,
                });
            }
            for (values, text) in body.vectors.into_iter().zip(chunk) {
                if values.len() != self.dimension {
                    return Err(EmbeddingError::Text {
                        text: text.clone(),
                        source: Box::new(EmbeddingError::DimensionMismatch {
                            expected: self.dimension,
                            found: values.len(),
                        }),
                    });
                }
                let v = EmbeddingVector::normalized(values).map_err(|reason| {
                    EmbeddingError::InvalidVector {
                        text: text.clone(),
                        reason,
                    }
                })?;
                out.push(v);
            }
        }
        Ok(out)
    }
}
