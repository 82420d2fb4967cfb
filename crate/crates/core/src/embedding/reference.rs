use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::Deserialize;

use super::{EmbeddingError, EmbeddingProvider, EmbeddingVector};

/// Model used by the reference backend unless overridden.
pub const REFERENCE_MODEL: &str = "sentence-transformers/all-mpnet-base-v2";
/// Overrides the model name or local model directory.
pub const REFERENCE_MODEL_ENV: &str = "PATMINE_REFERENCE_MODEL";
/// Overrides the Python interpreter that hosts the model.
pub const PYTHON_ENV: &str = "PATMINE_PYTHON";

// Line-oriented JSON bridge: one request object per line on stdin, one
// response object per line on stdout.
const BRIDGE: &str = r#"
import json, sys
try:
    from sentence_transformers import SentenceTransformer
    model = SentenceTransformer(sys.argv[1], device="cpu")
    dim = int(model.get_sentence_embedding_dimension())
except Exception as exc:
    print(json.dumps({"error": repr(exc)}), flush=True)
    sys.exit(1)
print(json.dumps({"ready": True, "dimension": dim}), flush=True)
for line in sys.stdin:
    req = json.loads(line)
    vecs = model.encode(req["texts"], normalize_embeddings=True, batch_size=32, show_progress_bar=False)
    print(json.dumps({"vectors": [[float(x) for x in v] for v in vecs]}), flush=True)
"#;

#[derive(Deserialize)]
struct Hello {
    #[serde(default)]
    ready: bool,
    #[serde(default)]
    dimension: usize,
    #[serde(default)]
    error: Option<String>,
}

#[derive(Deserialize)]
struct Reply {
    vectors: Vec<Vec<f64>>,
}

struct Bridge {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// The sentence-transformer reference model, hosted in a Python subprocess.
pub struct ReferenceEmbedding {
    id: String,
    dimension: usize,
    bridge: Mutex<Bridge>,
}

impl ReferenceEmbedding {
    /// Starts the bridge with the model from `PATMINE_REFERENCE_MODEL`
    /// (default all-mpnet-base-v2).
    pub fn start_default() -> Result<Self, EmbeddingError> {
        let model = std::env::var(REFERENCE_MODEL_ENV).unwrap_or_else(|_| REFERENCE_MODEL.to_string());
        let python = std::env::var(PYTHON_ENV).unwrap_or_else(|_| "python3".to_string());
        Self::start(&python, &model)
    }

    pub fn start(python: &str, model: &str) -> Result<Self, EmbeddingError> {
        let id = format!("reference:{}", model.rsplit('/').next().unwrap_or(model));
        let unavailable = |message: String| EmbeddingError::Unavailable {
            backend: id.clone(),
            message,
        };
        let mut child = Command::new(python)
            .arg("-u")
            .arg("-c")
            .arg(BRIDGE)
            .arg(model)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| unavailable(format!("cannot start {python}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut line = String::new();
        stdout
            .read_line(&mut line)
            .map_err(|e| unavailable(e.to_string()))?;
        let hello: Hello = serde_json::from_str(&line)
            .map_err(|_| unavailable("model bridge exited before reporting readiness".into()))?;
        if let Some(err) = hello.error {
            let _ = child.wait();
            return Err(unavailable(err));
        }
        if !hello.ready || hello.dimension == 0 {
            let _ = child.kill();
            return Err(unavailable("model bridge did not report a dimension".into()));
        }
        Ok(Self {
            id,
            dimension: hello.dimension,
            bridge: Mutex::new(Bridge { child, stdin, stdout }),
        })
    }
}

impl EmbeddingProvider for ReferenceEmbedding {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_canonical(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        let transport = |message: String| EmbeddingError::Transport {
            backend: self.id.clone(),
            message,
        };
        let mut bridge = self.bridge.lock().expect("bridge lock");
        let request = serde_json::json!({ "texts": texts }).to_string();
        writeln!(bridge.stdin, "{request}").map_err(|e| transport(e.to_string()))?;
        bridge.stdin.flush().map_err(|e| transport(e.to_string()))?;
        let mut line = String::new();
        bridge
            .stdout
            .read_line(&mut line)
            .map_err(|e| transport(e.to_string()))?;
        let reply: Reply = serde_json::from_str(&line).map_err(|e| transport(format!("bad reply: {e}")))?;
        if reply.vectors.len() != texts.len() {
            return Err(transport(format!(
                "expected {} vectors, got {}",
                texts.len(),
                reply.vectors.len()
            )));
        }
        reply
            .vectors
            .into_iter()
            .zip(texts)
            .map(|(values, text)| {
                EmbeddingVector::normalized(values).map_err(|reason| EmbeddingError::InvalidVector {
                    text: text.clone(),
                    reason,
                })
            })
            .collect()
    }
}

impl Drop for ReferenceEmbedding {
    fn drop(&mut self) {
        if let Ok(bridge) = self.bridge.get_mut() {
            let _ = bridge.child.kill();
            let _ = bridge.child.wait();
        }
    }
}
