//! Embedding providers: the trait, a deterministic hash-based provider for
//! smoke runs, a remote wire provider, and a disk cache.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::echo::CharSpan;
use super::AlignError;

/// Produces per-layer pooled vectors for a span of text. Implementations
/// must return exactly `layer_count` layers with `hidden_size`-dimensional
/// vectors on every call.
pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> &str;
    fn layer_count(&self) -> usize;
    fn hidden_size(&self) -> usize;
    fn embed_span(&self, text: &str, span: CharSpan) -> Result<Vec<Vec<f64>>, AlignError>;
}

impl EmbeddingProvider for Box<dyn EmbeddingProvider> {
    fn id(&self) -> &str {
        self.as_ref().id()
    }

    fn layer_count(&self) -> usize {
        self.as_ref().layer_count()
    }

    fn hidden_size(&self) -> usize {
        self.as_ref().hidden_size()
    }

    fn embed_span(&self, text: &str, span: CharSpan) -> Result<Vec<Vec<f64>>, AlignError> {
        self.as_ref().embed_span(text, span)
    }
}

/// Deterministic pseudo-random embeddings derived from the text hash.
/// Identical texts embed identically; distinct texts are near-orthogonal in
/// expectation. Useful for pipeline smoke runs and null-model baselines.
#[derive(Debug, Clone)]
pub struct HashProvider {
    id: String,
    layers: usize,
    dim: usize,
}

impl HashProvider {
    pub fn new(id: impl Into<String>, layers: usize, dim: usize) -> Self {
        HashProvider {
            id: id.into(),
            layers,
            dim,
        }
    }
}

impl EmbeddingProvider for HashProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn layer_count(&self) -> usize {
        self.layers
    }

    fn hidden_size(&self) -> usize {
        self.dim
    }

    fn embed_span(&self, text: &str, _span: CharSpan) -> Result<Vec<Vec<f64>>, AlignError> {
        Ok((0..self.layers)
            .map(|layer| hash_vector(&self.id, layer, text, self.dim))
            .collect())
    }
}

fn hash_vector(id: &str, layer: usize, text: &str, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim);
    let mut counter = 0u64;
    while out.len() < dim {
        let mut hasher = Sha256::new();
        hasher.update(id.as_bytes());
        hasher.update((layer as u64).to_le_bytes());
        hasher.update(counter.to_le_bytes());
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        for chunk in digest.chunks_exact(8) {
            if out.len() == dim {
                break;
            }
            let raw = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            // Map to [-1, 1).
            out.push((raw as f64 / u64::MAX as f64) * 2.0 - 1.0);
        }
        counter += 1;
    }
    out
}

/// Wire request for a remote provider.
#[derive(Debug, Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
    span_start: usize,
    span_end: usize,
}

/// Wire response: one pooled vector per layer, plus the token span the
/// provider actually pooled.
#[derive(Debug, Deserialize)]
struct EmbedResponse {
    layers: Vec<Vec<f64>>,
    #[allow(dead_code)]
    token_span_used: Option<(usize, usize)>,
}

/// HTTP JSON provider speaking the `{text, span_start, span_end}` wire
/// format.
pub struct RemoteProvider {
    id: String,
    url: String,
    layers: usize,
    dim: usize,
    http: reqwest::blocking::Client,
}

impl RemoteProvider {
    pub fn new(
        id: impl Into<String>,
        url: impl Into<String>,
        layers: usize,
        dim: usize,
        timeout_secs: u64,
    ) -> Result<Self, AlignError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(timeout_secs))
            .build()
            .map_err(|e| AlignError::Provider {
                message: e.to_string(),
            })?;
        Ok(RemoteProvider {
            id: id.into(),
            url: url.into(),
            layers,
            dim,
            http,
        })
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn layer_count(&self) -> usize {
        self.layers
    }

    fn hidden_size(&self) -> usize {
        self.dim
    }

    fn embed_span(&self, text: &str, span: CharSpan) -> Result<Vec<Vec<f64>>, AlignError> {
        let request = EmbedRequest {
            text,
            span_start: span.start,
            span_end: span.end,
        };
        let response = self
            .http
            .post(&self.url)
            .json(&request)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| AlignError::Provider {
                message: e.to_string(),
            })?;
        let parsed: EmbedResponse = response.json().map_err(|e| AlignError::Provider {
            message: e.to_string(),
        })?;
        Ok(parsed.layers)
    }
}

/// Disk cache keyed by (provider id, text hash). The span is a function of
/// the text under the echo template, so it does not enter the key.
pub struct CachedProvider<P> {
    inner: P,
    dir: PathBuf,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(CachedProvider { inner, dir })
    }

    fn cache_path(&self, text: &str) -> PathBuf {
        let mut hasher = Sha256::new();
        hasher.update(self.inner.id().as_bytes());
        hasher.update([0u8]);
        hasher.update(text.as_bytes());
        self.dir.join(format!("{}.json", hex::encode(hasher.finalize())))
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn layer_count(&self) -> usize {
        self.inner.layer_count()
    }

    fn hidden_size(&self) -> usize {
        self.inner.hidden_size()
    }

    fn embed_span(&self, text: &str, span: CharSpan) -> Result<Vec<Vec<f64>>, AlignError> {
        let path = self.cache_path(text);
        if let Ok(contents) = std::fs::read_to_string(&path) {
            if let Ok(layers) = serde_json::from_str::<Vec<Vec<f64>>>(&contents) {
                return Ok(layers);
            }
        }
        let layers = self.inner.embed_span(text, span)?;
        let serialized = serde_json::to_string(&layers).map_err(|e| AlignError::Provider {
            message: e.to_string(),
        })?;
        std::fs::write(&path, serialized).map_err(|e| AlignError::Provider {
            message: format!("cache write failed: {e}"),
        })?;
        Ok(layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_provider_is_deterministic_and_text_sensitive() {
        let provider = HashProvider::new("p1", 3, 8);
        let span = CharSpan { start: 0, end: 1 };
        let a = provider.embed_span("alpha", span).unwrap();
        let b = provider.embed_span("alpha", span).unwrap();
        let c = provider.embed_span("beta", span).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|v| v.len() == 8));
        assert!(a.iter().flatten().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn cache_hits_skip_the_inner_provider() {
        let dir = tempfile::tempdir().unwrap();
        let cached = CachedProvider::new(HashProvider::new("p2", 2, 4), dir.path()).unwrap();
        let span = CharSpan { start: 0, end: 1 };
        let first = cached.embed_span("text", span).unwrap();
        // Corrupt determinism check: a second call must read the cache file.
        let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1);
        let second = cached.embed_span("text", span).unwrap();
        assert_eq!(first, second);
    }
}
