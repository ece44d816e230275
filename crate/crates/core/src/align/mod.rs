//! Cross-language representation alignment: echo-embedding construction,
//! pooling, retrieval accuracy, anisotropy-adjusted cosine similarity, and
//! per-layer sweeps.

mod echo;
mod metrics;
mod pool;
mod provider;
mod sweep;

pub use echo::{render_echo_template, CharSpan};
pub use metrics::{
    adjusted_cosine, adjusted_cosine_exact, adjusted_cosine_sampled, retrieval_accuracy,
    AdjustedMode,
};
pub use pool::pool_representation;
pub use provider::{CachedProvider, EmbeddingProvider, HashProvider, RemoteProvider};
pub use sweep::{
    layer_sweep, ordered_pairs, AlignmentReport, AlignmentRow, ParallelProgramSet,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("code must be non-empty")]
    EmptyCode,
    #[error("empty pooling span: {detail}")]
    EmptySpan { detail: String },
    #[error("cosine undefined for a zero vector")]
    ZeroVector,
    #[error("vector dimension mismatch: {expected} vs {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("need at least 2 paired vectors, got {n}")]
    TooFew { n: usize },
    #[error("misaligned parallel program set: {detail}")]
    Misaligned { detail: String },
    #[error("provider error: {message}")]
    Provider { message: String },
    #[error("provider returned {actual} layers, declared {expected} ({context})")]
    LayerCountMismatch {
        expected: usize,
        actual: usize,
        context: String,
    },
}
