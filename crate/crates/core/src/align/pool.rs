//! Mean pooling of token representations over a span.

use std::ops::Range;

use super::AlignError;

/// Per-layer arithmetic mean of the span's token vectors.
///
/// `layers` is layer-major: `layers[l][t]` is token `t`'s vector at layer
/// `l`. The token span comes from the provider's character-to-token mapping.
pub fn pool_representation(
    layers: &[Vec<Vec<f64>>],
    token_span: Range<usize>,
) -> Result<Vec<Vec<f64>>, AlignError> {
    if token_span.is_empty() {
        return Err(AlignError::EmptySpan {
            detail: format!("token span {token_span:?} maps to no tokens"),
        });
    }
    let mut pooled = Vec::with_capacity(layers.len());
    for (layer_index, tokens) in layers.iter().enumerate() {
        if token_span.end > tokens.len() {
            return Err(AlignError::EmptySpan {
                detail: format!(
                    "token span {token_span:?} exceeds {} tokens at layer {layer_index}",
                    tokens.len()
                ),
            });
        }
        let dim = tokens[token_span.start].len();
        let mut mean = vec![0.0; dim];
        for token in &tokens[token_span.clone()] {
            if token.len() != dim {
                return Err(AlignError::DimensionMismatch {
                    expected: dim,
                    actual: token.len(),
                });
            }
            for (acc, value) in mean.iter_mut().zip(token) {
                *acc += value;
            }
        }
        let count = token_span.len() as f64;
        for value in &mut mean {
            *value /= count;
        }
        pooled.push(mean);
    }
    Ok(pooled)
}
