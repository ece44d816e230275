//! Echo-embedding template: the program appears twice and the second
//! occurrence is what gets pooled.

use serde::{Deserialize, Serialize};

use super::AlignError;

const PREFIX: &str = "Rewrite the following code: ";
const MIDDLE: &str = ". The rewritten code: ";

/// Character-offset span, end exclusive. Character offsets (not bytes) so
/// the provider's own tokenizer can map them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Extract the spanned text by character offsets.
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        let mut indices = text.char_indices().map(|(i, _)| i);
        let start = indices.clone().nth(self.start).unwrap_or(text.len());
        let end = indices.nth(self.end).unwrap_or(text.len());
        &text[start..end]
    }
}

/// Render `Rewrite the following code: {x}. The rewritten code: {x}` and
/// locate the second occurrence of the code.
pub fn render_echo_template(code: &str) -> Result<(String, CharSpan), AlignError> {
    if code.is_empty() {
        return Err(AlignError::EmptyCode);
    }
    let text = format!("{PREFIX}{code}{MIDDLE}{code}");
    let code_chars = code.chars().count();
    let start = PREFIX.chars().count() + code_chars + MIDDLE.chars().count();
    Ok((
        text,
        CharSpan {
            start,
            end: start + code_chars,
        },
    ))
}
