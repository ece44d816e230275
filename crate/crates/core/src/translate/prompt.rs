//! Translation prompt rendering.

use thiserror::Error;

use crate::lang::LanguageDescriptor;

/// The versioned translation prompt template. `{code}`, `{instruction}`,
/// `{lg_long}` and `{lg_short}` are the only recognized placeholders.
pub const TRANSLATION_PROMPT_V1: &str = include_str!("../../assets/translation_prompt_v1.txt");

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("code must be non-empty")]
    EmptyCode,
    #[error("instruction must be non-empty")]
    EmptyInstruction,
}

/// Render the translation prompt for one target language.
///
/// Substitution is a single pass over the template: placeholder-looking text
/// inside `code` or `instruction` is emitted verbatim, never re-expanded.
/// Rendering is pure, so equal inputs give byte-identical output.
pub fn render_translation_prompt(
    code: &str,
    instruction: &str,
    target: &LanguageDescriptor,
) -> Result<String, PromptError> {
    if code.is_empty() {
        return Err(PromptError::EmptyCode);
    }
    if instruction.is_empty() {
        return Err(PromptError::EmptyInstruction);
    }
    Ok(substitute(
        TRANSLATION_PROMPT_V1,
        &[
            ("{code}", code),
            ("{instruction}", instruction),
            ("{lg_long}", &target.long_name),
            ("{lg_short}", &target.short_name),
        ],
    ))
}

/// Single-pass placeholder substitution over `template`.
pub(crate) fn substitute(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while !rest.is_empty() {
        if let Some(next) = rest.find('{') {
            out.push_str(&rest[..next]);
            rest = &rest[next..];
            for (placeholder, value) in pairs {
                if let Some(tail) = rest.strip_prefix(placeholder) {
                    out.push_str(value);
                    rest = tail;
                    continue 'outer;
                }
            }
            // A brace that opens no known placeholder passes through.
            out.push('{');
            rest = &rest[1..];
        } else {
            out.push_str(rest);
            break;
        }
    }
    out
}
