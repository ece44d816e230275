//! Fenced-code-block extraction from model responses.

use thiserror::Error;

use crate::lang::LanguageDescriptor;

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("no fenced code block found in response")]
    NoFence,
}

/// Extract the translated program from a model response.
///
/// Returns the contents of the last fence tagged with the target's short
/// name; if no tagged fence exists, falls back to the last fence of any tag
/// (or none). Interior bytes are preserved exactly; the fence lines
/// themselves are stripped. Models often restate the source program before
/// the translation, hence last-fence.
pub fn extract_code_block(
    response: &str,
    target: &LanguageDescriptor,
) -> Result<String, ExtractError> {
    let blocks = fenced_blocks(response);
    if let Some(block) = blocks
        .iter()
        .rev()
        .find(|b| b.tag == target.short_name)
    {
        return Ok(block.body.clone());
    }
    blocks
        .last()
        .map(|b| b.body.clone())
        .ok_or(ExtractError::NoFence)
}

struct Block {
    tag: String,
    body: String,
}

/// Scan for ``` fences line by line. An unterminated final fence is treated
/// as running to the end of the response.
fn fenced_blocks(text: &str) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut current: Option<(String, Vec<&str>)> = None;
    for line in text.split('\n') {
        let trimmed = line.trim_end_matches('\r');
        if let Some(rest) = trimmed.trim_start().strip_prefix("```") {
            match current.take() {
                Some((tag, body)) => blocks.push(Block {
                    tag,
                    body: body.join("\n"),
                }),
                None => current = Some((rest.trim().to_string(), Vec::new())),
            }
        } else if let Some((_, body)) = current.as_mut() {
            body.push(trimmed);
        }
    }
    if let Some((tag, body)) = current {
        blocks.push(Block {
            tag,
            body: body.join("\n"),
        });
    }
    blocks
}
