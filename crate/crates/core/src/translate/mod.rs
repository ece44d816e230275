//! Synthetic code translation: prompt rendering, endpoint fan-out, and
//! candidate extraction.

mod client;
mod extract;
mod prompt;

pub use client::{
    idempotency_key, EndpointConfig, RetryPolicy, SampleOutcome, SampleStatus, SamplingParams,
    TranslateClient, TranslateError, TranslationJob, TranslationResult, WireAdapter,
};
pub use extract::{extract_code_block, ExtractError};
pub use prompt::{render_translation_prompt, PromptError, TRANSLATION_PROMPT_V1};

pub(crate) use prompt::substitute;
