//! Completion-endpoint client with bounded fan-out, retries, and
//! idempotency keys for resumable reruns.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::extract::extract_code_block;
use super::prompt::render_translation_prompt;
use crate::corpus::{Origin, SolutionRecord, Verification};
use crate::lang::LanguageDescriptor;

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("prompt error: {0}")]
    Prompt(#[from] super::prompt::PromptError),
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("endpoint rejected request ({status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("auth token env var {0} is not set")]
    MissingToken(String),
    #[error("http client: {0}")]
    Http(#[from] reqwest::Error),
}

/// Sampling knobs passed through to the endpoint.
///
/// The defaults (temperature 0.8, nucleus 0.95) are declared gap-fills and
/// are recorded in manifests by the pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            temperature: 0.8,
            top_p: 0.95,
            max_tokens: 4096,
        }
    }
}

/// Retry policy for transient endpoint failures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    /// Base backoff in milliseconds, doubled per attempt, capped at 30s.
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            backoff_ms: 250,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let ms = self.backoff_ms.saturating_mul(2u64.saturating_pow(attempt));
        Duration::from_millis(ms.min(30_000))
    }
}

/// Field-name adapter so any completion-style JSON server works.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireAdapter {
    /// Request field holding the prompt text.
    pub prompt_field: String,
    /// Request field holding the model id; omitted when `None`.
    pub model_field: Option<String>,
    /// Dot-path to the generated text in the response, with numeric array
    /// indices, e.g. `choices.0.text`.
    pub text_path: String,
}

impl Default for WireAdapter {
    fn default() -> Self {
        WireAdapter {
            prompt_field: "prompt".to_string(),
            model_field: Some("model".to_string()),
            text_path: "choices.0.text".to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token; the value
    /// itself never appears in config files or manifests.
    #[serde(default)]
    pub auth_token_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_concurrent")]
    pub max_concurrent_requests: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default)]
    pub adapter: WireAdapter,
}

fn default_timeout_secs() -> u64 {
    120
}

fn default_max_concurrent() -> usize {
    4
}

/// One source solution fanned out to K sampled translations.
#[derive(Debug, Clone)]
pub struct TranslationJob {
    pub source: SolutionRecord,
    /// Natural-language description of the code, from the same source as the
    /// solution (the question statement).
    pub instruction: String,
    pub target: LanguageDescriptor,
    pub samples: u32,
    pub sampling: SamplingParams,
}

impl TranslationJob {
    fn validate(&self) -> Result<(), TranslateError> {
        if self.samples < 1 {
            return Err(TranslateError::InvalidJob("samples must be >= 1".into()));
        }
        if self.source.language == self.target.language() {
            return Err(TranslateError::InvalidJob(format!(
                "source and target language are both {}",
                self.source.language
            )));
        }
        Ok(())
    }
}

/// Per-sample outcome: exactly one entry per requested sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub source_solution_id: String,
    pub target_language: String,
    pub sample_index: u32,
    pub idempotency_key: String,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SampleStatus {
    Ok { candidate_id: String },
    ExtractionFailed { error: String },
    RequestFailed { error: String },
    Skipped,
}

/// Result of one job: the extracted candidate records plus one outcome entry
/// per sample (`records.len() <= samples`, `outcomes.len() == samples`).
#[derive(Debug, Clone)]
pub struct TranslationResult {
    pub records: Vec<SolutionRecord>,
    pub outcomes: Vec<SampleOutcome>,
}

/// Deterministic resume key for one sampled request.
pub fn idempotency_key(prompt: &str, sample_index: u32) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.as_bytes());
    hasher.update(sample_index.to_le_bytes());
    hex::encode(hasher.finalize())
}

/// Blocking client over a completion-style HTTP JSON endpoint.
pub struct TranslateClient {
    endpoint: EndpointConfig,
    http: reqwest::blocking::Client,
    auth_header: Option<String>,
}

impl TranslateClient {
    pub fn new(endpoint: EndpointConfig) -> Result<Self, TranslateError> {
        let auth_header = match &endpoint.auth_token_env {
            Some(var) => Some(format!(
                "Bearer {}",
                std::env::var(var).map_err(|_| TranslateError::MissingToken(var.clone()))?
            )),
            None => None,
        };
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(endpoint.timeout_secs))
            .build()?;
        Ok(TranslateClient {
            endpoint,
            http,
            auth_header,
        })
    }

    /// Issue K independent sampled completions of the rendered prompt.
    ///
    /// Failed requests and extraction failures are recorded per sample and
    /// never abort sibling samples. A 4xx response fails the whole job fast:
    /// it signals a configuration problem, not a transient fault.
    pub fn translate_solution(&self, job: &TranslationJob) -> Result<TranslationResult, TranslateError> {
        self.translate_with_skip(job, &BTreeSet::new())
    }

    /// Like [`Self::translate_solution`] but skipping samples whose
    /// idempotency keys were already completed by an earlier run.
    pub fn translate_with_skip(
        &self,
        job: &TranslationJob,
        completed: &BTreeSet<String>,
    ) -> Result<TranslationResult, TranslateError> {
        job.validate()?;
        let prompt = render_translation_prompt(&job.source.code, &job.instruction, &job.target)?;
        let source_id = job.source.candidate_id();

        let total = job.samples as usize;
        // Slot per sample index; workers are order-independent, the merge is
        // by sample index.
        let slots: Mutex<Vec<Option<(SampleOutcome, Option<SolutionRecord>)>>> =
            Mutex::new(vec![None; total]);
        let fatal: Mutex<Option<TranslateError>> = Mutex::new(None);
        let cursor = AtomicUsize::new(0);
        let workers = self.endpoint.max_concurrent_requests.max(1).min(total);

        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let slot = cursor.fetch_add(1, Ordering::SeqCst);
                    if slot >= total || fatal.lock().unwrap().is_some() {
                        break;
                    }
                    let index = slot as u32;
                    let key = idempotency_key(&prompt, index);
                    let mut record = None;
                    let status = if completed.contains(&key) {
                        SampleStatus::Skipped
                    } else {
                        match self.request_sample(&prompt, &job.sampling, &key) {
                            Ok(text) => match extract_code_block(&text, &job.target) {
                                Ok(code) => {
                                    let candidate = SolutionRecord {
                                        question_id: job.source.question_id.clone(),
                                        language: job.target.language(),
                                        code,
                                        origin: Origin::SyntheticTranslation {
                                            model_id: self.endpoint.model.clone(),
                                            source_solution_id: source_id.clone(),
                                            sample_index: index,
                                        },
                                        verification: Verification::Unverified,
                                    };
                                    let candidate_id = candidate.candidate_id();
                                    record = Some(candidate);
                                    SampleStatus::Ok { candidate_id }
                                }
                                Err(e) => SampleStatus::ExtractionFailed {
                                    error: e.to_string(),
                                },
                            },
                            Err(err @ TranslateError::Rejected { status, .. })
                                if (400..500).contains(&status) =>
                            {
                                *fatal.lock().unwrap() = Some(err);
                                break;
                            }
                            Err(e) => SampleStatus::RequestFailed {
                                error: e.to_string(),
                            },
                        }
                    };
                    let outcome = SampleOutcome {
                        source_solution_id: source_id.clone(),
                        target_language: job.target.short_name.clone(),
                        sample_index: index,
                        idempotency_key: key,
                        status,
                    };
                    slots.lock().unwrap()[slot] = Some((outcome, record));
                });
            }
        });

        if let Some(err) = fatal.into_inner().unwrap() {
            return Err(err);
        }

        let mut records = Vec::new();
        let mut outcomes = Vec::with_capacity(total);
        for entry in slots.into_inner().unwrap().into_iter().flatten() {
            let (outcome, record) = entry;
            if let Some(record) = record {
                records.push(record);
            }
            outcomes.push(outcome);
        }
        Ok(TranslationResult { records, outcomes })
    }

    fn request_sample(
        &self,
        prompt: &str,
        sampling: &SamplingParams,
        key: &str,
    ) -> Result<String, TranslateError> {
        let adapter = &self.endpoint.adapter;
        let mut body = json!({
            adapter.prompt_field.as_str(): prompt,
            "temperature": sampling.temperature,
            "top_p": sampling.top_p,
            "max_tokens": sampling.max_tokens,
        });
        if let Some(model_field) = &adapter.model_field {
            body[model_field.as_str()] = Value::String(self.endpoint.model.clone());
        }

        let mut attempt = 0u32;
        loop {
            match self.send_once(&body, key) {
                Ok(text) => return Ok(text),
                Err(e) if is_transient(&e) && attempt < self.endpoint.retry.max_retries => {
                    std::thread::sleep(self.endpoint.retry.delay(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn send_once(&self, body: &Value, key: &str) -> Result<String, TranslateError> {
        let mut request = self
            .http
            .post(&self.endpoint.base_url)
            .header("Idempotency-Key", key)
            .json(body);
        if let Some(auth) = &self.auth_header {
            request = request.header("Authorization", auth);
        }
        let response = request.send()?;
        let status = response.status().as_u16();
        let text = response.text()?;
        if !(200..300).contains(&status) {
            return Err(TranslateError::Rejected { status, body: text });
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| TranslateError::Rejected {
            status,
            body: format!("unparseable response body: {e}"),
        })?;
        lookup_path(&value, &self.endpoint.adapter.text_path)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| TranslateError::Rejected {
                status,
                body: format!(
                    "response has no text at path {}",
                    self.endpoint.adapter.text_path
                ),
            })
    }
}

fn is_transient(err: &TranslateError) -> bool {
    match err {
        TranslateError::Rejected { status, .. } => (500..600).contains(status),
        TranslateError::Http(e) => e.is_timeout() || e.is_connect() || e.is_request(),
        _ => false,
    }
}

fn lookup_path<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    let mut cursor = value;
    for part in path.split('.') {
        cursor = match part.parse::<usize>() {
            Ok(index) => cursor.get(index)?,
            Err(_) => cursor.get(part)?,
        };
    }
    Some(cursor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idempotency_keys_differ_by_index_and_prompt() {
        let a = idempotency_key("p", 0);
        let b = idempotency_key("p", 1);
        let c = idempotency_key("q", 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, idempotency_key("p", 0));
    }

    #[test]
    fn path_lookup_handles_indices() {
        let v = json!({"choices": [{"text": "hi"}]});
        assert_eq!(
            lookup_path(&v, "choices.0.text").and_then(Value::as_str),
            Some("hi")
        );
        assert!(lookup_path(&v, "choices.1.text").is_none());
    }
}
