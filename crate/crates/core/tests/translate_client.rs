//! Endpoint fan-out behavior against an in-process stub completion server.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use forge_core::corpus::SolutionRecord;
use forge_core::lang::{Language, LanguageDescriptor};
use forge_core::testing::{completion_body, StubHttpServer};
use forge_core::translate::{
    extract_code_block, idempotency_key, EndpointConfig, RetryPolicy, SampleStatus,
    SamplingParams, TranslateClient, TranslateError, TranslationJob,
};

fn endpoint(url: &str) -> EndpointConfig {
    EndpointConfig {
        base_url: url.to_string(),
        model: "stub-model".to_string(),
        auth_token_env: None,
        timeout_secs: 10,
        max_concurrent_requests: 1,
        retry: RetryPolicy {
            max_retries: 3,
            backoff_ms: 1,
        },
        adapter: Default::default(),
    }
}

fn job(samples: u32) -> TranslationJob {
    TranslationJob {
        source: SolutionRecord::human("q1", Language::new("python"), "print(40 + 2)"),
        instruction: "Print the answer.".to_string(),
        target: LanguageDescriptor::new("Go", "go"),
        samples,
        sampling: SamplingParams::default(),
    }
}

const GO_PROGRAM: &str = "package main\n\nimport \"fmt\"\n\nfunc main() {\n\tfmt.Println(42)\n}";

#[test]
fn eight_samples_all_succeed() {
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    let server = StubHttpServer::spawn(move |_| {
        counter.fetch_add(1, Ordering::SeqCst);
        (200, completion_body(&format!("Sure!\n```go\n{GO_PROGRAM}\n```\n")))
    })
    .unwrap();

    let client = TranslateClient::new(endpoint(server.url())).unwrap();
    let result = client.translate_solution(&job(8)).unwrap();

    assert_eq!(result.records.len(), 8);
    assert_eq!(result.outcomes.len(), 8);
    assert_eq!(hits.load(Ordering::SeqCst), 8);
    for (i, outcome) in result.outcomes.iter().enumerate() {
        assert_eq!(outcome.sample_index as usize, i);
        assert!(matches!(outcome.status, SampleStatus::Ok { .. }));
    }
    for record in &result.records {
        assert_eq!(record.code, GO_PROGRAM);
        assert_eq!(record.language, Language::new("go"));
        // The stored code round-trips through extraction.
        let refenced = format!("```go\n{}\n```", record.code);
        assert_eq!(
            extract_code_block(&refenced, &LanguageDescriptor::new("Go", "go")).unwrap(),
            record.code
        );
    }
}

#[test]
fn extraction_failure_is_recorded_not_fatal() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = calls.clone();
    let server = StubHttpServer::spawn(move |_| {
        let n = counter.fetch_add(1, Ordering::SeqCst);
        if n == 1 {
            (200, completion_body("no code fence here, sorry"))
        } else {
            (200, completion_body(&format!("```go\n{GO_PROGRAM}\n```")))
        }
    })
    .unwrap();

    let client = TranslateClient::new(endpoint(server.url())).unwrap();
    let result = client.translate_solution(&job(3)).unwrap();

    assert_eq!(result.records.len(), 2);
    assert_eq!(result.outcomes.len(), 3);
    let failed: Vec<_> = result
        .outcomes
        .iter()
        .filter(|o| matches!(o.status, SampleStatus::ExtractionFailed { .. }))
        .collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].sample_index, 1);
}

#[test]
fn transient_errors_retry_then_succeed() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = calls.clone();
    let server = StubHttpServer::spawn(move |_| {
        let n = counter.fetch_add(1, Ordering::SeqCst);
        if n < 2 {
            (503, "{\"error\":\"overloaded\"}".to_string())
        } else {
            (200, completion_body(&format!("```go\n{GO_PROGRAM}\n```")))
        }
    })
    .unwrap();

    let client = TranslateClient::new(endpoint(server.url())).unwrap();
    let result = client.translate_solution(&job(1)).unwrap();
    assert_eq!(result.records.len(), 1);
    assert_eq!(calls.load(Ordering::SeqCst), 3);
}

#[test]
fn exhausted_retries_record_per_sample_failure() {
    let server = StubHttpServer::spawn(|_| (503, "{}".to_string())).unwrap();
    let mut config = endpoint(server.url());
    config.retry = RetryPolicy {
        max_retries: 1,
        backoff_ms: 1,
    };
    let client = TranslateClient::new(config).unwrap();
    let result = client.translate_solution(&job(2)).unwrap();
    assert!(result.records.is_empty());
    assert_eq!(result.outcomes.len(), 2);
    for outcome in &result.outcomes {
        assert!(matches!(outcome.status, SampleStatus::RequestFailed { .. }));
    }
}

#[test]
fn client_errors_fail_the_job_fast() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = calls.clone();
    let server = StubHttpServer::spawn(move |_| {
        counter.fetch_add(1, Ordering::SeqCst);
        (400, "{\"error\":\"bad model\"}".to_string())
    })
    .unwrap();

    let client = TranslateClient::new(endpoint(server.url())).unwrap();
    let err = client.translate_solution(&job(4)).unwrap_err();
    assert!(matches!(err, TranslateError::Rejected { status: 400, .. }));
    // Fail fast: no retries for 4xx, and no burn through remaining samples.
    assert!(calls.load(Ordering::SeqCst) <= 2);
}

#[test]
fn completed_keys_are_skipped_on_resume() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = calls.clone();
    let server = StubHttpServer::spawn(move |_| {
        counter.fetch_add(1, Ordering::SeqCst);
        (200, completion_body(&format!("```go\n{GO_PROGRAM}\n```")))
    })
    .unwrap();

    let job = job(3);
    let client = TranslateClient::new(endpoint(server.url())).unwrap();
    let prompt = forge_core::translate::render_translation_prompt(
        &job.source.code,
        &job.instruction,
        &job.target,
    )
    .unwrap();
    let completed: BTreeSet<String> =
        [idempotency_key(&prompt, 0), idempotency_key(&prompt, 2)].into();

    let result = client.translate_with_skip(&job, &completed).unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 1);
    assert_eq!(result.records.len(), 1);
    assert_eq!(
        result
            .outcomes
            .iter()
            .filter(|o| o.status == SampleStatus::Skipped)
            .count(),
        2
    );
}

#[test]
fn invalid_jobs_are_rejected_before_any_request() {
    let server = StubHttpServer::spawn(|_| (200, completion_body("x"))).unwrap();
    let client = TranslateClient::new(endpoint(server.url())).unwrap();

    let mut same_language = job(1);
    same_language.target = LanguageDescriptor::new("Python", "python");
    assert!(matches!(
        client.translate_solution(&same_language),
        Err(TranslateError::InvalidJob(_))
    ));

    let zero_samples = job(0);
    assert!(matches!(
        client.translate_solution(&zero_samples),
        Err(TranslateError::InvalidJob(_))
    ));
}
