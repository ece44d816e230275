//! Execution-based corpus filtering: judge every candidate, keep the
//! accepted ones, account for every rejection.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::exec::SandboxError;
use super::judge::{judge_solution, JudgeOptions, Verdict};
use super::limits::ResourceLimits;
use super::spec::RunnerRegistry;
use crate::corpus::{ParallelCorpus, QuestionRecord, SolutionRecord, Verification};

/// One rejected candidate, as written to the rejection manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rejection {
    pub candidate_id: String,
    pub question_id: String,
    pub language: String,
    pub verdict_class: String,
    pub first_failing_test: Option<usize>,
}

/// Counts and rejections from one verification pass.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VerifyReport {
    /// Candidates submitted, including ones with unresolvable questions.
    pub candidates: usize,
    /// Candidates actually judged (resolvable question, judge ran).
    pub judged: usize,
    pub accepted: usize,
    pub rejections: Vec<Rejection>,
}

impl VerifyReport {
    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.judged > 0).then(|| self.accepted as f64 / self.judged as f64)
    }

    /// Presentation form, e.g. `57.3%`.
    pub fn acceptance_rate_percent(&self) -> String {
        match self.acceptance_rate() {
            Some(rate) => format!("{:.1}%", rate * 100.0),
            None => "n/a".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub limits: ResourceLimits,
    pub options: JudgeOptions,
    /// Worker-pool size for parallel judging.
    pub workers: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            limits: ResourceLimits::default(),
            options: JudgeOptions::default(),
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(2),
        }
    }
}

/// Judge every candidate against its question's tests; keep exactly the
/// accepted ones in a deduplicated [`ParallelCorpus`].
///
/// Original human solutions are expected in `candidates` alongside the
/// synthetic translations: everything is re-judged the same way, so source
/// solutions that fail in this environment are dropped too. Candidates whose
/// `question_id` resolves to no question are rejected with the class
/// `missing-question` and never judged.
pub fn verify_and_filter(
    candidates: Vec<SolutionRecord>,
    questions: &BTreeMap<String, QuestionRecord>,
    registry: &RunnerRegistry,
    config: &VerifyConfig,
) -> Result<(ParallelCorpus, VerifyReport), SandboxError> {
    let total = candidates.len();
    let verdicts: Mutex<Vec<Option<Result<Verdict, SandboxError>>>> =
        Mutex::new((0..total).map(|_| None).collect());
    let cursor = AtomicUsize::new(0);
    let workers = config.workers.max(1).min(total.max(1));

    // Each job owns a private workspace; the ordered collector keys results
    // by candidate index so output order never depends on scheduling.
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = cursor.fetch_add(1, Ordering::SeqCst);
                if index >= total {
                    break;
                }
                let candidate = &candidates[index];
                let result = questions.get(&candidate.question_id).map(|question| {
                    judge_solution(
                        registry,
                        &candidate.language,
                        &candidate.code,
                        &question.tests,
                        &config.limits,
                        config.options,
                    )
                });
                if let Some(result) = result {
                    verdicts.lock().unwrap()[index] = Some(result);
                }
            });
        }
    });

    let verdicts = verdicts.into_inner().unwrap();
    let mut corpus = ParallelCorpus::new();
    let mut report = VerifyReport {
        candidates: total,
        ..VerifyReport::default()
    };

    for (candidate, verdict) in candidates.into_iter().zip(verdicts) {
        match verdict {
            None => report.rejections.push(Rejection {
                candidate_id: candidate.candidate_id(),
                question_id: candidate.question_id.clone(),
                language: candidate.language.to_string(),
                verdict_class: "missing-question".to_string(),
                first_failing_test: None,
            }),
            Some(Err(e)) => return Err(e),
            Some(Ok(verdict)) => {
                report.judged += 1;
                if verdict.accepted() {
                    report.accepted += 1;
                    let mut record = candidate;
                    record.verification = Verification::Passed;
                    corpus
                        .insert(record)
                        .expect("record was just marked passed");
                } else {
                    report.rejections.push(Rejection {
                        candidate_id: candidate.candidate_id(),
                        question_id: candidate.question_id.clone(),
                        language: candidate.language.to_string(),
                        verdict_class: verdict.overall.class_name().to_string(),
                        first_failing_test: verdict.overall.first_failing_test(),
                    });
                }
            }
        }
    }

    Ok((corpus, report))
}
