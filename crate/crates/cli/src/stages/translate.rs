//! Translate stage: fan out K sampled translations per (source solution,
//! target language) through the configured endpoint.

use std::collections::{BTreeMap, BTreeSet};

use forge_core::corpus::{Origin, QuestionRecord, SolutionRecord};
use forge_core::jsonl;
use forge_core::lang::Language;
use forge_core::translate::{
    SampleOutcome, SampleStatus, TranslateClient, TranslationJob,
};

use super::{
    params_json, require_section, Stage, StageInput, StageOutputs, CANDIDATES, QUESTIONS,
    SOLUTIONS, TRANSLATE_OUTCOMES,
};
use crate::atomic::write_jsonl_atomic;
use crate::config::PipelineConfig;
use crate::error::{StageError, StageResult};

pub struct TranslateStage;

impl Stage for TranslateStage {
    fn prepare(&self, config: &PipelineConfig) -> StageResult<(serde_json::Value, Vec<StageInput>)> {
        let section = require_section!(config, translate, "translate");
        let work_dir = config.work_dir();
        Ok((
            params_json(section)?,
            vec![
                StageInput::upstream("ingest", work_dir.join(QUESTIONS)),
                StageInput::upstream("ingest", work_dir.join(SOLUTIONS)),
            ],
        ))
    }

    fn execute(&self, config: &PipelineConfig, resume: bool) -> StageResult<StageOutputs> {
        let section = require_section!(config, translate, "translate");
        let work_dir = config.work_dir();

        let questions: Vec<QuestionRecord> = jsonl::read_all(work_dir.join(QUESTIONS))
            .map_err(|e| StageError::Other(e.into()))?;
        let statements: BTreeMap<String, String> = questions
            .into_iter()
            .map(|q| (q.question_id, q.statement))
            .collect();
        let solutions: Vec<SolutionRecord> = jsonl::read_all(work_dir.join(SOLUTIONS))
            .map_err(|e| StageError::Other(e.into()))?;

        let source_language = Language::new(&section.source_language);
        let mut sources: Vec<SolutionRecord> = solutions
            .into_iter()
            .filter(|s| s.language == source_language)
            .collect();
        sources.sort_by_key(|s| s.candidate_id());

        // Resumable reruns: definitive outcomes (success or extraction
        // failure) are skipped by idempotency key; request failures retry.
        let mut done_keys: BTreeSet<String> = BTreeSet::new();
        let mut old_outcomes: BTreeMap<String, SampleOutcome> = BTreeMap::new();
        let mut old_records: BTreeMap<String, SolutionRecord> = BTreeMap::new();
        if resume {
            let outcomes_path = work_dir.join(TRANSLATE_OUTCOMES);
            if outcomes_path.exists() {
                for outcome in jsonl::read_all::<SampleOutcome>(&outcomes_path)
                    .map_err(|e| StageError::Other(e.into()))?
                {
                    match &outcome.status {
                        SampleStatus::Ok { .. } | SampleStatus::ExtractionFailed { .. } => {
                            done_keys.insert(outcome.idempotency_key.clone());
                            old_outcomes.insert(outcome.idempotency_key.clone(), outcome);
                        }
                        _ => {}
                    }
                }
            }
            let candidates_path = work_dir.join(CANDIDATES);
            if candidates_path.exists() {
                for record in jsonl::read_all::<SolutionRecord>(&candidates_path)
                    .map_err(|e| StageError::Other(e.into()))?
                {
                    old_records.insert(record.candidate_id(), record);
                }
            }
        }

        let client = TranslateClient::new(section.endpoint.clone())
            .map_err(|e| StageError::validation(e.to_string()))?;

        let mut all_records: Vec<SolutionRecord> = Vec::new();
        let mut all_outcomes: Vec<SampleOutcome> = Vec::new();
        let mut request_failures = 0u64;
        let mut extraction_failures = 0u64;
        for source in &sources {
            let instruction = statements
                .get(&source.question_id)
                .cloned()
                .unwrap_or_else(|| source.question_id.clone());
            for target_name in &section.target_languages {
                let target = Language::new(target_name).descriptor();
                let job = TranslationJob {
                    source: source.clone(),
                    instruction: instruction.clone(),
                    target,
                    samples: section.samples_per_solution,
                    sampling: section.sampling.clone(),
                };
                let result = client
                    .translate_with_skip(&job, &done_keys)
                    .map_err(|e| StageError::Other(anyhow::anyhow!("translation job: {e}")))?;
                all_records.extend(result.records);
                for outcome in result.outcomes {
                    let resolved = match outcome.status {
                        // A skipped sample re-reports its original outcome.
                        SampleStatus::Skipped => {
                            let original = old_outcomes
                                .get(&outcome.idempotency_key)
                                .cloned()
                                .unwrap_or(outcome);
                            if let SampleStatus::Ok { candidate_id } = &original.status {
                                if let Some(record) = old_records.get(candidate_id) {
                                    all_records.push(record.clone());
                                }
                            }
                            original
                        }
                        _ => outcome,
                    };
                    match &resolved.status {
                        SampleStatus::RequestFailed { .. } => request_failures += 1,
                        SampleStatus::ExtractionFailed { .. } => extraction_failures += 1,
                        _ => {}
                    }
                    all_outcomes.push(resolved);
                }
            }
        }

        all_records.sort_by_key(record_sort_key);
        all_records.dedup_by_key(|r| r.candidate_id());
        all_outcomes.sort_by(|a, b| {
            (&a.source_solution_id, &a.target_language, a.sample_index).cmp(&(
                &b.source_solution_id,
                &b.target_language,
                b.sample_index,
            ))
        });

        let candidates = write_jsonl_atomic(&work_dir.join(CANDIDATES), &all_records)?;
        write_jsonl_atomic(&work_dir.join(TRANSLATE_OUTCOMES), &all_outcomes)?;

        let mut outputs = StageOutputs {
            files: vec![CANDIDATES.to_string(), TRANSLATE_OUTCOMES.to_string()],
            counts: BTreeMap::new(),
        };
        outputs.counts.insert("sources".into(), sources.len() as u64);
        outputs.counts.insert("candidates".into(), candidates as u64);
        outputs
            .counts
            .insert("samples".into(), all_outcomes.len() as u64);
        outputs
            .counts
            .insert("request_failures".into(), request_failures);
        outputs
            .counts
            .insert("extraction_failures".into(), extraction_failures);
        Ok(outputs)
    }
}

fn record_sort_key(record: &SolutionRecord) -> (String, String, u32, String) {
    match &record.origin {
        Origin::SyntheticTranslation {
            source_solution_id,
            sample_index,
            ..
        } => (
            source_solution_id.clone(),
            record.language.to_string(),
            *sample_index,
            record.candidate_id(),
        ),
        Origin::Human => (
            String::new(),
            record.language.to_string(),
            0,
            record.candidate_id(),
        ),
    }
}
