//! Ingest stage: parse the raw dataset, filter questions, emit canonical
//! question/solution files plus drop and error manifests.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use forge_core::corpus::{
    filter_questions, ingest_dataset, DropReason, FilterPredicates, IngestError, RecordFormat,
    SolutionRecord,
};
use forge_core::eval::{build_codeforces_rl_split, Split};

use super::{
    params_json, require_section, Stage, StageInput, StageOutputs, DROPPED, INGEST_ERRORS,
    QUESTIONS, RL_TEST, RL_TRAIN, SOLUTIONS,
};
use crate::atomic::write_jsonl_atomic;
use crate::config::PipelineConfig;
use crate::error::{StageError, StageResult};

#[derive(Debug, Serialize, Deserialize)]
struct DroppedRecord {
    question_id: String,
    reason: DropReason,
}

#[derive(Debug, Serialize, Deserialize)]
struct ErrorRecord {
    line: usize,
    message: String,
}

pub struct IngestStage;

impl Stage for IngestStage {
    fn prepare(&self, config: &PipelineConfig) -> StageResult<(serde_json::Value, Vec<StageInput>)> {
        let section = require_section!(config, ingest, "ingest");
        Ok((
            params_json(section)?,
            vec![StageInput::external(&section.input)],
        ))
    }

    fn execute(&self, config: &PipelineConfig, _resume: bool) -> StageResult<StageOutputs> {
        let section = require_section!(config, ingest, "ingest");
        let work_dir = config.work_dir();

        let stream = ingest_dataset(&section.input, RecordFormat::Jsonl)
            .map_err(|e| StageError::validation(e.to_string()))?;

        let mut questions = Vec::new();
        let mut solutions_by_question: Vec<Vec<SolutionRecord>> = Vec::new();
        let mut splits: Vec<Option<String>> = Vec::new();
        let mut errors: Vec<ErrorRecord> = Vec::new();
        let mut seen = BTreeSet::new();
        for item in stream {
            match item {
                Ok(item) => {
                    if !seen.insert(item.question.question_id.clone()) {
                        errors.push(ErrorRecord {
                            line: 0,
                            message: format!(
                                "duplicate question_id {} (first occurrence kept)",
                                item.question.question_id
                            ),
                        });
                        continue;
                    }
                    questions.push(item.question);
                    solutions_by_question.push(item.solutions);
                    splits.push(item.split);
                }
                Err(IngestError::Record { line, message }) => {
                    errors.push(ErrorRecord { line, message });
                }
                Err(fatal) => return Err(StageError::validation(fatal.to_string())),
            }
        }

        let reserved: BTreeSet<String> = section.reserved_source_tags.iter().cloned().collect();
        let predicates = FilterPredicates {
            require_stdin_stdout: section.require_stdin_stdout,
        };

        // Filter keeps question order; carry solutions and splits along by id.
        let mut side: std::collections::BTreeMap<String, (Vec<SolutionRecord>, Option<String>)> =
            questions
                .iter()
                .zip(solutions_by_question)
                .zip(splits)
                .map(|((q, sols), split)| (q.question_id.clone(), (sols, split)))
                .collect();
        let outcome = filter_questions(questions, &reserved, predicates);

        let kept_solutions: Vec<SolutionRecord> = outcome
            .kept
            .iter()
            .flat_map(|q| side.get_mut(&q.question_id).map(|(s, _)| std::mem::take(s)).unwrap_or_default())
            .collect();

        let work = |name: &str| work_dir.join(name);
        let mut outputs = StageOutputs::default();
        write_jsonl_atomic(&work(QUESTIONS), &outcome.kept)?;
        write_jsonl_atomic(&work(SOLUTIONS), &kept_solutions)?;
        write_jsonl_atomic(
            &work(DROPPED),
            outcome.dropped.iter().map(|(q, reason)| DroppedRecord {
                question_id: q.question_id.clone(),
                reason: *reason,
            }),
        )?;
        write_jsonl_atomic(&work(INGEST_ERRORS), &errors)?;
        outputs.files = vec![
            QUESTIONS.to_string(),
            SOLUTIONS.to_string(),
            DROPPED.to_string(),
            INGEST_ERRORS.to_string(),
        ];

        if section.emit_rl_split {
            let tagged = outcome.kept.iter().map(|q| {
                let split = match side.get(&q.question_id).and_then(|(_, s)| s.as_deref()) {
                    Some("test") => Split::Test,
                    _ => Split::Train,
                };
                (q.clone(), split)
            });
            let rl = build_codeforces_rl_split(tagged);
            write_jsonl_atomic(&work(RL_TRAIN), &rl.train)?;
            write_jsonl_atomic(&work(RL_TEST), &rl.test)?;
            outputs.files.push(RL_TRAIN.to_string());
            outputs.files.push(RL_TEST.to_string());
            outputs.counts.insert("rl_train".into(), rl.train.len() as u64);
            outputs.counts.insert("rl_test".into(), rl.test.len() as u64);
            outputs.counts.insert("rl_dropped".into(), rl.dropped as u64);
        }

        outputs.counts.insert("kept".into(), outcome.kept.len() as u64);
        outputs
            .counts
            .insert("dropped".into(), outcome.dropped.len() as u64);
        outputs
            .counts
            .insert("solutions".into(), kept_solutions.len() as u64);
        outputs.counts.insert("errors".into(), errors.len() as u64);
        Ok(outputs)
    }
}
