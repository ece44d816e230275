//! Verify stage: judge every candidate (synthetic translations and original
//! human solutions alike) and keep the accepted subset.

use std::collections::BTreeMap;

use serde::Serialize;

use forge_core::corpus::{QuestionRecord, SolutionRecord};
use forge_core::jsonl;
use forge_core::sandbox::{
    verify_and_filter, JudgeOptions, RunnerRegistry, VerifyConfig,
};

use super::{
    params_json, require_section, Stage, StageInput, StageOutputs, CANDIDATES, CORPUS, QUESTIONS,
    REJECTIONS, SOLUTIONS, VERIFY_SUMMARY,
};
use crate::atomic::{write_atomic, write_jsonl_atomic};
use crate::config::PipelineConfig;
use crate::error::{StageError, StageResult};

#[derive(Serialize)]
struct VerifySummary<'a> {
    candidates: usize,
    judged: usize,
    accepted: usize,
    acceptance_rate: Option<f64>,
    acceptance_rate_percent: String,
    /// Judging limits and normalization are declared gap-fills; echoed here
    /// so every downstream artifact can cite them.
    limits: &'a forge_core::sandbox::ResourceLimits,
    compare_policy: forge_core::sandbox::ComparePolicy,
}

pub struct VerifyStage;

impl Stage for VerifyStage {
    fn prepare(&self, config: &PipelineConfig) -> StageResult<(serde_json::Value, Vec<StageInput>)> {
        let section = require_section!(config, verify, "verify");
        let work_dir = config.work_dir();
        Ok((
            params_json(section)?,
            vec![
                StageInput::upstream("ingest", work_dir.join(QUESTIONS)),
                StageInput::upstream("ingest", work_dir.join(SOLUTIONS)),
                StageInput::upstream("translate", work_dir.join(CANDIDATES)),
                StageInput::external(&section.runner_registry),
            ],
        ))
    }

    fn execute(&self, config: &PipelineConfig, _resume: bool) -> StageResult<StageOutputs> {
        let section = require_section!(config, verify, "verify");
        let work_dir = config.work_dir();

        let registry = RunnerRegistry::from_toml_path(&section.runner_registry)
            .map_err(|e| StageError::validation(e.to_string()))?;
        section
            .limits
            .validate()
            .map_err(StageError::Validation)?;

        let questions: BTreeMap<String, QuestionRecord> =
            jsonl::read_all::<QuestionRecord>(work_dir.join(QUESTIONS))
                .map_err(|e| StageError::Other(e.into()))?
                .into_iter()
                .map(|q| (q.question_id.clone(), q))
                .collect();

        // Original solutions are re-judged alongside the translations.
        let mut candidates: Vec<SolutionRecord> = jsonl::read_all(work_dir.join(SOLUTIONS))
            .map_err(|e| StageError::Other(e.into()))?;
        candidates.extend(
            jsonl::read_all::<SolutionRecord>(work_dir.join(CANDIDATES))
                .map_err(|e| StageError::Other(e.into()))?,
        );

        let verify_config = VerifyConfig {
            limits: section.limits.clone(),
            options: JudgeOptions {
                short_circuit: false,
                compare: section.compare,
            },
            workers: section.workers.unwrap_or_else(|| {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2)
            }),
        };

        let (corpus, report) = verify_and_filter(candidates, &questions, &registry, &verify_config)
            .map_err(|e| StageError::Other(anyhow::anyhow!("judging failed: {e}")))?;

        write_jsonl_atomic(&work_dir.join(CORPUS), corpus.iter())?;
        write_jsonl_atomic(&work_dir.join(REJECTIONS), &report.rejections)?;
        let summary = VerifySummary {
            candidates: report.candidates,
            judged: report.judged,
            accepted: report.accepted,
            acceptance_rate: report.acceptance_rate(),
            acceptance_rate_percent: report.acceptance_rate_percent(),
            limits: &section.limits,
            compare_policy: section.compare,
        };
        write_atomic(
            &work_dir.join(VERIFY_SUMMARY),
            serde_json::to_string_pretty(&summary)
                .map_err(|e| StageError::Other(e.into()))?
                .as_bytes(),
        )?;

        let mut outputs = StageOutputs {
            files: vec![
                CORPUS.to_string(),
                REJECTIONS.to_string(),
                VERIFY_SUMMARY.to_string(),
            ],
            counts: BTreeMap::new(),
        };
        outputs
            .counts
            .insert("candidates".into(), report.candidates as u64);
        outputs.counts.insert("judged".into(), report.judged as u64);
        outputs
            .counts
            .insert("accepted".into(), report.accepted as u64);
        outputs
            .counts
            .insert("rejected".into(), report.rejections.len() as u64);
        outputs
            .counts
            .insert("corpus_questions".into(), corpus.question_count() as u64);
        Ok(outputs)
    }
}
