//! Evaluate stage: score sampled model responses for either task and emit
//! the metrics CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use forge_core::corpus::QuestionRecord;
use forge_core::eval::{
    codegen_reward, pass_at_k, validation_accuracy, BooleanVerdict, GenerationTaskInstance,
    OutcomeTable, QuestionOutcomes, VerdictExtractor,
};
use forge_core::jsonl;
use forge_core::lang::Language;
use forge_core::sandbox::RunnerRegistry;
use forge_core::seeded::derive_seed;

use super::{
    params_json, require_section, Stage, StageInput, StageOutputs, EVAL_OUTCOMES, EVAL_REPORT,
    QUESTIONS,
};
use crate::atomic::{write_atomic, write_jsonl_atomic};
use crate::config::PipelineConfig;
use crate::error::{StageError, StageResult};

/// One sampled generation response.
#[derive(Debug, Deserialize)]
struct GenerationResponse {
    question_id: String,
    language: String,
    sample_index: u32,
    response: String,
}

/// One validation response with its ground-truth label.
#[derive(Debug, Deserialize)]
struct ValidationResponse {
    language: String,
    response: String,
    label: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct GenerationOutcomeRecord {
    language: String,
    question_id: String,
    flags: Vec<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ValidationOutcomeRecord {
    language: String,
    verdict: BooleanVerdict,
    label: bool,
}

pub struct EvaluateStage;

impl Stage for EvaluateStage {
    fn prepare(&self, config: &PipelineConfig) -> StageResult<(serde_json::Value, Vec<StageInput>)> {
        let section = require_section!(config, evaluate, "evaluate");
        let work_dir = config.work_dir();
        let mut inputs = vec![StageInput::external(&section.responses)];
        if section.task == "generation" {
            inputs.push(StageInput::upstream("ingest", work_dir.join(QUESTIONS)));
            inputs.push(StageInput::external(&section.runner_registry));
        }
        Ok((params_json(section)?, inputs))
    }

    fn execute(&self, config: &PipelineConfig, _resume: bool) -> StageResult<StageOutputs> {
        let section = require_section!(config, evaluate, "evaluate");
        match section.task.as_str() {
            "generation" => self.evaluate_generation(config),
            "validation" => self.evaluate_validation(config),
            other => Err(StageError::validation(format!(
                "evaluate.task must be generation or validation, got {other}"
            ))),
        }
    }
}

impl EvaluateStage {
    fn evaluate_generation(&self, config: &PipelineConfig) -> StageResult<StageOutputs> {
        let section = require_section!(config, evaluate, "evaluate");
        let work_dir = config.work_dir();

        let registry = RunnerRegistry::from_toml_path(&section.runner_registry)
            .map_err(|e| StageError::validation(e.to_string()))?;
        let questions: BTreeMap<String, QuestionRecord> =
            jsonl::read_all::<QuestionRecord>(work_dir.join(QUESTIONS))
                .map_err(|e| StageError::Other(e.into()))?
                .into_iter()
                .map(|q| (q.question_id.clone(), q))
                .collect();
        let responses: Vec<GenerationResponse> = jsonl::read_all(&section.responses)
            .map_err(|e| StageError::validation(e.to_string()))?;

        // Group samples per (language, question), ordered by sample index.
        let mut grouped: BTreeMap<(String, String), Vec<(u32, String)>> = BTreeMap::new();
        for r in responses {
            grouped
                .entry((r.language, r.question_id))
                .or_default()
                .push((r.sample_index, r.response));
        }
        let k = match section.k {
            Some(k) if k >= 1 => k,
            Some(_) => return Err(StageError::validation("evaluate.k must be >= 1")),
            None => grouped.values().next().map(|v| v.len()).unwrap_or(0),
        };
        if k == 0 {
            return Err(StageError::validation("no responses to evaluate"));
        }

        let mut per_language: BTreeMap<String, Vec<QuestionOutcomes>> = BTreeMap::new();
        let mut outcome_records = Vec::new();
        for ((language, question_id), mut samples) in grouped {
            if samples.len() != k {
                return Err(StageError::validation(format!(
                    "question {question_id} ({language}) has {} samples, expected {k}",
                    samples.len()
                )));
            }
            samples.sort_by_key(|(index, _)| *index);
            let question = questions.get(&question_id).ok_or_else(|| {
                StageError::validation(format!("responses reference unknown question {question_id}"))
            })?;
            let instance = GenerationTaskInstance {
                question: question.clone(),
                target_language: Language::new(&language),
                prompt_template_id: "eval-v1".to_string(),
            };
            let flags: Vec<bool> = samples
                .iter()
                .map(|(_, response)| {
                    codegen_reward(&instance, response, &registry, &section.limits).reward == 1
                })
                .collect();
            outcome_records.push(GenerationOutcomeRecord {
                language: language.clone(),
                question_id: question_id.clone(),
                flags: flags.clone(),
            });
            per_language
                .entry(language)
                .or_default()
                .push(QuestionOutcomes {
                    question_id,
                    flags,
                });
        }

        let mut csv = String::from("language,metric,value,ci_low,ci_high,n\n");
        let mut combined: Vec<QuestionOutcomes> = Vec::new();
        for (language, rows) in &per_language {
            combined.extend(rows.iter().cloned());
            let table = OutcomeTable::new(rows.clone())
                .map_err(|e| StageError::validation(e.to_string()))?;
            let metrics = pass_at_k(&table, derive_seed(section.seed, language));
            append_pass_rows(&mut csv, language, &metrics);
        }
        if per_language.len() > 1 {
            let table = OutcomeTable::new(combined)
                .map_err(|e| StageError::validation(e.to_string()))?;
            let metrics = pass_at_k(&table, derive_seed(section.seed, "all"));
            append_pass_rows(&mut csv, "all", &metrics);
        }

        write_jsonl_atomic(&work_dir.join(EVAL_OUTCOMES), &outcome_records)?;
        write_atomic(&work_dir.join(EVAL_REPORT), csv.as_bytes())?;

        let mut outputs = StageOutputs {
            files: vec![EVAL_OUTCOMES.to_string(), EVAL_REPORT.to_string()],
            counts: BTreeMap::new(),
        };
        outputs
            .counts
            .insert("questions".into(), outcome_records.len() as u64);
        outputs.counts.insert("k".into(), k as u64);
        Ok(outputs)
    }

    fn evaluate_validation(&self, config: &PipelineConfig) -> StageResult<StageOutputs> {
        let section = require_section!(config, evaluate, "evaluate");
        let work_dir = config.work_dir();

        let responses: Vec<ValidationResponse> = jsonl::read_all(&section.responses)
            .map_err(|e| StageError::validation(e.to_string()))?;
        if responses.is_empty() {
            return Err(StageError::validation("no responses to evaluate"));
        }

        let extractor = VerdictExtractor::default();
        let mut per_language: BTreeMap<String, (Vec<BooleanVerdict>, Vec<bool>)> = BTreeMap::new();
        let mut outcome_records = Vec::new();
        for r in responses {
            let verdict = extractor.extract(&r.response);
            outcome_records.push(ValidationOutcomeRecord {
                language: r.language.clone(),
                verdict,
                label: r.label,
            });
            let entry = per_language.entry(r.language).or_default();
            entry.0.push(verdict);
            entry.1.push(r.label);
        }

        let mut csv = String::from("language,metric,value,ci_low,ci_high,n\n");
        for (language, (verdicts, labels)) in &per_language {
            let report =
                validation_accuracy(verdicts, labels, derive_seed(section.seed, language))
                    .map_err(|e| StageError::validation(e.to_string()))?;
            let _ = writeln!(
                csv,
                "{language},accuracy,{:.6},{:.6},{:.6},{}",
                report.accuracy.value, report.accuracy.ci_low, report.accuracy.ci_high, report.n
            );
            let _ = writeln!(
                csv,
                "{language},unparseable_rate,{:.6},,,{}",
                report.unparseable as f64 / report.n as f64,
                report.n
            );
        }

        write_jsonl_atomic(&work_dir.join(EVAL_OUTCOMES), &outcome_records)?;
        write_atomic(&work_dir.join(EVAL_REPORT), csv.as_bytes())?;
        let mut outputs = StageOutputs {
            files: vec![EVAL_OUTCOMES.to_string(), EVAL_REPORT.to_string()],
            counts: BTreeMap::new(),
        };
        outputs
            .counts
            .insert("instances".into(), outcome_records.len() as u64);
        Ok(outputs)
    }
}

fn append_pass_rows(csv: &mut String, language: &str, metrics: &forge_core::eval::PassAtK) {
    let _ = writeln!(
        csv,
        "{language},pass@1,{:.6},{:.6},{:.6},{}",
        metrics.pass_at_1.value, metrics.pass_at_1.ci_low, metrics.pass_at_1.ci_high,
        metrics.questions
    );
    let _ = writeln!(
        csv,
        "{language},pass@{},{:.6},{:.6},{:.6},{}",
        metrics.k, metrics.pass_at_k.value, metrics.pass_at_k.ci_low, metrics.pass_at_k.ci_high,
        metrics.questions
    );
}
