//! Stage orchestration: prerequisite checks, content-hash idempotency,
//! atomic outputs, manifest accounting.

mod align;
mod evaluate;
mod ingest;
mod mix;
mod translate;
mod verify;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use crate::config::PipelineConfig;
use crate::error::{StageError, StageResult};
use crate::manifest::{hash_file, now_unix_ms, Manifest, ManifestEntry};

// Stage output file names, all relative to the work dir.
pub const QUESTIONS: &str = "questions.jsonl";
pub const SOLUTIONS: &str = "solutions.jsonl";
pub const DROPPED: &str = "dropped.jsonl";
pub const INGEST_ERRORS: &str = "ingest_errors.jsonl";
pub const RL_TRAIN: &str = "rl_train.jsonl";
pub const RL_TEST: &str = "rl_test.jsonl";
pub const CANDIDATES: &str = "candidates.jsonl";
pub const TRANSLATE_OUTCOMES: &str = "translate_outcomes.jsonl";
pub const CORPUS: &str = "corpus.jsonl";
pub const REJECTIONS: &str = "rejections.jsonl";
pub const VERIFY_SUMMARY: &str = "verify_summary.json";
pub const MERGED: &str = "merged.jsonl";
pub const COMPOSITION: &str = "composition.txt";
pub const EVAL_OUTCOMES: &str = "eval_outcomes.jsonl";
pub const EVAL_REPORT: &str = "eval_report.csv";
pub const ALIGN_REPORT_JSON: &str = "alignment_report.json";
pub const ALIGN_REPORT_CSV: &str = "alignment_report.csv";

pub fn mixture_file(kind: &str) -> String {
    format!("mixture_{kind}.jsonl")
}

pub fn mixture_alloc_file(kind: &str) -> String {
    format!("mixture_{kind}_allocation.jsonl")
}

/// Where a prerequisite file comes from, for error routing: a missing
/// external file is a config problem, a missing stage output means the
/// upstream stage has not run.
pub(crate) enum InputSource {
    External,
    Upstream(&'static str),
}

pub(crate) struct StageInput {
    pub name: String,
    pub path: PathBuf,
    pub source: InputSource,
}

impl StageInput {
    pub fn external(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        StageInput {
            name: path.display().to_string(),
            path,
            source: InputSource::External,
        }
    }

    pub fn upstream(stage: &'static str, path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        StageInput {
            name: path.display().to_string(),
            path,
            source: InputSource::Upstream(stage),
        }
    }
}

/// What a stage produced: output file names (work-dir relative) and counts
/// for the manifest.
#[derive(Debug, Default)]
pub(crate) struct StageOutputs {
    pub files: Vec<String>,
    pub counts: BTreeMap<String, u64>,
}

pub(crate) trait Stage {
    /// Parameter snapshot and prerequisite files.
    fn prepare(&self, config: &PipelineConfig) -> StageResult<(serde_json::Value, Vec<StageInput>)>;
    fn execute(
        &self,
        config: &PipelineConfig,
        resume: bool,
    ) -> StageResult<StageOutputs>;
}

fn stage_by_name(name: &str) -> StageResult<Box<dyn Stage>> {
    Ok(match name {
        "ingest" => Box::new(ingest::IngestStage),
        "translate" => Box::new(translate::TranslateStage),
        "verify" => Box::new(verify::VerifyStage),
        "mix" => Box::new(mix::MixStage),
        "evaluate" => Box::new(evaluate::EvaluateStage),
        "align" => Box::new(align::AlignStage),
        other => {
            return Err(StageError::validation(format!("unknown stage: {other}")))
        }
    })
}

/// Run exactly one stage: validate, check prerequisites, skip when nothing
/// changed, otherwise execute and append to the manifest.
pub fn run_stage(config: &PipelineConfig, stage_name: &str, resume: bool) -> StageResult<()> {
    let stage = stage_by_name(stage_name)?;
    let work_dir = config.work_dir();
    std::fs::create_dir_all(work_dir)
        .map_err(|e| StageError::validation(format!("cannot create work dir: {e}")))?;

    let (params, inputs) = stage.prepare(config)?;
    let mut input_hashes = BTreeMap::new();
    for input in &inputs {
        if !input.path.exists() {
            return Err(match input.source {
                InputSource::External => StageError::validation(format!(
                    "configured path does not exist: {}",
                    input.path.display()
                )),
                InputSource::Upstream(upstream) => StageError::UpstreamMissing {
                    stage: upstream.to_string(),
                    path: input.path.clone(),
                },
            });
        }
        input_hashes.insert(input.name.clone(), hash_file(&input.path)?);
    }

    let mut manifest = Manifest::open(work_dir)?;
    if !resume && manifest.is_noop(stage_name, &input_hashes, &params, work_dir) {
        println!("stage {stage_name}: no-op, inputs and parameters unchanged");
        manifest.append(ManifestEntry {
            stage: stage_name.to_string(),
            skipped: true,
            started_unix_ms: now_unix_ms(),
            wall_ms: 0,
            params,
            input_hashes,
            output_hashes: BTreeMap::new(),
            counts: BTreeMap::new(),
        })?;
        return Ok(());
    }

    let started = now_unix_ms();
    let clock = Instant::now();
    let outputs = stage.execute(config, resume)?;
    let wall_ms = clock.elapsed().as_millis() as u64;

    let mut output_hashes = BTreeMap::new();
    for name in &outputs.files {
        output_hashes.insert(name.clone(), hash_file(&work_dir.join(name))?);
    }
    manifest.append(ManifestEntry {
        stage: stage_name.to_string(),
        skipped: false,
        started_unix_ms: started,
        wall_ms,
        params,
        input_hashes,
        output_hashes,
        counts: outputs.counts.clone(),
    })?;

    let summary: Vec<String> = outputs
        .counts
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    println!("stage {stage_name}: done in {wall_ms}ms ({})", summary.join(", "));
    Ok(())
}

pub(crate) fn params_json<T: serde::Serialize>(value: &T) -> StageResult<serde_json::Value> {
    serde_json::to_value(value)
        .map_err(|e| StageError::Other(anyhow::anyhow!("params snapshot: {e}")))
}

/// Fetch a stage section or fail validation.
macro_rules! require_section {
    ($config:expr, $field:ident, $name:literal) => {
        $config.$field.as_ref().ok_or_else(|| {
            crate::error::StageError::validation(concat!(
                "config has no [",
                $name,
                "] section"
            ))
        })?
    };
}
pub(crate) use require_section;
