//! Align stage: embed a parallel program set layer by layer and compute
//! cross-language alignment metrics.

use std::collections::BTreeMap;

use serde::Deserialize;

use forge_core::align::{
    layer_sweep, ordered_pairs, CachedProvider, EmbeddingProvider, HashProvider,
    ParallelProgramSet, RemoteProvider,
};
use forge_core::corpus::{ParallelCorpus, SolutionRecord};
use forge_core::jsonl;
use forge_core::lang::Language;

use super::{
    params_json, require_section, Stage, StageInput, StageOutputs, ALIGN_REPORT_CSV,
    ALIGN_REPORT_JSON, CORPUS,
};
use crate::atomic::write_atomic;
use crate::config::{AlignConfig, PipelineConfig, ProviderConfig};
use crate::error::{StageError, StageResult};

/// One held-out parallel program row on disk.
#[derive(Debug, Deserialize)]
struct ProgramSetRecord {
    question_id: String,
    programs: BTreeMap<String, String>,
}

pub struct AlignStage;

impl Stage for AlignStage {
    fn prepare(&self, config: &PipelineConfig) -> StageResult<(serde_json::Value, Vec<StageInput>)> {
        let section = require_section!(config, align, "align");
        let work_dir = config.work_dir();
        let inputs = match &section.program_set {
            Some(path) => vec![StageInput::external(path)],
            None => vec![StageInput::upstream("verify", work_dir.join(CORPUS))],
        };
        Ok((params_json(section)?, inputs))
    }

    fn execute(&self, config: &PipelineConfig, _resume: bool) -> StageResult<StageOutputs> {
        let section = require_section!(config, align, "align");
        let work_dir = config.work_dir();
        let languages: Vec<Language> = section.languages.iter().map(Language::new).collect();
        if languages.len() < 2 {
            return Err(StageError::validation(
                "align.languages needs at least two languages",
            ));
        }

        let set = match &section.program_set {
            Some(path) => load_program_set(path, &languages)?,
            None => derive_from_corpus(config, section, &languages)?,
        };
        if set.len() < 2 {
            return Err(StageError::Infeasible(format!(
                "parallel program set has {} rows; need at least 2",
                set.len()
            )));
        }

        let provider = build_provider(section)?;
        let pairs = ordered_pairs(&languages);
        let report = layer_sweep(&set, provider.as_ref(), &pairs, section.adjusted_mode, section.seed)
            .map_err(|e| StageError::Other(anyhow::anyhow!("layer sweep: {e}")))?;

        write_atomic(
            &work_dir.join(ALIGN_REPORT_JSON),
            serde_json::to_string_pretty(&report)
                .map_err(|e| StageError::Other(e.into()))?
                .as_bytes(),
        )?;
        write_atomic(&work_dir.join(ALIGN_REPORT_CSV), report.to_csv().as_bytes())?;

        let mut outputs = StageOutputs {
            files: vec![ALIGN_REPORT_JSON.to_string(), ALIGN_REPORT_CSV.to_string()],
            counts: BTreeMap::new(),
        };
        outputs.counts.insert("programs".into(), set.len() as u64);
        outputs.counts.insert("layers".into(), report.layers as u64);
        outputs.counts.insert("rows".into(), report.rows.len() as u64);
        Ok(outputs)
    }
}

fn load_program_set(
    path: &std::path::Path,
    languages: &[Language],
) -> StageResult<ParallelProgramSet> {
    let records: Vec<ProgramSetRecord> =
        jsonl::read_all(path).map_err(|e| StageError::validation(e.to_string()))?;
    let mut rows = Vec::with_capacity(records.len());
    let mut ids = Vec::with_capacity(records.len());
    for record in records {
        let mut row = Vec::with_capacity(languages.len());
        for language in languages {
            let program = record.programs.get(language.as_str()).ok_or_else(|| {
                StageError::validation(format!(
                    "program set row {} lacks language {language}",
                    record.question_id
                ))
            })?;
            row.push(program.clone());
        }
        rows.push(row);
        ids.push(record.question_id);
    }
    ParallelProgramSet::new(languages.to_vec(), rows, ids)
        .map_err(|e| StageError::validation(e.to_string()))
}

/// Fallback set for smoke runs: questions covered in every requested
/// language, one (hash-first) program per cell, capped at `max_programs`.
fn derive_from_corpus(
    config: &PipelineConfig,
    section: &AlignConfig,
    languages: &[Language],
) -> StageResult<ParallelProgramSet> {
    let work_dir = config.work_dir();
    let corpus = ParallelCorpus::from_records(
        jsonl::read_all::<SolutionRecord>(work_dir.join(CORPUS))
            .map_err(|e| StageError::Other(e.into()))?,
    )
    .map_err(|e| StageError::validation(e.to_string()))?;

    let mut rows = Vec::new();
    let mut ids = Vec::new();
    for question in corpus.question_ids() {
        if rows.len() == section.max_programs {
            break;
        }
        let mut row = Vec::with_capacity(languages.len());
        for language in languages {
            match corpus.cell(question, language).first() {
                Some(record) => row.push(record.code.clone()),
                None => break,
            }
        }
        if row.len() == languages.len() {
            rows.push(row);
            ids.push(question.to_string());
        }
    }
    ParallelProgramSet::new(languages.to_vec(), rows, ids)
        .map_err(|e| StageError::validation(e.to_string()))
}

fn build_provider(section: &AlignConfig) -> StageResult<Box<dyn EmbeddingProvider>> {
    Ok(match &section.provider {
        ProviderConfig::Hash {
            layers,
            hidden_size,
        } => Box::new(HashProvider::new(
            format!("hash-v1-{layers}x{hidden_size}"),
            *layers,
            *hidden_size,
        )),
        ProviderConfig::Remote {
            url,
            layers,
            hidden_size,
            timeout_secs,
            cache_dir,
        } => {
            let remote = RemoteProvider::new(
                format!("remote-{url}"),
                url.clone(),
                *layers,
                *hidden_size,
                *timeout_secs,
            )
            .map_err(|e| StageError::validation(e.to_string()))?;
            match cache_dir {
                Some(dir) => Box::new(
                    CachedProvider::new(Box::new(remote) as Box<dyn EmbeddingProvider>, dir)
                        .map_err(|e| StageError::validation(format!("cache dir: {e}")))?,
                ),
                None => Box::new(remote),
            }
        }
    })
}
