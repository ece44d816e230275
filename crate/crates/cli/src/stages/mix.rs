//! Mix stage: build the configured SFT mixtures from the verified corpus
//! and optionally merge one with general-purpose pass-through data.

use std::collections::BTreeMap;

use forge_core::corpus::{ParallelCorpus, QuestionRecord, SolutionRecord};
use forge_core::jsonl;
use forge_core::lang::Language;
use forge_core::mixture::{
    build_mixture, merge_with_general, MixtureKind, MixtureSpec,
};
use forge_core::seeded::derive_seed;

use super::{
    mixture_alloc_file, mixture_file, params_json, require_section, Stage, StageInput,
    StageOutputs, COMPOSITION, CORPUS, MERGED, QUESTIONS,
};
use crate::atomic::{write_atomic, write_jsonl_atomic};
use crate::config::{MixConfig, PipelineConfig};
use crate::error::{StageError, StageResult};

pub struct MixStage;

fn resolve_kind(section: &MixConfig, kind: &str) -> StageResult<MixtureKind> {
    let languages: Vec<Language> = section.languages.iter().map(Language::new).collect();
    match kind {
        "monolingual" => {
            let language = section.source_language.as_ref().ok_or_else(|| {
                StageError::validation("mix.source_language required for the monolingual kind")
            })?;
            Ok(MixtureKind::Monolingual {
                language: Language::new(language),
            })
        }
        "parallel" => Ok(MixtureKind::Parallel { languages }),
        "nonparallel" => Ok(MixtureKind::NonParallel {
            languages,
            partition_seed: section
                .partition_seed
                .unwrap_or_else(|| derive_seed(section.seed, "partition")),
        }),
        "oracle" => {
            let target = section.oracle_target.as_ref().ok_or_else(|| {
                StageError::validation("mix.oracle_target required for the oracle kind")
            })?;
            Ok(MixtureKind::Oracle {
                target: Language::new(target),
            })
        }
        other => Err(StageError::validation(format!(
            "unknown mixture kind: {other}"
        ))),
    }
}

impl Stage for MixStage {
    fn prepare(&self, config: &PipelineConfig) -> StageResult<(serde_json::Value, Vec<StageInput>)> {
        let section = require_section!(config, mix, "mix");
        let work_dir = config.work_dir();
        let mut inputs = vec![
            StageInput::upstream("ingest", work_dir.join(QUESTIONS)),
            StageInput::upstream("verify", work_dir.join(CORPUS)),
        ];
        if let Some(general) = &section.general_instances {
            inputs.push(StageInput::external(general));
        }
        Ok((params_json(section)?, inputs))
    }

    fn execute(&self, config: &PipelineConfig, _resume: bool) -> StageResult<StageOutputs> {
        let section = require_section!(config, mix, "mix");
        let work_dir = config.work_dir();

        if section.kinds.is_empty() {
            return Err(StageError::validation("mix.kinds must not be empty"));
        }
        if let Some(merge_kind) = &section.merge_kind {
            if !section.kinds.contains(merge_kind) {
                return Err(StageError::validation(format!(
                    "mix.merge_kind {merge_kind} is not among mix.kinds"
                )));
            }
            if section.general_instances.is_none() {
                return Err(StageError::validation(
                    "mix.merge_kind set but mix.general_instances missing",
                ));
            }
        }

        let questions: BTreeMap<String, QuestionRecord> =
            jsonl::read_all::<QuestionRecord>(work_dir.join(QUESTIONS))
                .map_err(|e| StageError::Other(e.into()))?
                .into_iter()
                .map(|q| (q.question_id.clone(), q))
                .collect();
        let corpus = ParallelCorpus::from_records(
            jsonl::read_all::<SolutionRecord>(work_dir.join(CORPUS))
                .map_err(|e| StageError::Other(e.into()))?,
        )
        .map_err(|e| StageError::validation(e.to_string()))?;

        let mut outputs = StageOutputs::default();
        let mut built = BTreeMap::new();
        for kind_name in &section.kinds {
            let spec = MixtureSpec {
                kind: resolve_kind(section, kind_name)?,
                budget: section.budget,
                seed: section.seed,
            };
            let mixture = build_mixture(&spec, &corpus, &questions)?;

            let instances_file = mixture_file(kind_name);
            let alloc_file = mixture_alloc_file(kind_name);
            write_jsonl_atomic(&work_dir.join(&instances_file), &mixture.instances)?;
            write_jsonl_atomic(&work_dir.join(&alloc_file), &mixture.allocation)?;
            outputs.files.push(instances_file);
            outputs.files.push(alloc_file);
            outputs.counts.insert(
                format!("{kind_name}_instances"),
                mixture.instances.len() as u64,
            );
            outputs.counts.insert(
                format!("{kind_name}_questions"),
                mixture.question_coverage() as u64,
            );
            built.insert(kind_name.clone(), mixture);
        }

        if let (Some(general_path), Some(merge_kind)) =
            (&section.general_instances, &section.merge_kind)
        {
            let general: Vec<serde_json::Value> =
                jsonl::read_all(general_path).map_err(|e| StageError::Other(e.into()))?;
            let mixture = &built[merge_kind];
            let (lines, composition) = merge_with_general(mixture, general, section.seed);
            write_jsonl_atomic(&work_dir.join(MERGED), &lines)?;
            write_atomic(&work_dir.join(COMPOSITION), composition.to_string().as_bytes())?;
            outputs.files.push(MERGED.to_string());
            outputs.files.push(COMPOSITION.to_string());
            outputs
                .counts
                .insert("merged_total".into(), composition.total as u64);
            outputs
                .counts
                .insert("merged_general".into(), composition.general as u64);
        }

        Ok(outputs)
    }
}
