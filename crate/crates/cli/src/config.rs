//! The declarative pipeline configuration file.
//!
//! One TOML file drives every stage. Secrets never live in the file: the
//! endpoint section names an environment variable and the value is read from
//! the environment at request time. Every stage carries an explicit seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use forge_core::align::AdjustedMode;
use forge_core::sandbox::ResourceLimits;
use forge_core::translate::{EndpointConfig, SamplingParams};

use crate::error::{StageError, StageResult};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    #[serde(default)]
    pub ingest: Option<IngestConfig>,
    #[serde(default)]
    pub translate: Option<TranslateConfig>,
    #[serde(default)]
    pub verify: Option<VerifyStageConfig>,
    #[serde(default)]
    pub mix: Option<MixConfig>,
    #[serde(default)]
    pub evaluate: Option<EvaluateConfig>,
    #[serde(default)]
    pub align: Option<AlignConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Stage outputs and the manifest live here.
    pub work_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub seed: u64,
    /// Raw line-delimited dataset.
    pub input: PathBuf,
    #[serde(default)]
    pub reserved_source_tags: Vec<String>,
    #[serde(default = "default_true")]
    pub require_stdin_stdout: bool,
    /// Also build the RL train/test split from source split tags.
    #[serde(default)]
    pub emit_rl_split: bool,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TranslateConfig {
    pub seed: u64,
    pub source_language: String,
    pub target_languages: Vec<String>,
    pub samples_per_solution: u32,
    pub endpoint: EndpointConfig,
    #[serde(default)]
    pub sampling: SamplingParams,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyStageConfig {
    pub seed: u64,
    /// Declarative per-language runner registry.
    pub runner_registry: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub limits: ResourceLimits,
    /// `line-normalized` (default) or `exact-bytes`.
    #[serde(default)]
    pub compare: forge_core::sandbox::ComparePolicy,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MixConfig {
    pub seed: u64,
    pub budget: u64,
    pub languages: Vec<String>,
    /// Which mixtures to build: subset of monolingual, parallel,
    /// nonparallel, oracle.
    pub kinds: Vec<String>,
    /// Language of the monolingual baseline.
    #[serde(default)]
    pub source_language: Option<String>,
    /// Target language of the oracle mixture.
    #[serde(default)]
    pub oracle_target: Option<String>,
    #[serde(default)]
    pub partition_seed: Option<u64>,
    /// Opaque general-purpose instances to merge with `merge_kind`.
    #[serde(default)]
    pub general_instances: Option<PathBuf>,
    #[serde(default)]
    pub merge_kind: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub seed: u64,
    /// `generation` or `validation`.
    pub task: String,
    /// Sampled model responses, line-delimited.
    pub responses: PathBuf,
    /// Samples per question (generation task).
    #[serde(default)]
    pub k: Option<usize>,
    pub runner_registry: PathBuf,
    #[serde(default)]
    pub limits: ResourceLimits,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlignConfig {
    pub seed: u64,
    pub languages: Vec<String>,
    /// Held-out parallel program file; when absent the set is derived from
    /// the verified corpus.
    #[serde(default)]
    pub program_set: Option<PathBuf>,
    #[serde(default = "default_max_programs")]
    pub max_programs: usize,
    #[serde(default)]
    pub adjusted_mode: AdjustedMode,
    pub provider: ProviderConfig,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProviderConfig {
    /// Deterministic hash-derived embeddings for smoke runs.
    Hash { layers: usize, hidden_size: usize },
    /// HTTP provider speaking {text, span_start, span_end}.
    Remote {
        url: String,
        layers: usize,
        hidden_size: usize,
        #[serde(default = "default_provider_timeout")]
        timeout_secs: u64,
        #[serde(default)]
        cache_dir: Option<PathBuf>,
    },
}

fn default_true() -> bool {
    true
}

fn default_max_programs() -> usize {
    312
}

fn default_provider_timeout() -> u64 {
    60
}

impl PipelineConfig {
    pub fn load(path: &Path) -> StageResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            StageError::validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: PipelineConfig = toml::from_str(&text)
            .map_err(|e| StageError::validation(format!("config parse error: {e}")))?;
        Ok(config)
    }

    /// Apply `--seed-override stage=value` pairs.
    pub fn override_seeds(&mut self, overrides: &BTreeMap<String, u64>) -> StageResult<()> {
        for (stage, seed) in overrides {
            match stage.as_str() {
                "ingest" => self.ingest.as_mut().map(|c| c.seed = *seed),
                "translate" => self.translate.as_mut().map(|c| c.seed = *seed),
                "verify" => self.verify.as_mut().map(|c| c.seed = *seed),
                "mix" => self.mix.as_mut().map(|c| c.seed = *seed),
                "evaluate" => self.evaluate.as_mut().map(|c| c.seed = *seed),
                "align" => self.align.as_mut().map(|c| c.seed = *seed),
                other => {
                    return Err(StageError::validation(format!(
                        "unknown stage in seed override: {other}"
                    )))
                }
            }
            .ok_or_else(|| {
                StageError::validation(format!("seed override for unconfigured stage {stage}"))
            })?;
        }
        Ok(())
    }

    pub fn work_dir(&self) -> &Path {
        &self.paths.work_dir
    }
}

/// Parse one `stage=seed` override.
pub fn parse_seed_override(raw: &str) -> StageResult<(String, u64)> {
    let (stage, value) = raw.split_once('=').ok_or_else(|| {
        StageError::validation(format!("seed override must be stage=value, got {raw}"))
    })?;
    let seed: u64 = value
        .parse()
        .map_err(|_| StageError::validation(format!("seed override value not a u64: {value}")))?;
    Ok((stage.trim().to_string(), seed))
}
