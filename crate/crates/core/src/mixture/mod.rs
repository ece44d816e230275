//! SFT mixture construction: monolingual, parallel, non-parallel, and the
//! target-language oracle, plus merging with general-purpose data.

mod alloc;

pub use alloc::{allocate_budget, Allocation, CellTarget, CoverageGrid};

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ParallelCorpus, QuestionRecord};
use crate::lang::Language;
use crate::seeded::{derive_seed, rng_from_seed, seeded_shuffle};
use crate::translate::substitute;

/// The versioned SFT instruction template. The paper never shows its
/// instruction wording; this is a declared choice, logged in manifests.
pub const SFT_INSTRUCTION_V1: &str = include_str!("../../assets/sft_instruction_v1.txt");

#[derive(Debug, Error)]
pub enum MixtureError {
    #[error("invalid mixture spec: {0}")]
    InvalidSpec(String),
    #[error("infeasible mixture: {detail}")]
    Infeasible { detail: String },
    #[error("infeasible mixture: {} empty cells, first: {}", cells.len(), format_cells(cells))]
    EmptyCells { cells: Vec<(String, Language)> },
    #[error(
        "no feasible question partition in {attempts} attempts; blocking questions: {}",
        blocking.join(", ")
    )]
    NoFeasiblePartition {
        attempts: u64,
        blocking: Vec<String>,
    },
    #[error("question {0} has no statement record")]
    UnknownQuestion(String),
}

fn format_cells(cells: &[(String, Language)]) -> String {
    cells
        .iter()
        .take(10)
        .map(|(q, l)| format!("({q}, {l})"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Which mixture to build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MixtureKind {
    /// All questions in one language (the source-language baseline).
    Monolingual { language: Language },
    /// Every question appears in every language.
    Parallel { languages: Vec<Language> },
    /// No question appears in more than one language.
    NonParallel {
        languages: Vec<Language>,
        partition_seed: u64,
    },
    /// Target-language-only data: analogous to the monolingual mixture but
    /// in the transfer target.
    Oracle { target: Language },
}

impl MixtureKind {
    pub fn name(&self) -> &'static str {
        match self {
            MixtureKind::Monolingual { .. } => "monolingual",
            MixtureKind::Parallel { .. } => "parallel",
            MixtureKind::NonParallel { .. } => "nonparallel",
            MixtureKind::Oracle { .. } => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    #[serde(flatten)]
    pub kind: MixtureKind,
    pub budget: u64,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<(), MixtureError> {
        if self.budget < 1 {
            return Err(MixtureError::InvalidSpec("budget must be >= 1".into()));
        }
        let languages: &[Language] = match &self.kind {
            MixtureKind::Monolingual { language } | MixtureKind::Oracle { target: language } => {
                std::slice::from_ref(language)
            }
            MixtureKind::Parallel { languages } | MixtureKind::NonParallel { languages, .. } => {
                languages
            }
        };
        if languages.is_empty() {
            return Err(MixtureError::InvalidSpec("language list is empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for language in languages {
            if !seen.insert(language) {
                return Err(MixtureError::InvalidSpec(format!(
                    "duplicate language {language}"
                )));
            }
        }
        Ok(())
    }
}

/// One training instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftInstance {
    pub instruction: String,
    pub response: String,
    pub language: Language,
    pub question_id: String,
    pub solution_hash: String,
}

/// Allocation-report row: what each cell was asked for and whether sampling
/// had to fall back to with-replacement draws.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellAllocation {
    pub question_id: String,
    pub language: Language,
    pub target: u64,
    pub supply: usize,
    pub with_replacement: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SftMixture {
    pub spec: MixtureSpec,
    pub instances: Vec<SftInstance>,
    pub allocation: Vec<CellAllocation>,
}

impl SftMixture {
    pub fn question_coverage(&self) -> usize {
        let mut questions: Vec<&str> = self
            .instances
            .iter()
            .map(|i| i.question_id.as_str())
            .collect();
        questions.sort();
        questions.dedup();
        questions.len()
    }

    /// Distinct languages per question, for the parallel/non-parallel
    /// defining properties.
    pub fn languages_per_question(&self) -> BTreeMap<String, usize> {
        let mut map: BTreeMap<String, std::collections::BTreeSet<&Language>> = BTreeMap::new();
        for instance in &self.instances {
            map.entry(instance.question_id.clone())
                .or_default()
                .insert(&instance.language);
        }
        map.into_iter().map(|(q, set)| (q, set.len())).collect()
    }
}

/// Render the instruction for one (question, language) pair.
pub fn render_instruction(statement: &str, language: &Language) -> String {
    let descriptor = language.descriptor();
    substitute(
        SFT_INSTRUCTION_V1,
        &[("{language}", &descriptor.long_name), ("{statement}", statement)],
    )
}

/// Extract the coverage grid a corpus offers to the allocator.
pub fn coverage_grid(corpus: &ParallelCorpus, languages: &[Language]) -> CoverageGrid {
    corpus
        .question_ids()
        .map(|question| {
            let cells = languages
                .iter()
                .map(|l| (l.clone(), corpus.cell_size(question, l)))
                .collect();
            (question.to_string(), cells)
        })
        .collect()
}

/// Build any mixture kind from a verified corpus.
pub fn build_mixture(
    spec: &MixtureSpec,
    corpus: &ParallelCorpus,
    questions: &BTreeMap<String, QuestionRecord>,
) -> Result<SftMixture, MixtureError> {
    spec.validate()?;
    let languages: Vec<Language> = match &spec.kind {
        MixtureKind::Monolingual { language } | MixtureKind::Oracle { target: language } => {
            vec![language.clone()]
        }
        MixtureKind::Parallel { languages } | MixtureKind::NonParallel { languages, .. } => {
            languages.clone()
        }
    };
    let coverage = coverage_grid(corpus, &languages);
    let allocation = allocate_budget(spec, &coverage)?;

    let mut instances = Vec::with_capacity(spec.budget as usize);
    let mut report = Vec::with_capacity(allocation.targets.len());
    for target in &allocation.targets {
        let question = questions
            .get(&target.question_id)
            .ok_or_else(|| MixtureError::UnknownQuestion(target.question_id.clone()))?;
        let cell = corpus.cell(&target.question_id, &target.language);
        let drawn = draw_from_cell(&cell, target.count, spec.seed, &target.question_id, &target.language);
        report.push(CellAllocation {
            question_id: target.question_id.clone(),
            language: target.language.clone(),
            target: target.count,
            supply: cell.len(),
            with_replacement: (target.count as usize) > cell.len(),
        });
        let instruction = render_instruction(&question.statement, &target.language);
        for index in drawn {
            let record = cell[index];
            instances.push(SftInstance {
                instruction: instruction.clone(),
                response: record.code.clone(),
                language: target.language.clone(),
                question_id: target.question_id.clone(),
                solution_hash: record.code_hash(),
            });
        }
    }

    Ok(SftMixture {
        spec: spec.clone(),
        instances,
        allocation: report,
    })
}

/// Uniform draws from one cell: without replacement while supply lasts,
/// topping up with replacement only when the target exceeds supply.
fn draw_from_cell(
    cell: &[&crate::corpus::SolutionRecord],
    count: u64,
    seed: u64,
    question: &str,
    language: &Language,
) -> Vec<usize> {
    let label = format!("sample-{question}-{language}");
    let mut order: Vec<usize> = (0..cell.len()).collect();
    seeded_shuffle(&mut order, seed, &label);
    let count = count as usize;
    if count <= order.len() {
        order.truncate(count);
        return order;
    }
    let mut rng = rng_from_seed(derive_seed(seed, &format!("{label}-replacement")));
    let extra = (0..count - order.len()).map(|_| rng.random_range(0..cell.len().max(1)));
    order.extend(extra);
    order
}

/// Convenience wrappers matching the three §-style mixture names.
pub fn build_monolingual(
    corpus: &ParallelCorpus,
    questions: &BTreeMap<String, QuestionRecord>,
    language: Language,
    budget: u64,
    seed: u64,
) -> Result<SftMixture, MixtureError> {
    build_mixture(
        &MixtureSpec {
            kind: MixtureKind::Monolingual { language },
            budget,
            seed,
        },
        corpus,
        questions,
    )
}

pub fn build_parallel(
    corpus: &ParallelCorpus,
    questions: &BTreeMap<String, QuestionRecord>,
    languages: Vec<Language>,
    budget: u64,
    seed: u64,
) -> Result<SftMixture, MixtureError> {
    build_mixture(
        &MixtureSpec {
            kind: MixtureKind::Parallel { languages },
            budget,
            seed,
        },
        corpus,
        questions,
    )
}

pub fn build_nonparallel(
    corpus: &ParallelCorpus,
    questions: &BTreeMap<String, QuestionRecord>,
    languages: Vec<Language>,
    budget: u64,
    seed: u64,
    partition_seed: u64,
) -> Result<SftMixture, MixtureError> {
    build_mixture(
        &MixtureSpec {
            kind: MixtureKind::NonParallel {
                languages,
                partition_seed,
            },
            budget,
            seed,
        },
        corpus,
        questions,
    )
}

/// Composition counts for a merged dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub general: usize,
    pub coding: usize,
    pub total: usize,
}

impl fmt::Display for CompositionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "final SFT dataset composition")?;
        writeln!(f, "  general instances: {}", self.general)?;
        writeln!(f, "  coding instances:  {}", self.coding)?;
        writeln!(f, "  total:             {}", self.total)
    }
}

/// Concatenate the coding mixture with opaque general-purpose records and
/// seed-shuffle. Final size is exactly `|general| + |coding|`.
pub fn merge_with_general(
    coding: &SftMixture,
    general: Vec<serde_json::Value>,
    seed: u64,
) -> (Vec<serde_json::Value>, CompositionReport) {
    let report = CompositionReport {
        general: general.len(),
        coding: coding.instances.len(),
        total: general.len() + coding.instances.len(),
    };
    let mut lines: Vec<serde_json::Value> = general;
    lines.extend(
        coding
            .instances
            .iter()
            .map(|i| serde_json::to_value(i).expect("instance serializes")),
    );
    seeded_shuffle(&mut lines, seed, "merge-with-general");
    (lines, report)
}
