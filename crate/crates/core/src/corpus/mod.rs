//! Canonical domain types for questions, solutions, and verified corpora.

mod filter;
mod ingest;
mod stats;

pub use filter::{filter_questions, DropReason, FilterOutcome, FilterPredicates};
pub use ingest::{ingest_dataset, IngestError, IngestItem, RecordFormat};
pub use stats::{corpus_stats, StatsReport};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lang::Language;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot insert unverified solution {0} into a verified corpus")]
    NotVerified(String),
}

/// One stdin/stdout test case, stored byte-exact as ingested.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub stdin: String,
    pub expected_stdout: String,
    /// Set when an empty expected output is intentional rather than a data
    /// defect; ingestion rejects empty expectations without it.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_empty_stdout: bool,
}

impl TestCase {
    pub fn new(stdin: impl Into<String>, expected_stdout: impl Into<String>) -> Self {
        TestCase {
            stdin: stdin.into(),
            expected_stdout: expected_stdout.into(),
            allow_empty_stdout: false,
        }
    }
}

/// A coding question: statement, test suite, and provenance flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: String,
    pub source_dataset: String,
    pub statement: String,
    pub tests: Vec<TestCase>,
    pub has_visual_input: bool,
    pub has_custom_checker: bool,
    pub uses_stdin_stdout: bool,
}

/// How a solution came to exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Origin {
    Human,
    SyntheticTranslation {
        model_id: String,
        source_solution_id: String,
        sample_index: u32,
    },
}

/// Execution-verification status of a solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Verification {
    Unverified,
    Passed,
    Failed { reason: String },
}

/// One code program in one language tied to a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub question_id: String,
    pub language: Language,
    pub code: String,
    pub origin: Origin,
    pub verification: Verification,
}

impl SolutionRecord {
    pub fn human(question_id: impl Into<String>, language: Language, code: impl Into<String>) -> Self {
        SolutionRecord {
            question_id: question_id.into(),
            language,
            code: code.into(),
            origin: Origin::Human,
            verification: Verification::Unverified,
        }
    }

    /// Content hash of the normalized code (trailing whitespace stripped per
    /// line). Translation sampling produces exact duplicates; this is the
    /// dedup identity.
    pub fn code_hash(&self) -> String {
        normalized_code_hash(&self.code)
    }

    /// Stable identifier used in manifests: question, language, code hash
    /// prefix, and for synthetic records the sample index.
    pub fn candidate_id(&self) -> String {
        let hash = self.code_hash();
        match &self.origin {
            Origin::Human => format!("{}:{}:{}", self.question_id, self.language, &hash[..12]),
            Origin::SyntheticTranslation { sample_index, .. } => format!(
                "{}:{}:{}:s{}",
                self.question_id,
                self.language,
                &hash[..12],
                sample_index
            ),
        }
    }
}

/// Hash of code with per-line trailing whitespace stripped (CR included).
pub fn normalized_code_hash(code: &str) -> String {
    let normalized: Vec<&str> = code.split('\n').map(|line| line.trim_end()).collect();
    let mut hasher = Sha256::new();
    hasher.update(normalized.join("\n").as_bytes());
    hex::encode(hasher.finalize())
}

/// Per-question, per-language sets of verified solutions.
///
/// Every stored record has `verification == Passed`; cells never contain
/// duplicates (dedup by normalized-code hash). Iteration order is fully
/// deterministic.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParallelCorpus {
    entries: BTreeMap<String, BTreeMap<Language, BTreeMap<String, SolutionRecord>>>,
}

impl ParallelCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a verified solution. Returns `Ok(true)` if newly added,
    /// `Ok(false)` if an identical (question, language, code) entry already
    /// exists.
    pub fn insert(&mut self, record: SolutionRecord) -> Result<bool, CorpusError> {
        if record.verification != Verification::Passed {
            return Err(CorpusError::NotVerified(record.candidate_id()));
        }
        let hash = record.code_hash();
        let cell = self
            .entries
            .entry(record.question_id.clone())
            .or_default()
            .entry(record.language.clone())
            .or_default();
        Ok(cell.insert(hash, record).is_none())
    }

    pub fn question_count(&self) -> usize {
        self.entries.len()
    }

    pub fn question_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    /// Languages appearing anywhere in the corpus, sorted.
    pub fn languages(&self) -> Vec<Language> {
        let mut langs: Vec<Language> = self
            .entries
            .values()
            .flat_map(|cells| cells.keys().cloned())
            .collect();
        langs.sort();
        langs.dedup();
        langs
    }

    /// Verified solutions in one (question, language) cell, hash-ordered.
    pub fn cell(&self, question_id: &str, language: &Language) -> Vec<&SolutionRecord> {
        self.entries
            .get(question_id)
            .and_then(|cells| cells.get(language))
            .map(|set| set.values().collect())
            .unwrap_or_default()
    }

    pub fn cell_size(&self, question_id: &str, language: &Language) -> usize {
        self.entries
            .get(question_id)
            .and_then(|cells| cells.get(language))
            .map(|set| set.len())
            .unwrap_or(0)
    }

    pub fn total_solutions(&self) -> usize {
        self.entries
            .values()
            .flat_map(|cells| cells.values())
            .map(|set| set.len())
            .sum()
    }

    /// All records in deterministic (question, language, hash) order.
    pub fn iter(&self) -> impl Iterator<Item = &SolutionRecord> {
        self.entries
            .values()
            .flat_map(|cells| cells.values())
            .flat_map(|set| set.values())
    }

    /// Rebuild a corpus from serialized records, enforcing the verified-only
    /// invariant and deduplicating.
    pub fn from_records(
        records: impl IntoIterator<Item = SolutionRecord>,
    ) -> Result<Self, CorpusError> {
        let mut corpus = ParallelCorpus::new();
        for record in records {
            corpus.insert(record)?;
        }
        Ok(corpus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn passed(question: &str, lang: &str, code: &str) -> SolutionRecord {
        SolutionRecord {
            question_id: question.to_string(),
            language: Language::new(lang),
            code: code.to_string(),
            origin: Origin::Human,
            verification: Verification::Passed,
        }
    }

    #[test]
    fn insert_rejects_unverified() {
        let mut corpus = ParallelCorpus::new();
        let record = SolutionRecord::human("q1", Language::new("python"), "print(1)");
        assert!(corpus.insert(record).is_err());
    }

    #[test]
    fn duplicate_code_leaves_cell_unchanged() {
        let mut corpus = ParallelCorpus::new();
        assert!(corpus.insert(passed("q1", "python", "print(1)")).unwrap());
        // Trailing whitespace does not defeat dedup.
        assert!(!corpus.insert(passed("q1", "python", "print(1)  ")).unwrap());
        assert_eq!(corpus.cell_size("q1", &Language::new("python")), 1);
    }

    #[test]
    fn normalized_hash_strips_trailing_whitespace_only() {
        assert_eq!(normalized_code_hash("a = 1  \nb\t\n"), normalized_code_hash("a = 1\nb\n"));
        assert_ne!(normalized_code_hash("a  = 1"), normalized_code_hash("a = 1"));
        // CRLF line ends normalize too.
        assert_eq!(normalized_code_hash("x\r\ny"), normalized_code_hash("x\ny"));
    }

    #[test]
    fn candidate_ids_distinguish_sample_indices() {
        let mut record = passed("q1", "go", "fmt.Println(1)");
        record.origin = Origin::SyntheticTranslation {
            model_id: "m".into(),
            source_solution_id: "src".into(),
            sample_index: 3,
        };
        assert!(record.candidate_id().ends_with(":s3"));
    }
}
