//! Question-level filtering with single-reason drop accounting.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::QuestionRecord;

/// Why a question was dropped. Every drop carries exactly one primary
/// reason, checked in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    ReservedSource,
    VisualInput,
    CustomChecker,
    NonStdinStdout,
    EmptyTests,
}

impl std::fmt::Display for DropReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DropReason::ReservedSource => "reserved-source",
            DropReason::VisualInput => "visual-input",
            DropReason::CustomChecker => "custom-checker",
            DropReason::NonStdinStdout => "non-stdin-stdout",
            DropReason::EmptyTests => "empty-tests",
        };
        f.write_str(s)
    }
}

/// Which optional predicates are active.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FilterPredicates {
    /// Drop questions with custom checkers or without stdin/stdout tests.
    pub require_stdin_stdout: bool,
}

impl Default for FilterPredicates {
    fn default() -> Self {
        FilterPredicates {
            require_stdin_stdout: true,
        }
    }
}

#[derive(Debug, Default)]
pub struct FilterOutcome {
    pub kept: Vec<QuestionRecord>,
    pub dropped: Vec<(QuestionRecord, DropReason)>,
}

/// Partition questions into kept and dropped-with-reason.
///
/// Total over valid records: `|kept| + |dropped| == |input|`.
pub fn filter_questions(
    records: impl IntoIterator<Item = QuestionRecord>,
    reserved_source_tags: &BTreeSet<String>,
    predicates: FilterPredicates,
) -> FilterOutcome {
    let mut outcome = FilterOutcome::default();
    for record in records {
        match drop_reason(&record, reserved_source_tags, predicates) {
            Some(reason) => outcome.dropped.push((record, reason)),
            None => outcome.kept.push(record),
        }
    }
    outcome
}

fn drop_reason(
    record: &QuestionRecord,
    reserved: &BTreeSet<String>,
    predicates: FilterPredicates,
) -> Option<DropReason> {
    if reserved.contains(&record.source_dataset) {
        return Some(DropReason::ReservedSource);
    }
    if record.has_visual_input {
        return Some(DropReason::VisualInput);
    }
    if predicates.require_stdin_stdout {
        if record.has_custom_checker {
            return Some(DropReason::CustomChecker);
        }
        if !record.uses_stdin_stdout {
            return Some(DropReason::NonStdinStdout);
        }
    }
    if record.tests.is_empty() {
        return Some(DropReason::EmptyTests);
    }
    None
}
