//! Class balancing for validation eval sets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ValidationTaskInstance;
use crate::lang::Language;
use crate::seeded::seeded_shuffle;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalanceWarning {
    pub language: Language,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct BalancedEvalSet {
    pub instances: Vec<ValidationTaskInstance>,
    pub warnings: Vec<BalanceWarning>,
}

/// Balance correct and incorrect instances per language via truncation.
///
/// For each language, `m = min(#true, #false)` instances of each class are
/// kept by seeded sampling, so per-language totals are always even. A
/// language missing one class entirely is dropped with a warning.
pub fn balance_eval_set(
    instances: Vec<ValidationTaskInstance>,
    seed: u64,
) -> BalancedEvalSet {
    let mut by_language: BTreeMap<Language, (Vec<ValidationTaskInstance>, Vec<ValidationTaskInstance>)> =
        BTreeMap::new();
    for instance in instances {
        let entry = by_language
            .entry(instance.candidate_language.clone())
            .or_default();
        if instance.label {
            entry.0.push(instance);
        } else {
            entry.1.push(instance);
        }
    }

    let mut result = BalancedEvalSet::default();
    for (language, (mut trues, mut falses)) in by_language {
        let keep = trues.len().min(falses.len());
        if keep == 0 {
            let message = format!(
                "language {language} dropped: {} correct / {} incorrect instances",
                trues.len(),
                falses.len()
            );
            log::warn!("{message}");
            result.warnings.push(BalanceWarning { language, message });
            continue;
        }
        seeded_shuffle(&mut trues, seed, &format!("balance-{language}-true"));
        seeded_shuffle(&mut falses, seed, &format!("balance-{language}-false"));
        trues.truncate(keep);
        falses.truncate(keep);
        result.instances.extend(trues);
        result.instances.extend(falses);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{QuestionRecord, TestCase};

    fn instance(language: &str, index: usize, label: bool) -> ValidationTaskInstance {
        ValidationTaskInstance {
            question: QuestionRecord {
                question_id: format!("q-{language}-{index}-{label}"),
                source_dataset: "fixture".into(),
                statement: "s".into(),
                tests: vec![TestCase::new("", "x")],
                has_visual_input: false,
                has_custom_checker: false,
                uses_stdin_stdout: true,
            },
            candidate_code: "code".into(),
            candidate_language: Language::new(language),
            label,
        }
    }

    fn class_counts(instances: &[ValidationTaskInstance], language: &str) -> (usize, usize) {
        let lang = Language::new(language);
        let trues = instances
            .iter()
            .filter(|i| i.candidate_language == lang && i.label)
            .count();
        let falses = instances
            .iter()
            .filter(|i| i.candidate_language == lang && !i.label)
            .count();
        (trues, falses)
    }

    #[test]
    fn truncates_majority_class() {
        let mut pool = Vec::new();
        for i in 0..10 {
            pool.push(instance("go", i, true));
        }
        for i in 0..4 {
            pool.push(instance("go", i, false));
        }
        let balanced = balance_eval_set(pool, 1);
        assert_eq!(class_counts(&balanced.instances, "go"), (4, 4));
        assert!(balanced.warnings.is_empty());
    }

    #[test]
    fn missing_class_drops_language_with_warning() {
        let pool: Vec<_> = (0..5).map(|i| instance("php", i, false)).collect();
        let balanced = balance_eval_set(pool, 1);
        assert!(balanced.instances.is_empty());
        assert_eq!(balanced.warnings.len(), 1);
        assert_eq!(balanced.warnings[0].language, Language::new("php"));
    }

    #[test]
    fn balancing_is_idempotent_in_counts() {
        let mut pool = Vec::new();
        for i in 0..9 {
            pool.push(instance("ruby", i, true));
        }
        for i in 0..6 {
            pool.push(instance("ruby", i, false));
        }
        let once = balance_eval_set(pool, 3);
        let twice = balance_eval_set(once.instances.clone(), 3);
        assert_eq!(once.instances.len(), twice.instances.len());
        assert_eq!(class_counts(&twice.instances, "ruby"), (6, 6));
    }

    #[test]
    fn languages_balance_independently() {
        let mut pool = Vec::new();
        for i in 0..3 {
            pool.push(instance("go", i, true));
            pool.push(instance("go", i, false));
        }
        for i in 0..8 {
            pool.push(instance("php", i, true));
        }
        pool.push(instance("php", 99, false));
        let balanced = balance_eval_set(pool, 7);
        assert_eq!(class_counts(&balanced.instances, "go"), (3, 3));
        assert_eq!(class_counts(&balanced.instances, "php"), (1, 1));
    }
}
