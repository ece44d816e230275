//! Boolean verdict extraction from validation-task responses.

use regex::RegexBuilder;
use serde::{Deserialize, Serialize};

use super::EvalError;

/// Outcome of scanning a response for a verdict. `Unparseable` is scored as
/// incorrect in accuracy but tallied separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BooleanVerdict {
    True,
    False,
    Unparseable,
}

impl BooleanVerdict {
    pub fn matches(&self, label: bool) -> bool {
        matches!(
            (self, label),
            (BooleanVerdict::True, true) | (BooleanVerdict::False, false)
        )
    }
}

/// Configurable verdict pattern: the final standalone occurrence of any
/// listed word decides, so chain-of-thought before the answer is ignored.
#[derive(Debug, Clone)]
pub struct VerdictExtractor {
    regex: regex::Regex,
    true_words: Vec<String>,
}

impl VerdictExtractor {
    pub fn new(true_words: &[&str], false_words: &[&str]) -> Result<Self, EvalError> {
        if true_words.is_empty() || false_words.is_empty() {
            return Err(EvalError::InvalidPattern(
                "verdict word lists must be non-empty".to_string(),
            ));
        }
        let mut words: Vec<&str> = true_words.iter().chain(false_words).copied().collect();
        // Longest-first keeps prefixes from shadowing longer words.
        words.sort_by_key(|w| std::cmp::Reverse(w.len()));
        let pattern = format!(
            r"\b(?:{})\b",
            words
                .iter()
                .map(|w| regex::escape(w))
                .collect::<Vec<_>>()
                .join("|")
        );
        let regex = RegexBuilder::new(&pattern)
            .case_insensitive(true)
            .build()
            .map_err(|e| EvalError::InvalidPattern(e.to_string()))?;
        Ok(VerdictExtractor {
            regex,
            true_words: true_words.iter().map(|w| w.to_lowercase()).collect(),
        })
    }

    pub fn extract(&self, response: &str) -> BooleanVerdict {
        match self.regex.find_iter(response).last() {
            Some(found) => {
                if self.true_words.contains(&found.as_str().to_lowercase()) {
                    BooleanVerdict::True
                } else {
                    BooleanVerdict::False
                }
            }
            None => BooleanVerdict::Unparseable,
        }
    }
}

impl Default for VerdictExtractor {
    fn default() -> Self {
        VerdictExtractor::new(&["true", "correct"], &["false", "incorrect"])
            .expect("default pattern is valid")
    }
}

/// Extract with the default pattern.
pub fn extract_boolean_verdict(response: &str) -> BooleanVerdict {
    VerdictExtractor::default().extract(response)
}
