//! Output comparison policies.

use serde::{Deserialize, Serialize};

/// How actual output is matched against expected output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparePolicy {
    /// CRLF normalized to LF, per-line trailing whitespace stripped,
    /// trailing blank lines dropped, then line-wise equality. Translated
    /// programs differ in trailing-newline behavior across languages, so
    /// this is the default.
    #[default]
    LineNormalized,
    /// Byte equality.
    ExactBytes,
}

/// Compare program output against the expected output under a policy.
pub fn compare_output(actual: &str, expected: &str, policy: ComparePolicy) -> bool {
    match policy {
        ComparePolicy::ExactBytes => actual == expected,
        ComparePolicy::LineNormalized => normalize(actual) == normalize(expected),
    }
}

fn normalize(text: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = text
        .split('\n')
        .map(|line| line.trim_end_matches(|c: char| c == '\r' || c == ' ' || c == '\t'))
        .collect();
    while lines.last().is_some_and(|line| line.is_empty()) {
        lines.pop();
    }
    lines
}
