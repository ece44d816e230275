//! RL train/test split construction for judge-style datasets.

use serde::{Deserialize, Serialize};

use crate::corpus::QuestionRecord;

/// Source-provided split tag, preserved through filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RlSplit {
    pub train: Vec<QuestionRecord>,
    pub test: Vec<QuestionRecord>,
    pub dropped: usize,
}

/// Keep stdin/stdout-verifiable instances only: custom-checker questions and
/// those without stdin-stdout tests are excluded, existing split tags are
/// preserved.
pub fn build_codeforces_rl_split(
    records: impl IntoIterator<Item = (QuestionRecord, Split)>,
) -> RlSplit {
    let mut split = RlSplit::default();
    for (record, tag) in records {
        if record.has_custom_checker || !record.uses_stdin_stdout {
            split.dropped += 1;
            continue;
        }
        match tag {
            Split::Train => split.train.push(record),
            Split::Test => split.test.push(record),
        }
    }
    split
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TestCase;

    fn record(id: &str, custom_checker: bool, stdio: bool) -> QuestionRecord {
        QuestionRecord {
            question_id: id.to_string(),
            source_dataset: "codeforces".into(),
            statement: "s".into(),
            tests: vec![TestCase::new("", "x")],
            has_visual_input: false,
            has_custom_checker: custom_checker,
            uses_stdin_stdout: stdio,
        }
    }

    #[test]
    fn filters_and_preserves_split_tags() {
        // Shaped like a miniature of the real feed: mostly clean training
        // instances, a few test instances, planted checker/non-stdio rows.
        let mut records = Vec::new();
        for i in 0..20 {
            records.push((record(&format!("t{i}"), false, true), Split::Train));
        }
        for i in 0..5 {
            records.push((record(&format!("e{i}"), false, true), Split::Test));
        }
        records.push((record("bad-checker", true, true), Split::Train));
        records.push((record("bad-stdio", false, false), Split::Test));

        let split = build_codeforces_rl_split(records);
        assert_eq!(split.train.len(), 20);
        assert_eq!(split.test.len(), 5);
        assert_eq!(split.dropped, 2);
        assert!(split.train.iter().all(|r| !r.has_custom_checker));
    }

    #[test]
    fn custom_checker_is_excluded() {
        let split = build_codeforces_rl_split([(record("q", true, true), Split::Train)]);
        assert!(split.train.is_empty());
        assert_eq!(split.dropped, 1);
    }

    #[test]
    fn empty_input_gives_empty_splits() {
        let split = build_codeforces_rl_split([]);
        assert!(split.train.is_empty());
        assert!(split.test.is_empty());
        assert_eq!(split.dropped, 0);
    }
}
