//! Ingestion of raw line-delimited coding datasets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{QuestionRecord, SolutionRecord, TestCase};
use crate::jsonl::{JsonlError, JsonlReader};
use crate::lang::Language;

/// Schema tag for the raw input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordFormat {
    /// One JSON object per line with inline human solutions.
    Jsonl,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
}

/// The raw wire schema: a question with its human solutions inline.
#[derive(Debug, Deserialize, Serialize)]
struct RawRecord {
    question_id: String,
    source_dataset: String,
    statement: String,
    tests: Vec<RawTest>,
    has_visual_input: bool,
    has_custom_checker: bool,
    uses_stdin_stdout: bool,
    solutions: Vec<RawSolution>,
    /// Optional source split tag (e.g. "train"/"test") carried through for
    /// RL split construction.
    #[serde(default)]
    split: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct RawTest {
    stdin: String,
    expected_stdout: String,
    #[serde(default)]
    allow_empty_stdout: bool,
}

#[derive(Debug, Deserialize, Serialize)]
struct RawSolution {
    language: String,
    code: String,
}

/// One successfully parsed line: the question, its human solutions, and the
/// optional source split tag.
#[derive(Debug, Clone)]
pub struct IngestItem {
    pub question: QuestionRecord,
    pub solutions: Vec<SolutionRecord>,
    pub split: Option<String>,
}

/// Stream a raw dataset file in file order.
///
/// Malformed lines are yielded as positioned [`IngestError::Record`] values,
/// never silently dropped; parsing continues on the next line.
pub fn ingest_dataset(
    path: impl AsRef<Path>,
    format: RecordFormat,
) -> Result<impl Iterator<Item = Result<IngestItem, IngestError>>, IngestError> {
    let RecordFormat::Jsonl = format;
    let path = path.as_ref().to_path_buf();
    let reader = JsonlReader::<RawRecord>::open(&path).map_err(|e| match e {
        JsonlError::Open { path, source } => IngestError::Unreadable { path, source },
        other => IngestError::Record {
            line: 0,
            message: other.to_string(),
        },
    })?;

    Ok(reader.map(|item| match item {
        Ok((line, raw)) => validate(raw).map_err(|message| IngestError::Record { line, message }),
        Err(JsonlError::Malformed { line, message, .. }) => {
            Err(IngestError::Record { line, message })
        }
        Err(other) => Err(IngestError::Record {
            line: 0,
            message: other.to_string(),
        }),
    }))
}

fn validate(raw: RawRecord) -> Result<IngestItem, String> {
    if raw.question_id.trim().is_empty() {
        return Err("question_id is empty".to_string());
    }
    let mut tests = Vec::with_capacity(raw.tests.len());
    for (i, t) in raw.tests.into_iter().enumerate() {
        if t.expected_stdout.is_empty() && !t.allow_empty_stdout {
            return Err(format!(
                "test {i} has empty expected_stdout without allow_empty_stdout"
            ));
        }
        tests.push(TestCase {
            stdin: t.stdin,
            expected_stdout: t.expected_stdout,
            allow_empty_stdout: t.allow_empty_stdout,
        });
    }
    let question = QuestionRecord {
        question_id: raw.question_id.clone(),
        source_dataset: raw.source_dataset,
        statement: raw.statement,
        tests,
        has_visual_input: raw.has_visual_input,
        has_custom_checker: raw.has_custom_checker,
        uses_stdin_stdout: raw.uses_stdin_stdout,
    };
    let solutions = raw
        .solutions
        .into_iter()
        .map(|s| SolutionRecord::human(&raw.question_id, Language::new(&s.language), s.code))
        .collect();
    Ok(IngestItem {
        question,
        solutions,
        split: raw.split,
    })
}
