//! Task verifiers and evaluation metrics for code generation and code
//! validation.

mod accuracy;
mod balance;
mod passk;
mod reward;
mod split;
mod verdict;

pub use accuracy::{validation_accuracy, AccuracyReport};
pub use balance::{balance_eval_set, BalanceWarning, BalancedEvalSet};
pub use passk::{
    pass_at_k, unbiased_pass_at_k, MetricWithCi, OutcomeTable, PassAtK, QuestionOutcomes,
    BOOTSTRAP_RESAMPLES,
};
pub use reward::{codegen_reward, RewardOutcome, RewardRequest, RewardResponse, RewardServer};
pub use split::{build_codeforces_rl_split, RlSplit, Split};
pub use verdict::{extract_boolean_verdict, BooleanVerdict, VerdictExtractor};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::QuestionRecord;
use crate::lang::Language;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("outcome table is empty")]
    EmptyTable,
    #[error("question {question_id} has {actual} outcomes, expected {expected}")]
    RaggedOutcomes {
        question_id: String,
        expected: usize,
        actual: usize,
    },
    #[error("{predictions} predictions vs {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("invalid verdict pattern: {0}")]
    InvalidPattern(String),
}

/// One code-generation task instance: the prompt is the question itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationTaskInstance {
    pub question: QuestionRecord,
    pub target_language: Language,
    /// Versioned id of the prompt template used to render the RL prompt.
    pub prompt_template_id: String,
}

/// One code-validation task instance: question plus candidate program.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationTaskInstance {
    pub question: QuestionRecord,
    pub candidate_code: String,
    pub candidate_language: Language,
    /// Ground-truth correctness of the candidate.
    pub label: bool,
}

/// Per-question outcomes plus the aggregate metrics computed from them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalResult {
    pub outcomes: OutcomeTable,
    pub metrics: PassAtK,
}

impl EvalResult {
    pub fn compute(outcomes: OutcomeTable, seed: u64) -> Self {
        let metrics = pass_at_k(&outcomes, seed);
        EvalResult { outcomes, metrics }
    }
}
