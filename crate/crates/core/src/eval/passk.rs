//! pass@1 / pass@k over per-question sample outcomes.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::seeded::{rng_from_seed, Rng};
use rand::Rng as _;

/// k boolean outcomes for one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionOutcomes {
    pub question_id: String,
    pub flags: Vec<bool>,
}

/// Uniform-k outcome table: every question has exactly k outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeTable {
    rows: Vec<QuestionOutcomes>,
    k: usize,
}

impl OutcomeTable {
    pub fn new(rows: Vec<QuestionOutcomes>) -> Result<Self, EvalError> {
        let k = match rows.first() {
            Some(row) => row.flags.len(),
            None => return Err(EvalError::EmptyTable),
        };
        if k == 0 {
            return Err(EvalError::EmptyTable);
        }
        if let Some(bad) = rows.iter().find(|row| row.flags.len() != k) {
            return Err(EvalError::RaggedOutcomes {
                question_id: bad.question_id.clone(),
                expected: k,
                actual: bad.flags.len(),
            });
        }
        Ok(OutcomeTable { rows, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn questions(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[QuestionOutcomes] {
        &self.rows
    }
}

/// A point estimate with its 95% bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricWithCi {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassAtK {
    pub k: usize,
    pub questions: usize,
    pub pass_at_1: MetricWithCi,
    pub pass_at_k: MetricWithCi,
}

/// Number of bootstrap resamples behind every reported interval.
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

fn mean_pass1(rows: &[&QuestionOutcomes]) -> f64 {
    let total: usize = rows.iter().map(|r| r.flags.len()).sum();
    let hits: usize = rows
        .iter()
        .map(|r| r.flags.iter().filter(|&&f| f).count())
        .sum();
    hits as f64 / total as f64
}

fn mean_passk(rows: &[&QuestionOutcomes]) -> f64 {
    let solved = rows.iter().filter(|r| r.flags.iter().any(|&f| f)).count();
    solved as f64 / rows.len() as f64
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let index = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[index]
}

fn bootstrap_ci(
    table: &OutcomeTable,
    metric: impl Fn(&[&QuestionOutcomes]) -> f64,
    rng: &mut Rng,
    resamples: usize,
) -> (f64, f64) {
    let rows = table.rows();
    let mut values = Vec::with_capacity(resamples);
    let mut sample: Vec<&QuestionOutcomes> = Vec::with_capacity(rows.len());
    for _ in 0..resamples {
        sample.clear();
        for _ in 0..rows.len() {
            sample.push(&rows[rng.random_range(0..rows.len())]);
        }
        values.push(metric(&sample));
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("metric values are finite"));
    (percentile(&values, 0.025), percentile(&values, 0.975))
}

/// Compute pass@1 and pass@k with bootstrap intervals over questions.
///
/// pass@1 is the plain mean over all k·Q samples (samples are treated as
/// independent); pass@k marks a question solved when any of its k samples
/// passes. The unbiased combinatorial estimator is available separately as
/// [`unbiased_pass_at_k`].
pub fn pass_at_k(table: &OutcomeTable, seed: u64) -> PassAtK {
    let rows: Vec<&QuestionOutcomes> = table.rows().iter().collect();
    let pass1 = mean_pass1(&rows);
    let passk = mean_passk(&rows);

    let mut rng = rng_from_seed(seed);
    let (low1, high1) = bootstrap_ci(table, mean_pass1, &mut rng, BOOTSTRAP_RESAMPLES);
    let (lowk, highk) = bootstrap_ci(table, mean_passk, &mut rng, BOOTSTRAP_RESAMPLES);

    PassAtK {
        k: table.k(),
        questions: table.questions(),
        pass_at_1: MetricWithCi {
            value: pass1,
            ci_low: low1,
            ci_high: high1,
        },
        pass_at_k: MetricWithCi {
            value: passk,
            ci_low: lowk,
            ci_high: highk,
        },
    }
}

/// The alternative combinatorial estimator `1 - C(n-c, k) / C(n, k)`.
pub fn unbiased_pass_at_k(n: usize, c: usize, k: usize) -> f64 {
    if n.saturating_sub(c) < k {
        return 1.0;
    }
    1.0 - (1..=k).fold(1.0_f64, |acc, i| {
        acc * (n - c - k + i) as f64 / (n - k + i) as f64
    })
}
