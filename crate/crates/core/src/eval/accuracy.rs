//! Boolean accuracy for the validation task.

use serde::{Deserialize, Serialize};

use super::passk::{MetricWithCi, BOOTSTRAP_RESAMPLES};
use super::verdict::BooleanVerdict;
use super::EvalError;
use crate::seeded::rng_from_seed;
use rand::Rng as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub accuracy: MetricWithCi,
    pub n: usize,
    /// Predictions that carried no extractable verdict; scored incorrect.
    pub unparseable: usize,
}

/// Mean of `prediction == label`, with unparseable predictions counted
/// wrong, plus a 95% bootstrap interval.
pub fn validation_accuracy(
    predictions: &[BooleanVerdict],
    labels: &[bool],
    seed: u64,
) -> Result<AccuracyReport, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::EmptyTable);
    }

    let hits: Vec<bool> = predictions
        .iter()
        .zip(labels)
        .map(|(prediction, &label)| prediction.matches(label))
        .collect();
    let unparseable = predictions
        .iter()
        .filter(|p| matches!(p, BooleanVerdict::Unparseable))
        .count();
    let value = hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64;

    let mut rng = rng_from_seed(seed);
    let mut resampled = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let correct = (0..hits.len())
            .filter(|_| hits[rng.random_range(0..hits.len())])
            .count();
        resampled.push(correct as f64 / hits.len() as f64);
    }
    resampled.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let low = resampled[((resampled.len() - 1) as f64 * 0.025).round() as usize];
    let high = resampled[((resampled.len() - 1) as f64 * 0.975).round() as usize];

    Ok(AccuracyReport {
        accuracy: MetricWithCi {
            value,
            ci_low: low,
            ci_high: high,
        },
        n: hits.len(),
        unparseable,
    })
}
