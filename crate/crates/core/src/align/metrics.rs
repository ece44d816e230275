//! Anisotropy-robust similarity metrics over paired vector sets.

use rand::Rng as _;

use super::AlignError;
use crate::seeded::rng_from_seed;

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> Result<f64, AlignError> {
    if a.len() != b.len() {
        return Err(AlignError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm_a = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(AlignError::ZeroVector);
    }
    Ok(dot / (norm_a * norm_b))
}

fn check_pair_sets(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<(), AlignError> {
    if a.len() != b.len() {
        return Err(AlignError::Misaligned {
            detail: format!("{} vectors vs {}", a.len(), b.len()),
        });
    }
    if a.len() < 2 {
        return Err(AlignError::TooFew { n: a.len() });
    }
    Ok(())
}

/// Fraction of rows whose true counterpart is strictly the nearest neighbor
/// by cosine: `cos(A_i, B_i) > max over j != i of cos(A_i, B_j)`.
///
/// Directional (a against candidates in b); ties count as failure.
pub fn retrieval_accuracy(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64, AlignError> {
    check_pair_sets(a, b)?;
    let n = a.len();
    let mut hits = 0usize;
    for i in 0..n {
        let own = cosine(&a[i], &b[i])?;
        let mut best_other = f64::NEG_INFINITY;
        for j in 0..n {
            if j != i {
                best_other = best_other.max(cosine(&a[i], &b[j])?);
            }
        }
        if own > best_other {
            hits += 1;
        }
    }
    Ok(hits as f64 / n as f64)
}

/// Mean of `cos(A_i, B_i) - cos(A_i, B_j(i))` with one non-parallel
/// counterpart `j(i) != i` drawn uniformly per row.
pub fn adjusted_cosine_sampled(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    seed: u64,
) -> Result<f64, AlignError> {
    check_pair_sets(a, b)?;
    let n = a.len();
    let mut rng = rng_from_seed(seed);
    let mut total = 0.0;
    for i in 0..n {
        // Uniform over the n-1 indices other than i.
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        total += cosine(&a[i], &b[i])? - cosine(&a[i], &b[j])?;
    }
    Ok(total / n as f64)
}

/// Exact-expectation variant: the baseline term averages over all `j != i`.
pub fn adjusted_cosine_exact(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64, AlignError> {
    check_pair_sets(a, b)?;
    let n = a.len();
    let mut total = 0.0;
    for i in 0..n {
        let own = cosine(&a[i], &b[i])?;
        let mut baseline = 0.0;
        for j in 0..n {
            if j != i {
                baseline += cosine(&a[i], &b[j])?;
            }
        }
        total += own - baseline / (n - 1) as f64;
    }
    Ok(total / n as f64)
}

/// Which baseline estimate the sweep reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjustedMode {
    /// One random non-parallel counterpart per row.
    #[default]
    SingleSample,
    /// Average over every non-parallel counterpart.
    Exact,
}

pub fn adjusted_cosine(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    mode: AdjustedMode,
    seed: u64,
) -> Result<f64, AlignError> {
    match mode {
        AdjustedMode::SingleSample => adjusted_cosine_sampled(a, b, seed),
        AdjustedMode::Exact => adjusted_cosine_exact(a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn distinct_unit_rows(n: usize) -> Vec<Vec<f64>> {
        // Mutually orthogonal one-hot rows.
        (0..n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v
            })
            .collect()
    }

    #[test]
    fn identical_sets_retrieve_perfectly() {
        let a = distinct_unit_rows(4);
        assert_eq!(retrieval_accuracy(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn hand_checked_three_point_case() {
        let a = vec![vec![1.0, 0.0], vec![0.9, 0.1], vec![0.0, 1.0]];
        let b = vec![vec![0.0, 1.0], vec![1.0, 0.05], vec![0.1, 1.0]];
        // Exhaustive comparison: i=0 fails (cos(a0,b1)=0.9988 beats own 0),
        // i=1 hits (own 0.9982 vs 0.1104 and 0.2088), i=2 fails
        // (cos(a2,b0)=1.0 beats own 0.9950).
        assert_eq!(retrieval_accuracy(&a, &b).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn ties_count_as_failure() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        // Both candidates equally similar to a0.
        let b = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(retrieval_accuracy(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_parallel_rows_give_adjusted_one() {
        let a = distinct_unit_rows(5);
        assert!((adjusted_cosine_exact(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((adjusted_cosine_sampled(&a, &a, 3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fully_anisotropic_space_scores_zero() {
        // Every row identical: parallel and non-parallel cosines coincide.
        let a: Vec<Vec<f64>> = (0..4).map(|_| vec![0.3, 0.7, -0.2]).collect();
        assert!(adjusted_cosine_exact(&a, &a).unwrap().abs() < 1e-12);
        assert!(adjusted_cosine_sampled(&a, &a, 9).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zero_vector_is_an_error() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        assert!(matches!(
            retrieval_accuracy(&a, &a),
            Err(AlignError::ZeroVector)
        ));
    }

    #[test]
    fn single_row_is_too_few() {
        let a = vec![vec![1.0]];
        assert!(matches!(
            retrieval_accuracy(&a, &a),
            Err(AlignError::TooFew { n: 1 })
        ));
    }

    #[test]
    fn scale_invariance_of_retrieval() {
        let a = vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, -0.9]];
        let b = vec![vec![0.9, 1.9], vec![-1.1, 0.6], vec![0.2, -1.0]];
        let base = retrieval_accuracy(&a, &b).unwrap();
        let scaled: Vec<Vec<f64>> = a
            .iter()
            .enumerate()
            .map(|(i, v)| v.iter().map(|x| x * (i + 1) as f64 * 3.5).collect())
            .collect();
        assert_eq!(retrieval_accuracy(&scaled, &b).unwrap(), base);
    }
}
