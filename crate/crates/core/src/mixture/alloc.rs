//! Budget allocation across the (question, language) grid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MixtureError, MixtureKind, MixtureSpec};
use crate::lang::Language;
use crate::seeded::seeded_shuffle;

/// Verified-solution supply per (question, language) cell.
pub type CoverageGrid = BTreeMap<String, BTreeMap<Language, usize>>;

/// Planned instance count for one cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellTarget {
    pub question_id: String,
    pub language: Language,
    pub count: u64,
}

/// The full plan: targets sum to the budget exactly.
#[derive(Debug, Clone, Default)]
pub struct Allocation {
    pub targets: Vec<CellTarget>,
}

impl Allocation {
    pub fn total(&self) -> u64 {
        self.targets.iter().map(|t| t.count).sum()
    }
}

fn supply(coverage: &CoverageGrid, question: &str, language: &Language) -> usize {
    coverage
        .get(question)
        .and_then(|cells| cells.get(language))
        .copied()
        .unwrap_or(0)
}

/// Split `budget` into per-question counts: everyone gets the base share,
/// and one extra goes to the first `budget % n` questions in seeded-shuffled
/// order (never file order, to avoid biasing early questions).
fn spread(
    questions: &[String],
    language: &Language,
    budget: u64,
    seed: u64,
    label: &str,
) -> Vec<CellTarget> {
    let n = questions.len() as u64;
    let base = budget / n;
    let remainder = (budget % n) as usize;
    let mut order: Vec<usize> = (0..questions.len()).collect();
    seeded_shuffle(&mut order, seed, label);
    let mut counts = vec![base; questions.len()];
    for &index in order.iter().take(remainder) {
        counts[index] += 1;
    }
    questions
        .iter()
        .zip(counts)
        .map(|(question_id, count)| CellTarget {
            question_id: question_id.clone(),
            language: language.clone(),
            count,
        })
        .collect()
}

/// Questions dealt into `languages.len()` seeded groups; group `i` has
/// `Q/L + 1` members for the first `Q % L` groups and is assigned
/// `languages[i]`. Retries with re-derived seeds until every question's
/// assigned cell is non-empty.
pub(crate) fn partition_questions(
    questions: &[String],
    languages: &[Language],
    coverage: &CoverageGrid,
    partition_seed: u64,
    max_attempts: u64,
) -> Result<Vec<Vec<String>>, MixtureError> {
    let q = questions.len();
    let l = languages.len();
    let mut last_blocking = Vec::new();
    for attempt in 0..max_attempts {
        let mut order: Vec<String> = questions.to_vec();
        seeded_shuffle(&mut order, partition_seed, &format!("partition-{attempt}"));
        let mut groups: Vec<Vec<String>> = Vec::with_capacity(l);
        let mut cursor = 0usize;
        for i in 0..l {
            let size = q / l + usize::from(i < q % l);
            groups.push(order[cursor..cursor + size].to_vec());
            cursor += size;
        }
        let blocking: Vec<String> = groups
            .iter()
            .zip(languages)
            .flat_map(|(group, lang)| {
                group
                    .iter()
                    .filter(|question| supply(coverage, question, lang) == 0)
                    .cloned()
            })
            .collect();
        if blocking.is_empty() {
            return Ok(groups);
        }
        last_blocking = blocking;
    }
    last_blocking.sort();
    last_blocking.dedup();
    Err(MixtureError::NoFeasiblePartition {
        attempts: max_attempts,
        blocking: last_blocking,
    })
}

/// Compute per-cell target counts for a mixture spec.
///
/// All kinds demand full question coverage, so the sum of targets equals the
/// budget exactly and every question receives at least one instance.
pub fn allocate_budget(spec: &MixtureSpec, coverage: &CoverageGrid) -> Result<Allocation, MixtureError> {
    spec.validate()?;
    let questions: Vec<String> = coverage.keys().cloned().collect();
    let q = questions.len() as u64;
    if q == 0 {
        return Err(MixtureError::Infeasible {
            detail: "coverage grid has no questions".to_string(),
        });
    }
    let budget = spec.budget;

    match &spec.kind {
        MixtureKind::Monolingual { language } | MixtureKind::Oracle { target: language } => {
            require_cells(coverage, &questions, std::slice::from_ref(language))?;
            if budget < q {
                return Err(MixtureError::Infeasible {
                    detail: format!(
                        "budget {budget} cannot give each of {q} questions one instance (short by {})",
                        q - budget
                    ),
                });
            }
            Ok(Allocation {
                targets: spread(&questions, language, budget, spec.seed, "mono-remainder"),
            })
        }
        MixtureKind::Parallel { languages } => {
            require_cells(coverage, &questions, languages)?;
            let l = languages.len() as u64;
            if budget < l * q {
                return Err(MixtureError::Infeasible {
                    detail: format!(
                        "budget {budget} cannot cover all {q} questions in all {l} languages (needs {})",
                        l * q
                    ),
                });
            }
            // Budget splits equally across languages first, then across
            // questions within each language, so per-language totals differ
            // by at most one.
            let base = budget / l;
            let remainder = (budget % l) as usize;
            let mut order: Vec<usize> = (0..languages.len()).collect();
            seeded_shuffle(&mut order, spec.seed, "parallel-language-remainder");
            let mut shares = vec![base; languages.len()];
            for &index in order.iter().take(remainder) {
                shares[index] += 1;
            }
            let mut targets = Vec::new();
            for (language, share) in languages.iter().zip(shares) {
                targets.extend(spread(
                    &questions,
                    language,
                    share,
                    spec.seed,
                    &format!("parallel-question-remainder-{language}"),
                ));
            }
            targets.sort_by(|a, b| {
                (&a.question_id, &a.language).cmp(&(&b.question_id, &b.language))
            });
            Ok(Allocation { targets })
        }
        MixtureKind::NonParallel {
            languages,
            partition_seed,
        } => {
            if budget < q {
                return Err(MixtureError::Infeasible {
                    detail: format!(
                        "budget {budget} cannot give each of {q} questions one instance (short by {})",
                        q - budget
                    ),
                });
            }
            let groups =
                partition_questions(&questions, languages, coverage, *partition_seed, 64)?;
            // Group i pairs with languages[i]. When Q < L the trailing
            // groups are empty and their languages receive nothing; budget
            // splits over the populated groups.
            let populated: Vec<(usize, &Vec<String>, &Language)> = groups
                .iter()
                .zip(languages)
                .enumerate()
                .filter(|(_, (group, _))| !group.is_empty())
                .map(|(i, (group, language))| (i, group, language))
                .collect();
            let l = populated.len() as u64;
            // The first Q % L groups are the larger ones and the first
            // B % L groups take the budget remainder, which keeps big
            // budgets on big groups.
            let mut targets = Vec::new();
            for (rank, (i, group, language)) in populated.iter().enumerate() {
                let share = budget / l + u64::from((rank as u64) < budget % l);
                if share < group.len() as u64 {
                    return Err(MixtureError::Infeasible {
                        detail: format!(
                            "language {language} receives budget {share} for {} questions",
                            group.len()
                        ),
                    });
                }
                targets.extend(spread(
                    group,
                    language,
                    share,
                    spec.seed,
                    &format!("nonparallel-remainder-{i}"),
                ));
            }
            targets.sort_by(|a, b| {
                (&a.question_id, &a.language).cmp(&(&b.question_id, &b.language))
            });
            Ok(Allocation { targets })
        }
    }
}

fn require_cells(
    coverage: &CoverageGrid,
    questions: &[String],
    languages: &[Language],
) -> Result<(), MixtureError> {
    let mut empty: Vec<(String, Language)> = Vec::new();
    for question in questions {
        for language in languages {
            if supply(coverage, question, language) == 0 {
                empty.push((question.clone(), language.clone()));
            }
        }
    }
    if empty.is_empty() {
        Ok(())
    } else {
        Err(MixtureError::EmptyCells { cells: empty })
    }
}
