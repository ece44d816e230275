//! Layer-by-layer alignment sweeps over a parallel program set.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::echo::render_echo_template;
use super::metrics::{adjusted_cosine, retrieval_accuracy, AdjustedMode};
use super::provider::EmbeddingProvider;
use super::AlignError;
use crate::lang::Language;
use crate::seeded::derive_seed;

/// N index-aligned tuples of programs across languages: `rows[i][k]` solves
/// the same question as `rows[i][j]` for every pair of language columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParallelProgramSet {
    languages: Vec<Language>,
    rows: Vec<Vec<String>>,
    question_ids: Vec<String>,
}

impl ParallelProgramSet {
    pub fn new(
        languages: Vec<Language>,
        rows: Vec<Vec<String>>,
        question_ids: Vec<String>,
    ) -> Result<Self, AlignError> {
        if languages.is_empty() {
            return Err(AlignError::Misaligned {
                detail: "no languages".to_string(),
            });
        }
        if rows.len() != question_ids.len() {
            return Err(AlignError::Misaligned {
                detail: format!("{} rows vs {} question ids", rows.len(), question_ids.len()),
            });
        }
        if let Some(bad) = rows.iter().position(|row| row.len() != languages.len()) {
            return Err(AlignError::Misaligned {
                detail: format!(
                    "row {bad} has {} programs for {} languages",
                    rows[bad].len(),
                    languages.len()
                ),
            });
        }
        Ok(ParallelProgramSet {
            languages,
            rows,
            question_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn languages(&self) -> &[Language] {
        &self.languages
    }

    pub fn question_ids(&self) -> &[String] {
        &self.question_ids
    }

    pub fn program(&self, row: usize, language: &Language) -> Option<&str> {
        let column = self.languages.iter().position(|l| l == language)?;
        self.rows.get(row).map(|r| r[column].as_str())
    }

    /// Questions that also appear in a training set; the held-out contract
    /// requires this to be empty.
    pub fn overlap_with(&self, training_questions: &BTreeSet<String>) -> Vec<String> {
        self.question_ids
            .iter()
            .filter(|q| training_questions.contains(*q))
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub layer: usize,
    pub lang_a: Language,
    pub lang_b: Language,
    pub metric: String,
    pub value: f64,
}

/// Per-layer, per-ordered-pair metric table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub provider_id: String,
    pub n: usize,
    pub seed: u64,
    pub layers: usize,
    pub rows: Vec<AlignmentRow>,
}

impl AlignmentReport {
    /// `layer,lang_a,lang_b,metric,value` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,lang_a,lang_b,metric,value\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:.6}\n",
                row.layer, row.lang_a, row.lang_b, row.metric, row.value
            ));
        }
        out
    }

    /// Mean of one metric across language pairs, per layer.
    pub fn averaged_over_pairs(&self, metric: &str) -> Vec<(usize, f64)> {
        let mut by_layer: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for row in self.rows.iter().filter(|r| r.metric == metric) {
            let entry = by_layer.entry(row.layer).or_default();
            entry.0 += row.value;
            entry.1 += 1;
        }
        by_layer
            .into_iter()
            .map(|(layer, (sum, count))| (layer, sum / count as f64))
            .collect()
    }
}

/// Embed every program at every layer and compute both metrics for every
/// ordered language pair.
pub fn layer_sweep(
    set: &ParallelProgramSet,
    provider: &dyn EmbeddingProvider,
    pairs: &[(Language, Language)],
    mode: AdjustedMode,
    seed: u64,
) -> Result<AlignmentReport, AlignError> {
    if provider.layer_count() == 0 {
        return Err(AlignError::Provider {
            message: "provider declares zero layers".to_string(),
        });
    }
    // language -> layer -> row -> vector
    let mut embedded: BTreeMap<Language, Vec<Vec<Vec<f64>>>> = BTreeMap::new();
    let needed: BTreeSet<&Language> = pairs.iter().flat_map(|(a, b)| [a, b]).collect();
    for language in needed {
        let mut per_layer: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(set.len()); provider.layer_count()];
        for row in 0..set.len() {
            let program = set.program(row, language).ok_or_else(|| AlignError::Misaligned {
                detail: format!("language {language} missing from program set"),
            })?;
            let (text, span) = render_echo_template(program)?;
            let layers = provider.embed_span(&text, span)?;
            if layers.len() != provider.layer_count() {
                return Err(AlignError::LayerCountMismatch {
                    expected: provider.layer_count(),
                    actual: layers.len(),
                    context: format!("program row {row}, language {language}"),
                });
            }
            for (layer, vector) in layers.into_iter().enumerate() {
                per_layer[layer].push(vector);
            }
        }
        embedded.insert(language.clone(), per_layer);
    }

    let mut rows = Vec::with_capacity(provider.layer_count() * pairs.len() * 2);
    for layer in 0..provider.layer_count() {
        for (lang_a, lang_b) in pairs {
            let a = &embedded[lang_a][layer];
            let b = &embedded[lang_b][layer];
            let accuracy = retrieval_accuracy(a, b)?;
            let pair_seed = derive_seed(seed, &format!("adjusted-{layer}-{lang_a}-{lang_b}"));
            let adjusted = adjusted_cosine(a, b, mode, pair_seed)?;
            rows.push(AlignmentRow {
                layer,
                lang_a: lang_a.clone(),
                lang_b: lang_b.clone(),
                metric: "retrieval_accuracy".to_string(),
                value: accuracy,
            });
            rows.push(AlignmentRow {
                layer,
                lang_a: lang_a.clone(),
                lang_b: lang_b.clone(),
                metric: "adjusted_cosine".to_string(),
                value: adjusted,
            });
        }
    }

    Ok(AlignmentReport {
        provider_id: provider.id().to_string(),
        n: set.len(),
        seed,
        layers: provider.layer_count(),
        rows,
    })
}

/// All ordered pairs of distinct languages.
pub fn ordered_pairs(languages: &[Language]) -> Vec<(Language, Language)> {
    let mut pairs = Vec::new();
    for a in languages {
        for b in languages {
            if a != b {
                pairs.push((a.clone(), b.clone()));
            }
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::echo::CharSpan;

    /// Embeds every program of row i to the same per-row vector: parallel
    /// programs coincide exactly.
    struct RowStub {
        map: BTreeMap<String, usize>,
        layers: usize,
        dim: usize,
    }

    impl RowStub {
        fn over(set: &ParallelProgramSet, layers: usize, dim: usize) -> Self {
            let mut map = BTreeMap::new();
            for row in 0..set.len() {
                for language in set.languages() {
                    let program = set.program(row, language).unwrap();
                    let (text, _) = render_echo_template(program).unwrap();
                    map.insert(text, row);
                }
            }
            RowStub { map, layers, dim }
        }
    }

    impl EmbeddingProvider for RowStub {
        fn id(&self) -> &str {
            "row-stub"
        }
        fn layer_count(&self) -> usize {
            self.layers
        }
        fn hidden_size(&self) -> usize {
            self.dim
        }
        fn embed_span(&self, text: &str, _span: CharSpan) -> Result<Vec<Vec<f64>>, AlignError> {
            let row = self.map[text];
            let mut v = vec![0.0; self.dim];
            v[row % self.dim] = 1.0;
            v[(row * 7 + 1) % self.dim] += 0.25;
            Ok(vec![v; self.layers])
        }
    }

    fn fixture_set(n: usize) -> ParallelProgramSet {
        let languages = vec![Language::new("go"), Language::new("php"), Language::new("ruby")];
        let rows = (0..n)
            .map(|i| {
                vec![
                    format!("go-program-{i}"),
                    format!("php-program-{i}"),
                    format!("ruby-program-{i}"),
                ]
            })
            .collect();
        let ids = (0..n).map(|i| format!("q{i}")).collect();
        ParallelProgramSet::new(languages, rows, ids).unwrap()
    }

    #[test]
    fn identical_parallel_vectors_give_flat_unit_accuracy() {
        let set = fixture_set(6);
        let provider = RowStub::over(&set, 4, 16);
        let pairs = ordered_pairs(set.languages());
        let report = layer_sweep(&set, &provider, &pairs, AdjustedMode::Exact, 1).unwrap();
        for row in report.rows.iter().filter(|r| r.metric == "retrieval_accuracy") {
            assert_eq!(row.value, 1.0, "layer {} pair {}->{}", row.layer, row.lang_a, row.lang_b);
        }
    }

    #[test]
    fn report_shape_is_layers_by_pairs_by_two() {
        let set = fixture_set(4);
        let provider = RowStub::over(&set, 5, 8);
        let pairs = ordered_pairs(set.languages());
        assert_eq!(pairs.len(), 6);
        let report = layer_sweep(&set, &provider, &pairs, AdjustedMode::Exact, 1).unwrap();
        assert_eq!(report.rows.len(), 5 * 6 * 2);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 1 + 5 * 6 * 2);
        assert!(csv.starts_with("layer,lang_a,lang_b,metric,value\n"));
    }

    #[test]
    fn misaligned_rows_rejected() {
        let err = ParallelProgramSet::new(
            vec![Language::new("go"), Language::new("php")],
            vec![vec!["a".into()]],
            vec!["q0".into()],
        )
        .unwrap_err();
        assert!(matches!(err, AlignError::Misaligned { .. }));
    }

    #[test]
    fn overlap_detection() {
        let set = fixture_set(3);
        let training: BTreeSet<String> = ["q1".to_string(), "q9".to_string()].into();
        assert_eq!(set.overlap_with(&training), vec!["q1".to_string()]);
    }
}
