//! Corpus-level counting and coverage statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ParallelCorpus;
use crate::lang::Language;

/// Counts over a corpus against a declared language grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsReport {
    pub questions: usize,
    pub declared_languages: Vec<Language>,
    pub per_language: BTreeMap<Language, usize>,
    pub total_solutions: usize,
    /// Mean instances per cell over the full declared grid, empty cells
    /// included. `None` when the grid is empty.
    pub mean_per_declared_cell: Option<f64>,
    /// Mean over non-empty cells only. `None` when every cell is empty.
    pub mean_per_nonempty_cell: Option<f64>,
    /// Fraction of declared cells that are non-empty, as a percentage.
    pub coverage_pct: Option<f64>,
}

/// Compute counts over the declared (question, language) grid.
///
/// An empty `declared_languages` slice means "whatever languages appear in
/// the corpus".
pub fn corpus_stats(corpus: &ParallelCorpus, declared_languages: &[Language]) -> StatsReport {
    let languages: Vec<Language> = if declared_languages.is_empty() {
        corpus.languages()
    } else {
        declared_languages.to_vec()
    };

    let mut per_language: BTreeMap<Language, usize> =
        languages.iter().map(|l| (l.clone(), 0)).collect();
    let mut total = 0usize;
    let mut nonempty_cells = 0usize;

    let question_ids: Vec<&str> = corpus.question_ids().collect();
    for qid in &question_ids {
        for lang in &languages {
            let n = corpus.cell_size(qid, lang);
            if n > 0 {
                nonempty_cells += 1;
                *per_language.get_mut(lang).expect("declared language") += n;
                total += n;
            }
        }
    }

    let grid_cells = question_ids.len() * languages.len();
    StatsReport {
        questions: question_ids.len(),
        declared_languages: languages,
        per_language,
        total_solutions: total,
        mean_per_declared_cell: (grid_cells > 0).then(|| total as f64 / grid_cells as f64),
        mean_per_nonempty_cell: (nonempty_cells > 0).then(|| total as f64 / nonempty_cells as f64),
        coverage_pct: (grid_cells > 0).then(|| 100.0 * nonempty_cells as f64 / grid_cells as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Origin, SolutionRecord, Verification};

    fn passed(question: &str, lang: &str, code: &str) -> SolutionRecord {
        SolutionRecord {
            question_id: question.to_string(),
            language: Language::new(lang),
            code: code.to_string(),
            origin: Origin::Human,
            verification: Verification::Passed,
        }
    }

    fn grid_fixture() -> ParallelCorpus {
        // 2 questions x 2 languages with cell sizes {3, 1, 2, 2}.
        let mut corpus = ParallelCorpus::new();
        for i in 0..3 {
            corpus.insert(passed("q1", "python", &format!("a{i}"))).unwrap();
        }
        corpus.insert(passed("q1", "cpp", "b0")).unwrap();
        for i in 0..2 {
            corpus.insert(passed("q2", "python", &format!("c{i}"))).unwrap();
            corpus.insert(passed("q2", "cpp", &format!("d{i}"))).unwrap();
        }
        corpus
    }

    #[test]
    fn two_by_two_grid() {
        let corpus = grid_fixture();
        let report = corpus_stats(&corpus, &[Language::new("python"), Language::new("cpp")]);
        assert_eq!(report.questions, 2);
        assert_eq!(report.total_solutions, 8);
        assert_eq!(report.mean_per_declared_cell, Some(2.0));
        assert_eq!(report.coverage_pct, Some(100.0));
        assert_eq!(report.per_language[&Language::new("python")], 5);
        assert_eq!(report.per_language[&Language::new("cpp")], 3);
    }

    #[test]
    fn empty_corpus_reports_undefined_means() {
        let report = corpus_stats(&ParallelCorpus::new(), &[]);
        assert_eq!(report.questions, 0);
        assert_eq!(report.total_solutions, 0);
        assert_eq!(report.mean_per_declared_cell, None);
        assert_eq!(report.mean_per_nonempty_cell, None);
        assert_eq!(report.coverage_pct, None);
    }

    #[test]
    fn empty_cells_split_the_two_means() {
        let mut corpus = grid_fixture();
        // Declare a third language nobody covers.
        corpus.insert(passed("q1", "go", "g0")).unwrap();
        let langs = [Language::new("python"), Language::new("cpp"), Language::new("go")];
        let report = corpus_stats(&corpus, &langs);
        // 9 solutions over 6 declared cells, 5 of them non-empty.
        assert_eq!(report.total_solutions, 9);
        assert_eq!(report.mean_per_declared_cell, Some(1.5));
        assert_eq!(report.mean_per_nonempty_cell, Some(1.8));
        let coverage = report.coverage_pct.unwrap();
        assert!((coverage - 100.0 * 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn totals_match_independent_recount() {
        let corpus = grid_fixture();
        let report = corpus_stats(&corpus, &[]);
        let recount: usize = corpus.iter().count();
        assert_eq!(report.total_solutions, recount);
        let by_language: usize = report.per_language.values().sum();
        assert_eq!(by_language, recount);
    }

    #[test]
    fn paper_scale_grid_arithmetic() {
        // Full 3111-question, 11-language grid at 181 instances per cell.
        let questions = 3111u64;
        let languages = 11u64;
        let per_cell = 181u64;
        let total = questions * languages * per_cell;
        assert_eq!(total, 6_194_001);
        assert!((total as f64 - 6.2e6).abs() / 6.2e6 < 0.01);
        assert_eq!(total / (questions * languages), per_cell);
    }
}
