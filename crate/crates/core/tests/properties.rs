//! Property tests for the spec-level invariants.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use forge_core::corpus::{
    filter_questions, FilterPredicates, Origin, ParallelCorpus, QuestionRecord, SolutionRecord,
    TestCase, Verification,
};
use forge_core::eval::{balance_eval_set, pass_at_k, OutcomeTable, QuestionOutcomes};
use forge_core::lang::{Language, LanguageDescriptor};
use forge_core::mixture::{build_mixture, MixtureKind, MixtureSpec};
use forge_core::sandbox::{compare_output, ComparePolicy};
use forge_core::translate::{extract_code_block, render_translation_prompt};

// ── translation prompts ────────────────────────────────────────────────

proptest! {
    #[test]
    fn distinct_codes_render_distinct_prompts(
        a in "[ -~]{1,60}",
        b in "[ -~]{1,60}",
    ) {
        prop_assume!(a != b);
        let target = LanguageDescriptor::new("Go", "go");
        let pa = render_translation_prompt(&a, "instr", &target).unwrap();
        let pb = render_translation_prompt(&b, "instr", &target).unwrap();
        prop_assert_ne!(pa, pb);
    }

    #[test]
    fn fenced_payload_roundtrips(
        // Lines that are not themselves fence openers.
        body in proptest::collection::vec("[ -~]{0,30}", 1..6)
            .prop_map(|lines| lines.join("\n"))
            .prop_filter("no fence lines", |s| {
                !s.split('\n').any(|l| l.trim_start().starts_with("```"))
            }),
    ) {
        let target = LanguageDescriptor::new("Go", "go");
        let response = format!("Some preamble.\n```go\n{body}\n```\ntrailing text");
        prop_assert_eq!(extract_code_block(&response, &target).unwrap(), body);
    }
}

// ── corpus filtering and dedup ─────────────────────────────────────────

fn arb_question() -> impl Strategy<Value = QuestionRecord> {
    (
        "[a-z]{1,8}",
        prop::sample::select(vec!["apps", "codecontests", "codeforces"]),
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
        0usize..3,
    )
        .prop_map(|(id, source, visual, checker, stdio, tests)| QuestionRecord {
            question_id: id,
            source_dataset: source.to_string(),
            statement: "s".to_string(),
            tests: (0..tests).map(|i| TestCase::new("", format!("{i}"))).collect(),
            has_visual_input: visual,
            has_custom_checker: checker,
            uses_stdin_stdout: stdio,
        })
}

proptest! {
    #[test]
    fn filter_partitions_input(
        questions in proptest::collection::vec(arb_question(), 0..40),
        reserve_codeforces in any::<bool>(),
    ) {
        let mut reserved = BTreeSet::new();
        if reserve_codeforces {
            reserved.insert("codeforces".to_string());
        }
        let total = questions.len();
        let outcome = filter_questions(questions, &reserved, FilterPredicates::default());
        prop_assert_eq!(outcome.kept.len() + outcome.dropped.len(), total);
        // Kept questions pass every predicate; every drop has one reason.
        for q in &outcome.kept {
            prop_assert!(!q.has_visual_input);
            prop_assert!(!q.has_custom_checker);
            prop_assert!(q.uses_stdin_stdout);
            prop_assert!(!q.tests.is_empty());
            prop_assert!(!reserved.contains(&q.source_dataset));
        }
    }

    #[test]
    fn duplicate_insertion_is_idempotent(code in "[ -~]{0,40}", pad in 0usize..4) {
        let mut corpus = ParallelCorpus::new();
        let record = SolutionRecord {
            question_id: "q".into(),
            language: Language::new("go"),
            code: code.clone(),
            origin: Origin::Human,
            verification: Verification::Passed,
        };
        corpus.insert(record.clone()).unwrap();
        let before = corpus.total_solutions();
        // Re-insert with extra trailing whitespace: same normalized identity.
        let mut dup = record;
        dup.code = format!("{code}{}", " ".repeat(pad));
        corpus.insert(dup).unwrap();
        prop_assert_eq!(corpus.total_solutions(), before);
    }
}

// ── output comparison ──────────────────────────────────────────────────

proptest! {
    #[test]
    fn compare_default_policy_invariants(
        text in "[ -~\n]{0,60}",
        other in "[ -~\n]{0,60}",
        tail in prop::sample::select(vec!["", "\n", "  \n", "\n\n", " \t", "\r\n"]),
    ) {
        let policy = ComparePolicy::LineNormalized;
        // Reflexive.
        prop_assert!(compare_output(&text, &text, policy));
        // Symmetric.
        prop_assert_eq!(
            compare_output(&text, &other, policy),
            compare_output(&other, &text, policy)
        );
        // Invariant under trailing whitespace/newline appendage.
        let padded = format!("{text}{tail}");
        prop_assert!(compare_output(&padded, &text, policy));
    }
}

// ── pass@k against direct enumeration ──────────────────────────────────

fn oracle_pass_metrics(rows: &[QuestionOutcomes]) -> (f64, f64) {
    let k = rows[0].flags.len();
    let hits: usize = rows
        .iter()
        .map(|r| r.flags.iter().filter(|&&f| f).count())
        .sum();
    let solved = rows.iter().filter(|r| r.flags.iter().any(|&f| f)).count();
    (
        hits as f64 / (k * rows.len()) as f64,
        solved as f64 / rows.len() as f64,
    )
}

proptest! {
    #[test]
    fn pass_at_k_matches_enumeration(
        rows in (1usize..=8).prop_flat_map(|k| {
            proptest::collection::vec(
                proptest::collection::vec(any::<bool>(), k..=k),
                1..=10,
            )
        }),
        seed in any::<u64>(),
    ) {
        let rows: Vec<QuestionOutcomes> = rows
            .into_iter()
            .enumerate()
            .map(|(i, flags)| QuestionOutcomes {
                question_id: format!("q{i}"),
                flags,
            })
            .collect();
        let (expect1, expectk) = oracle_pass_metrics(&rows);
        let table = OutcomeTable::new(rows).unwrap();
        let result = pass_at_k(&table, seed);
        prop_assert_eq!(result.pass_at_1.value, expect1);
        prop_assert_eq!(result.pass_at_k.value, expectk);
        // Monotonicity.
        prop_assert!(result.pass_at_1.value <= result.pass_at_k.value);
        // CI brackets the point estimate.
        prop_assert!(result.pass_at_1.ci_low <= result.pass_at_1.value);
        prop_assert!(result.pass_at_1.ci_high >= result.pass_at_1.value);
    }
}

// ── class balancing ────────────────────────────────────────────────────

proptest! {
    #[test]
    fn balanced_sets_have_equal_classes(
        spec in proptest::collection::vec((0usize..12, 0usize..12), 1..4),
        seed in any::<u64>(),
    ) {
        let mut pool = Vec::new();
        for (lang_index, (trues, falses)) in spec.iter().enumerate() {
            for i in 0..*trues {
                pool.push(validation_instance(lang_index, i, true));
            }
            for i in 0..*falses {
                pool.push(validation_instance(lang_index, i, false));
            }
        }
        let balanced = balance_eval_set(pool, seed);
        let mut per_language: BTreeMap<Language, (usize, usize)> = BTreeMap::new();
        for instance in &balanced.instances {
            let entry = per_language.entry(instance.candidate_language.clone()).or_default();
            if instance.label {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
        for (trues, falses) in per_language.values() {
            prop_assert_eq!(trues, falses);
            prop_assert!(*trues > 0);
        }
    }
}

fn validation_instance(
    lang_index: usize,
    i: usize,
    label: bool,
) -> forge_core::eval::ValidationTaskInstance {
    forge_core::eval::ValidationTaskInstance {
        question: QuestionRecord {
            question_id: format!("q-{lang_index}-{i}-{label}"),
            source_dataset: "fixture".into(),
            statement: "s".into(),
            tests: vec![TestCase::new("", "x")],
            has_visual_input: false,
            has_custom_checker: false,
            uses_stdin_stdout: true,
        },
        candidate_code: "c".into(),
        candidate_language: Language::new(format!("lang{lang_index}")),
        label,
    }
}

// ── mixture invariants ─────────────────────────────────────────────────

fn full_fixture(
    questions: usize,
    languages: &[Language],
    per_cell: usize,
) -> (ParallelCorpus, BTreeMap<String, QuestionRecord>) {
    let mut corpus = ParallelCorpus::new();
    let mut records = BTreeMap::new();
    for qi in 0..questions {
        let qid = format!("q{qi:03}");
        records.insert(
            qid.clone(),
            QuestionRecord {
                question_id: qid.clone(),
                source_dataset: "fixture".into(),
                statement: format!("Task {qi}."),
                tests: vec![TestCase::new("", "x")],
                has_visual_input: false,
                has_custom_checker: false,
                uses_stdin_stdout: true,
            },
        );
        for lang in languages {
            for s in 0..per_cell {
                corpus
                    .insert(SolutionRecord {
                        question_id: qid.clone(),
                        language: lang.clone(),
                        code: format!("{qid}-{lang}-{s}"),
                        origin: Origin::Human,
                        verification: Verification::Passed,
                    })
                    .unwrap();
            }
        }
    }
    (corpus, records)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn mixture_kinds_share_budget_and_coverage(
        questions in 1usize..=12,
        lang_count in 1usize..=4,
        per_cell in 1usize..=3,
        extra_budget in 0u64..30,
        seed in any::<u64>(),
    ) {
        let languages: Vec<Language> =
            (0..lang_count).map(|i| Language::new(format!("lang{i}"))).collect();
        let (corpus, records) = full_fixture(questions, &languages, per_cell);
        let budget = (questions * lang_count) as u64 + extra_budget;

        let specs = [
            MixtureKind::Monolingual { language: languages[0].clone() },
            MixtureKind::Parallel { languages: languages.clone() },
            MixtureKind::NonParallel { languages: languages.clone(), partition_seed: seed ^ 0x9e37 },
        ];
        for kind in specs {
            let mixture = build_mixture(
                &MixtureSpec { kind, budget, seed },
                &corpus,
                &records,
            ).unwrap();
            // Budget exactness and full question coverage for every kind.
            prop_assert_eq!(mixture.instances.len() as u64, budget);
            prop_assert_eq!(mixture.question_coverage(), questions);
            match &mixture.spec.kind {
                MixtureKind::Parallel { .. } => {
                    for (_, langs) in mixture.languages_per_question() {
                        prop_assert_eq!(langs, lang_count);
                    }
                }
                MixtureKind::NonParallel { .. } => {
                    for (_, langs) in mixture.languages_per_question() {
                        prop_assert_eq!(langs, 1);
                    }
                }
                _ => {}
            }
        }
    }

    #[test]
    fn mixtures_are_seed_deterministic(
        questions in 1usize..=6,
        seed in any::<u64>(),
    ) {
        let languages = vec![Language::new("a"), Language::new("b")];
        let (corpus, records) = full_fixture(questions, &languages, 2);
        let spec = MixtureSpec {
            kind: MixtureKind::Parallel { languages: languages.clone() },
            budget: (questions * 2) as u64 + 3,
            seed,
        };
        let a = build_mixture(&spec, &corpus, &records).unwrap();
        let b = build_mixture(&spec, &corpus, &records).unwrap();
        prop_assert_eq!(
            serde_json::to_string(&a.instances).unwrap(),
            serde_json::to_string(&b.instances).unwrap()
        );
    }
}
