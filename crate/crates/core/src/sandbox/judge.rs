//! Judging one program against a test suite.

use serde::{Deserialize, Serialize};

use super::compare::{compare_output, ComparePolicy};
use super::exec::{self, ExecSpec, ExitInfo, RunStatus, SandboxError, Workspace};
use super::limits::ResourceLimits;
use super::spec::RunnerRegistry;
use crate::corpus::TestCase;
use crate::lang::Language;

/// Overall verdict. A program is accepted iff every test passes; otherwise
/// the class is whatever failure occurred at the smallest failing index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum Overall {
    Accepted,
    WrongAnswer { test_index: usize },
    CompileError { log: String },
    RuntimeError { test_index: usize, exit: ExitInfo },
    TimeLimit { test_index: usize },
    OutputLimit { test_index: usize },
}

impl Overall {
    /// Manifest-friendly class name.
    pub fn class_name(&self) -> &'static str {
        match self {
            Overall::Accepted => "accepted",
            Overall::WrongAnswer { .. } => "wrong-answer",
            Overall::CompileError { .. } => "compile-error",
            Overall::RuntimeError { .. } => "runtime-error",
            Overall::TimeLimit { .. } => "time-limit",
            Overall::OutputLimit { .. } => "output-limit",
        }
    }

    pub fn first_failing_test(&self) -> Option<usize> {
        match self {
            Overall::Accepted | Overall::CompileError { .. } => None,
            Overall::WrongAnswer { test_index }
            | Overall::RuntimeError { test_index, .. }
            | Overall::TimeLimit { test_index }
            | Overall::OutputLimit { test_index } => Some(*test_index),
        }
    }
}

/// Per-test record: pass flag, captured stdout (already truncated to the
/// output ceiling), and wall time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub passed: bool,
    pub actual_stdout: String,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub overall: Overall,
    pub per_test: Vec<TestOutcome>,
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        self.overall == Overall::Accepted
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct JudgeOptions {
    /// Stop at the first failing test instead of running the whole suite.
    /// Off by default so per-test statistics stay complete.
    pub short_circuit: bool,
    pub compare: ComparePolicy,
}

/// Judge one program against every test in order.
pub fn judge_solution(
    registry: &RunnerRegistry,
    language: &Language,
    code: &str,
    tests: &[TestCase],
    limits: &ResourceLimits,
    options: JudgeOptions,
) -> Result<Verdict, SandboxError> {
    if tests.is_empty() {
        return Err(SandboxError::NoTests);
    }
    limits.validate().map_err(SandboxError::InvalidLimits)?;
    let spec = registry
        .get(language)
        .ok_or_else(|| SandboxError::UnknownLanguage(language.clone()))?;
    let isolation = registry.isolation();
    let workspace = Workspace::fresh(isolation)?;

    let (src, bin) = match exec::prepare_program(spec, &workspace, code, limits, isolation) {
        Ok(paths) => paths,
        Err(SandboxError::CompileFailed { log }) => {
            return Ok(Verdict {
                overall: Overall::CompileError { log },
                per_test: Vec::new(),
            })
        }
        Err(SandboxError::CompileTimeout(secs)) => {
            return Ok(Verdict {
                overall: Overall::CompileError {
                    log: format!("compilation timed out after {secs:.1}s"),
                },
                per_test: Vec::new(),
            })
        }
        Err(other) => return Err(other),
    };
    let argv = exec::render_argv(&spec.run, &src, &bin, workspace.dir());

    let mut per_test = Vec::with_capacity(tests.len());
    let mut first_failure: Option<Overall> = None;
    for (index, test) in tests.iter().enumerate() {
        let execution = exec::execute(ExecSpec {
            argv: argv.clone(),
            workdir: workspace.dir(),
            stdin: test.stdin.as_bytes(),
            wall: limits.wall_time(),
            memory_bytes: Some(limits.memory_bytes),
            stdout_cap: limits.output_bytes,
            stderr_cap: 64 * 1024,
            isolation,
        })?;
        let (outcome, failure) = classify(execution.status, test, index, options.compare);
        per_test.push(outcome);
        if first_failure.is_none() {
            first_failure = failure;
            if first_failure.is_some() && options.short_circuit {
                break;
            }
        }
    }

    Ok(Verdict {
        overall: first_failure.unwrap_or(Overall::Accepted),
        per_test,
    })
}

fn classify(
    status: RunStatus,
    test: &TestCase,
    index: usize,
    policy: ComparePolicy,
) -> (TestOutcome, Option<Overall>) {
    match status {
        RunStatus::Completed {
            stdout,
            exit,
            duration,
        } => {
            if !exit.success() {
                return (
                    TestOutcome {
                        passed: false,
                        actual_stdout: stdout,
                        duration_ms: duration.as_millis() as u64,
                    },
                    Some(Overall::RuntimeError {
                        test_index: index,
                        exit,
                    }),
                );
            }
            let passed = compare_output(&stdout, &test.expected_stdout, policy);
            (
                TestOutcome {
                    passed,
                    actual_stdout: stdout,
                    duration_ms: duration.as_millis() as u64,
                },
                (!passed).then_some(Overall::WrongAnswer { test_index: index }),
            )
        }
        RunStatus::TimeLimit { duration } => (
            TestOutcome {
                passed: false,
                actual_stdout: String::new(),
                duration_ms: duration.as_millis() as u64,
            },
            Some(Overall::TimeLimit { test_index: index }),
        ),
        RunStatus::OutputLimit {
            duration,
            bytes_seen: _,
        } => (
            TestOutcome {
                passed: false,
                actual_stdout: String::new(),
                duration_ms: duration.as_millis() as u64,
            },
            Some(Overall::OutputLimit { test_index: index }),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> RunnerRegistry {
        RunnerRegistry::builtin().unwrap()
    }

    fn adder_tests() -> Vec<TestCase> {
        vec![
            TestCase::new("1 2\n", "3"),
            TestCase::new("10 20\n", "30"),
            TestCase::new("0 0\n", "0"),
        ]
    }

    const PY_ADDER: &str = "a, b = map(int, input().split())\nprint(a + b)";
    const PY_OFF_BY_ONE: &str =
        "a, b = map(int, input().split())\nprint(a + b + (1 if a == 10 else 0))";

    #[test]
    fn correct_adder_is_accepted() {
        let verdict = judge_solution(
            &registry(),
            &Language::new("python"),
            PY_ADDER,
            &adder_tests(),
            &ResourceLimits::default(),
            JudgeOptions::default(),
        )
        .unwrap();
        assert_eq!(verdict.overall, Overall::Accepted);
        assert_eq!(verdict.per_test.len(), 3);
        assert!(verdict.per_test.iter().all(|t| t.passed));
    }

    #[test]
    fn off_by_one_fails_middle_test() {
        let verdict = judge_solution(
            &registry(),
            &Language::new("python"),
            PY_OFF_BY_ONE,
            &adder_tests(),
            &ResourceLimits::default(),
            JudgeOptions::default(),
        )
        .unwrap();
        assert_eq!(verdict.overall, Overall::WrongAnswer { test_index: 1 });
        // No short-circuit: all three tests still ran.
        assert_eq!(verdict.per_test.len(), 3);
        assert_eq!(
            verdict
                .per_test
                .iter()
                .map(|t| t.passed)
                .collect::<Vec<_>>(),
            vec![true, false, true]
        );
    }

    #[test]
    fn invalid_compiled_program_is_compile_error() {
        let verdict = judge_solution(
            &registry(),
            &Language::new("cpp"),
            "int main( { return 0 }",
            &adder_tests(),
            &ResourceLimits::default(),
            JudgeOptions::default(),
        )
        .unwrap();
        assert!(matches!(verdict.overall, Overall::CompileError { .. }));
        assert!(verdict.per_test.is_empty());
        assert_eq!(verdict.overall.first_failing_test(), None);
    }

    #[test]
    fn short_circuit_stops_at_first_failure() {
        let options = JudgeOptions {
            short_circuit: true,
            compare: ComparePolicy::LineNormalized,
        };
        let verdict = judge_solution(
            &registry(),
            &Language::new("python"),
            "print(99)",
            &adder_tests(),
            &ResourceLimits::default(),
            options,
        )
        .unwrap();
        assert_eq!(verdict.overall, Overall::WrongAnswer { test_index: 0 });
        assert_eq!(verdict.per_test.len(), 1);
    }

    #[test]
    fn empty_suite_is_rejected() {
        let err = judge_solution(
            &registry(),
            &Language::new("python"),
            PY_ADDER,
            &[],
            &ResourceLimits::default(),
            JudgeOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SandboxError::NoTests));
    }

    #[test]
    fn judging_is_deterministic_modulo_duration() {
        let run = || {
            judge_solution(
                &registry(),
                &Language::new("python"),
                PY_OFF_BY_ONE,
                &adder_tests(),
                &ResourceLimits::default(),
                JudgeOptions::default(),
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.overall, b.overall);
        let strip = |v: &Verdict| {
            v.per_test
                .iter()
                .map(|t| (t.passed, t.actual_stdout.clone()))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }
}
