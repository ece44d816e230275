//! Compile/run programs against stdin/stdout test suites under resource
//! limits, and filter corpora by execution verdicts.

mod compare;
mod exec;
mod judge;
mod limits;
mod spec;
mod verify;

pub use compare::{compare_output, ComparePolicy};
pub use exec::{run_program, ExitInfo, Execution, RunStatus, SandboxError, Workspace};
pub use judge::{judge_solution, JudgeOptions, Overall, TestOutcome, Verdict};
pub use limits::ResourceLimits;
pub use spec::{Isolation, RegistryError, RunnerRegistry, RunnerSpec};
pub use verify::{verify_and_filter, Rejection, VerifyConfig, VerifyReport};
