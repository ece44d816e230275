//! Building blocks for execution-verified parallel code corpora.
//!
//! The crate covers the full data path: ingesting raw coding datasets
//! ([`corpus`]), translating solutions across programming languages through a
//! completion endpoint ([`translate`]), compiling and judging programs against
//! stdin/stdout test suites ([`sandbox`]), assembling SFT training mixtures
//! ([`mixture`]), task-level reward and evaluation metrics ([`eval`]), and
//! cross-language representation alignment ([`align`]).
//!
//! The `forge` CLI crate wires these modules into a staged pipeline with
//! manifests and reports.

pub mod align;
pub mod corpus;
pub mod eval;
pub mod jsonl;
pub mod lang;
pub mod mixture;
pub mod sandbox;
pub mod seeded;
pub mod testing;
pub mod translate;

pub use lang::Language;
