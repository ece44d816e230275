//! Library surface of the `forge` pipeline: configuration, manifest,
//! stages, and report emission. The binary in `main.rs` is a thin argument
//! parser over this.

pub mod atomic;
pub mod config;
pub mod error;
pub mod manifest;
pub mod report;
pub mod stages;
