//! Resource limits applied to judged programs.

use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Per-run resource ceilings. All values must be positive.
///
/// The defaults are CodeForces-style bounds with slack; judging
/// normalization and limits are gap-fills recorded in every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceLimits {
    /// Wall-clock timeout per test, seconds.
    pub wall_time_secs: f64,
    /// Address-space ceiling for the judged program, bytes.
    pub memory_bytes: u64,
    /// Captured-stdout ceiling per test, bytes.
    pub output_bytes: u64,
    /// Wall-clock timeout for the compile step, seconds.
    pub compile_time_secs: f64,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        ResourceLimits {
            wall_time_secs: 10.0,
            memory_bytes: 256 * 1024 * 1024,
            output_bytes: 16 * 1024 * 1024,
            compile_time_secs: 60.0,
        }
    }
}

impl ResourceLimits {
    pub fn validate(&self) -> Result<(), String> {
        if self.wall_time_secs <= 0.0
            || self.compile_time_secs <= 0.0
            || self.memory_bytes == 0
            || self.output_bytes == 0
        {
            return Err("all resource limits must be positive".to_string());
        }
        Ok(())
    }

    pub fn wall_time(&self) -> Duration {
        Duration::from_secs_f64(self.wall_time_secs)
    }

    pub fn compile_time(&self) -> Duration {
        Duration::from_secs_f64(self.compile_time_secs)
    }
}
