//! Experiment configuration, from flags or a JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ualign_core::winrate::DEFAULT_TERM_CAP;
use ualign_core::{InstanceSpec, SolverConfig, WinrateEngine};

use crate::error::{HarnessError, Result};

/// Environment variable overriding the default enumeration cap.
pub const CAP_ENV: &str = "UALIGN_CAP";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub k: Vec<usize>,
    #[serde(default = "default_l")]
    pub l: Vec<usize>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Iteration counts for `sweep`; `solve` uses `solver.iterations`.
    #[serde(default)]
    pub iterations_grid: Vec<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub cap: Option<u64>,
}

fn default_l() -> Vec<usize> {
    vec![1]
}

impl ExperimentConfig {
    pub fn new(instance: InstanceSpec, k: Vec<usize>) -> Self {
        Self {
            instance,
            k,
            l: default_l(),
            solver: SolverConfig::default(),
            iterations_grid: Vec::new(),
            out: None,
            cap: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Document {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k.is_empty() {
            return Err(HarnessError::usage("k", "at least one k value is required"));
        }
        if self.k.contains(&0) {
            return Err(HarnessError::usage("k", "k values must be at least 1"));
        }
        if self.l.is_empty() || self.l.contains(&0) {
            return Err(HarnessError::usage("l", "l values must be nonempty and at least 1"));
        }
        if self.iterations_grid.contains(&0) {
            return Err(HarnessError::usage("iterations_grid", "iteration counts must be at least 1"));
        }
        if self.cap == Some(0) {
            return Err(HarnessError::usage("cap", "cap must be positive"));
        }
        self.instance
            .validate()
            .map_err(|e| HarnessError::usage("instance", e.to_string()))?;
        self.solver
            .validate()
            .map_err(|e| HarnessError::usage("solver", e.to_string()))?;
        Ok(())
    }

    pub fn engine(&self) -> Result<WinrateEngine> {
        resolve_engine(self.cap)
    }
}

/// Explicit cap, else `UALIGN_CAP`, else the default.
pub fn resolve_engine(cap: Option<u64>) -> Result<WinrateEngine> {
    if let Some(c) = cap {
        return Ok(WinrateEngine::with_cap(c));
    }
    match std::env::var(CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&c| c > 0)
            .map(WinrateEngine::with_cap)
            .ok_or_else(|| HarnessError::usage(CAP_ENV, format!("{v:?} is not a positive integer"))),
        Err(_) => Ok(WinrateEngine::with_cap(DEFAULT_TERM_CAP)),
    }
}
