use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Step size used by projected gradient ascent when none is given.
pub const DEFAULT_PGA_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Mwu,
    ProjectedGradient,
    LpNlhf,
}

impl std::str::FromStr for Algorithm {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mwu" => Ok(Algorithm::Mwu),
            "projected-gradient" | "pga" => Ok(Algorithm::ProjectedGradient),
            "lp-nlhf" | "lp" | "nlhf" => Ok(Algorithm::LpNlhf),
            other => invalid(format!("unknown algorithm {other:?}")),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Mwu => "mwu",
            Algorithm::ProjectedGradient => "projected-gradient",
            Algorithm::LpNlhf => "lp-nlhf",
        })
    }
}

/// A fixed step size or the algorithm's default tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Auto,
    Fixed(f64),
}

impl Serialize for StepSize {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            StepSize::Auto => ser.serialize_str("auto"),
            StepSize::Fixed(v) => ser.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for StepSize {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(v) => Ok(StepSize::Fixed(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for StepSize {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(StepSize::Auto);
        }
        s.parse::<f64>()
            .map(StepSize::Fixed)
            .or_else(|_| invalid(format!("step size {s:?} is neither \"auto\" nor a number")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_step")]
    pub step_size: StepSize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Mwu
}
fn default_iterations() -> usize {
    10_000
}
fn default_step() -> StepSize {
    StepSize::Auto
}
fn default_tolerance() -> f64 {
    1e-9
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: default_algorithm(),
            iterations: default_iterations(),
            step_size: default_step(),
            seed: 0,
            tolerance: default_tolerance(),
        }
    }
}

impl SolverConfig {
    pub fn mwu(iterations: usize) -> Self {
        Self {
            iterations,
            ..Self::default()
        }
    }

    pub fn pga(iterations: usize) -> Self {
        Self {
            algorithm: Algorithm::ProjectedGradient,
            iterations,
            ..Self::default()
        }
    }

    pub fn lp() -> Self {
        Self {
            algorithm: Algorithm::LpNlhf,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return invalid("iterations must be at least 1");
        }
        if let StepSize::Fixed(v) = self.step_size {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("step size must be positive, got {v}"));
            }
        }
        if !(self.tolerance > 0.0) {
            return invalid("tolerance must be positive");
        }
        Ok(())
    }

    /// `sqrt(8 ln n / T)` for MWU, [`DEFAULT_PGA_STEP`] otherwise.
    pub fn resolve_step(&self, n: usize) -> f64 {
        match (self.step_size, self.algorithm) {
            (StepSize::Fixed(v), _) => v,
            (StepSize::Auto, Algorithm::ProjectedGradient) => DEFAULT_PGA_STEP,
            (StepSize::Auto, _) => (8.0 * (n as f64).ln() / self.iterations as f64).sqrt(),
        }
    }
}
