//! Randomized checks of the three structural properties every population
//! preference in this crate must satisfy: antisymmetry, the multi-copy vs
//! single-copy bound, and subadditivity of strict preference under union.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::instances::random_simplex;
use crate::model::{Mode, PreferenceModel};
use crate::types::{Multiset, Policy, ProductPolicy};
use crate::winrate::{WinrateEngine, WinrateQuery};

/// Absolute slack allowed on each property check.
pub const PROPERTY_TOLERANCE: f64 = 1e-12;

/// Largest multiset size and `k` drawn by the checker.
pub const MAX_RANDOM_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Antisymmetry,
    MultiVsSingleCopy,
    Subadditivity,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyFailure {
    pub property: Property,
    pub trial: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub trials: usize,
    pub failures: Vec<PropertyFailure>,
    /// Smallest observed `P[pi^{(x)k} ⪰ pi] - k/(k+1)`.
    pub min_copy_margin: f64,
    /// Smallest observed `P[S1≻S] + P[S2≻S] - P[S1+S2≻S]`.
    pub min_subadditivity_slack: f64,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn random_multiset<R: Rng>(n: usize, rng: &mut R) -> Multiset {
    let size = rng.random_range(1..=MAX_RANDOM_SIZE);
    let ids: Vec<usize> = (0..size).map(|_| rng.random_range(0..n)).collect();
    Multiset::from_ids(&ids).expect("size >= 1")
}

/// A random policy; roughly a third of the responses get zero mass.
pub fn random_policy<R: Rng>(n: usize, rng: &mut R) -> Policy {
    let mut w = random_simplex(n, rng);
    let keep = rng.random_range(0..n);
    for (i, x) in w.iter_mut().enumerate() {
        if i != keep && rng.random_bool(0.3) {
            *x = 0.0;
        }
    }
    Policy::normalized(w).expect("kept entry is positive")
}

/// Samples `trials` random multisets, policies and `k <= 4` and checks the
/// three properties, collecting counterexamples instead of stopping.
pub fn check_properties(
    engine: &WinrateEngine,
    model: &PreferenceModel,
    trials: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let n = model.universe();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport {
        trials,
        failures: Vec::new(),
        min_copy_margin: f64::INFINITY,
        min_subadditivity_slack: f64::INFINITY,
    };
    for trial in 0..trials.max(1) {
        let s = random_multiset(n, &mut rng);
        let t = random_multiset(n, &mut rng);
        let sum = model.winrate(&s, &t, Mode::Weak) + model.winrate(&t, &s, Mode::Strict);
        if (sum - 1.0).abs() > PROPERTY_TOLERANCE {
            report.failures.push(PropertyFailure {
                property: Property::Antisymmetry,
                trial,
                detail: format!("P[{s} ⪰ {t}] + P[{t} ≻ {s}] = {sum}"),
            });
        }

        let pi = random_policy(n, &mut rng);
        let k = rng.random_range(1..=MAX_RANDOM_SIZE);
        let multi = engine
            .exact_winrate(&WinrateQuery::new(
                ProductPolicy::new(pi.clone(), k)?,
                ProductPolicy::new(pi.clone(), 1)?,
                model,
                Mode::Weak,
            ))?
            .value;
        let margin = multi - k as f64 / (k + 1) as f64;
        report.min_copy_margin = report.min_copy_margin.min(margin);
        if margin < -PROPERTY_TOLERANCE {
            report.failures.push(PropertyFailure {
                property: Property::MultiVsSingleCopy,
                trial,
                detail: format!("k = {k}, pi = {:?}: P[pi^k ⪰ pi] = {multi}", pi.probs()),
            });
        }

        let s1 = random_multiset(n, &mut rng);
        let s2 = random_multiset(n, &mut rng);
        let target = random_multiset(n, &mut rng);
        let joint = model.winrate(&s1.union(&s2), &target, Mode::Strict);
        let parts = model.winrate(&s1, &target, Mode::Strict) + model.winrate(&s2, &target, Mode::Strict);
        report.min_subadditivity_slack = report.min_subadditivity_slack.min(parts - joint);
        if joint > parts + PROPERTY_TOLERANCE {
            report.failures.push(PropertyFailure {
                property: Property::Subadditivity,
                trial,
                detail: format!("P[{s1}+{s2} ≻ {target}] = {joint} > {parts}"),
            });
        }
    }
    Ok(report)
}
