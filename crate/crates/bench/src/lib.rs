//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ualign_core::instances::{random_pl_mixture, random_ranking_population};
use ualign_core::{Policy, PreferenceModel};

pub fn rankings(n: usize, comps: usize) -> PreferenceModel {
    random_ranking_population(n, comps, &mut ChaCha8Rng::seed_from_u64(n as u64))
}

pub fn plackett_luce(n: usize, comps: usize) -> PreferenceModel {
    random_pl_mixture(n, comps, &mut ChaCha8Rng::seed_from_u64(n as u64))
}

/// A fixed non-uniform base policy, `p_i` proportional to `i + 1`.
pub fn ramp(n: usize) -> Policy {
    Policy::normalized((1..=n).map(|i| i as f64).collect()).expect("positive weights")
}
