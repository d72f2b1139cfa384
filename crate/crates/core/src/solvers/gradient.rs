use crate::distribution::MultisetDistribution;
use crate::error::{invalid, Result};
use crate::model::{Mode, PreferenceModel};
use crate::numeric::{multiset_count, CompensatedSum};
use crate::types::{Multiset, Policy, ProductPolicy};
use crate::winrate::WinrateEngine;

/// `g[y] = P[y ≻ pi^{(x)k}]`: the payoff of each pure deviation against `k`
/// copies of `pi`. Player utility is linear, `u(pi', pi^{(x)k}) = <pi', g>`.
pub fn utility_gradient(
    engine: &WinrateEngine,
    pi: &Policy,
    k: usize,
    model: &PreferenceModel,
) -> Result<Vec<f64>> {
    let n = model.universe();
    if pi.len() != n {
        return invalid(format!("policy has {} entries, model has {n} responses", pi.len()));
    }
    engine.check_terms(multiset_count(n, k).saturating_mul(n as u128))?;
    let dist = MultisetDistribution::of_product(&ProductPolicy::new(pi.clone(), k)?);
    Ok((0..n)
        .map(|y| {
            let single = Multiset::singleton(y);
            let mut acc = CompensatedSum::new();
            for (s, p) in dist.entries() {
                acc.add(p * model.winrate(&single, s, Mode::Strict));
            }
            acc.value()
        })
        .collect())
}

/// `u(pi', .) = <pi', g>`.
pub fn utility(pi: &Policy, gradient: &[f64]) -> f64 {
    pi.dot(gradient)
}

/// `max_y g[y] - <pi, g>`; zero exactly at a best response.
pub fn best_response_gap(pi: &Policy, gradient: &[f64]) -> f64 {
    let best = gradient.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    best - pi.dot(gradient)
}
