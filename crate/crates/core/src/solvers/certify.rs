use serde::Serialize;

use super::selfplay::SelfPlayTrace;
use crate::error::{invalid, Result};
use crate::model::PreferenceModel;
use crate::types::{Multiset, Policy, ProductPolicy};
use crate::winrate::{Contender, WinrateEngine};

/// Slack allowed between the certified rate and its threshold.
pub const DEFAULT_CERT_TOLERANCE: f64 = 1e-9;

/// What to certify: a single policy played `k` times, or the uniform mixture
/// over a self-play trace.
#[derive(Debug, Clone, Copy)]
pub enum Certifiable<'a> {
    Policy(&'a Policy),
    Trace(&'a SelfPlayTrace),
}

/// Outcome of an exact robust-alignment check against size-`l` opponents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub k: usize,
    pub l: usize,
    /// `1 - max_S P[S ≻ sigma]` over size-`l` multisets `S`.
    pub certified_rate: f64,
    /// `min_S P[sigma ⪰ S]`, computed from weak comparisons directly.
    pub weak_rate: f64,
    pub threshold: f64,
    pub witness: Multiset,
    /// `Reg^T / T`, zero for a single policy.
    pub regret_slack: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `(k + 1 - l) / (k + 1)`, floored at zero.
pub fn alignment_threshold(k: usize, l: usize) -> f64 {
    if l > k {
        0.0
    } else {
        (k + 1 - l) as f64 / (k + 1) as f64
    }
}

/// Certifies the win rate of `target` against every size-`l` opponent.
///
/// For a trace the threshold is lowered by `l * Reg^T / T`: each of the `l`
/// opponent responses can beat `sigma^T` with probability at most
/// `1/(k+1) + Reg^T/T`, and subadditivity sums the `l` terms.
pub fn certify(
    engine: &WinrateEngine,
    target: Certifiable<'_>,
    k: usize,
    l: usize,
    model: &PreferenceModel,
    tolerance: f64,
) -> Result<CertificationReport> {
    if k == 0 || l == 0 {
        return invalid("k and l must both be at least 1");
    }
    let (sigma, slack) = match target {
        Certifiable::Policy(p) => (Contender::Product(ProductPolicy::new(p.clone(), k)?), 0.0),
        Certifiable::Trace(t) => {
            if t.k != k {
                return invalid(format!("trace was played with k = {}, asked to certify k = {k}", t.k));
            }
            (Contender::Mixture(t.mixture()), t.regret_per_round())
        }
    };
    let (witness, best) = engine.best_pure_opponent(&sigma, l, model)?;
    let (_, weak_rate) = engine.worst_pure_opponent_weak(&sigma, l, model)?;
    let certified_rate = 1.0 - best;
    let threshold = alignment_threshold(k, l) - l as f64 * slack;
    Ok(CertificationReport {
        k,
        l,
        certified_rate,
        weak_rate,
        threshold,
        witness,
        regret_slack: slack,
        tolerance,
        pass: certified_rate >= threshold - tolerance,
    })
}
