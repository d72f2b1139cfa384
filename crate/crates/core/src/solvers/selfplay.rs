//! Symmetric self-play in the `(k+1)`-player alignment game.
//!
//! Every player runs the same update, so a single iterate sequence describes
//! the whole profile. The certified object is the uniform mixture over the
//! products `(pi^t)^{(x)k}`; the last iterate is kept as an equilibrium
//! candidate.

use serde::Serialize;

use super::config::{Algorithm, SolverConfig};
use super::gradient::{best_response_gap, utility_gradient};
use super::simplex::simplex_project;
use crate::error::{invalid, Result};
use crate::model::PreferenceModel;
use crate::numeric::CompensatedSum;
use crate::types::{MixtureOfProducts, Policy};
use crate::winrate::WinrateEngine;

#[derive(Debug, Clone, Serialize)]
pub struct SelfPlayTrace {
    pub algorithm: Algorithm,
    pub k: usize,
    pub step_size: f64,
    /// `pi^1 .. pi^T`.
    pub iterates: Vec<Policy>,
    /// `g^t[y] = P[y ≻ (pi^t)^{(x)k}]`.
    pub gradients: Vec<Vec<f64>>,
    /// `Reg^T`, never negative.
    pub regret: f64,
    /// `||F(pi^T) - pi^T||` for projected gradient runs.
    pub residual: Option<f64>,
}

impl SelfPlayTrace {
    fn new(algorithm: Algorithm, k: usize, step_size: f64) -> Self {
        Self {
            algorithm,
            k,
            step_size,
            iterates: Vec::new(),
            gradients: Vec::new(),
            regret: 0.0,
            residual: None,
        }
    }

    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    /// `Reg^T / T`.
    pub fn regret_per_round(&self) -> f64 {
        self.regret / self.iterates.len() as f64
    }

    pub fn last(&self) -> &Policy {
        self.iterates.last().expect("traces are nonempty")
    }

    /// `sigma^T`: draw `t` uniformly, then play `(pi^t)^{(x)k}`.
    pub fn mixture(&self) -> MixtureOfProducts {
        MixtureOfProducts::uniform(&self.iterates, self.k).expect("traces are nonempty")
    }

    /// Best-response gap of the last iterate against its own gradient.
    pub fn last_gap(&self) -> f64 {
        best_response_gap(self.last(), self.gradients.last().expect("traces are nonempty"))
    }

    /// `max_y sum_t g^t[y] - sum_t <pi^t, g^t>`, floored at zero.
    ///
    /// Pure comparators suffice since the utility is linear.
    pub fn recompute_regret(&self) -> f64 {
        let n = self.iterates.first().map_or(0, Policy::len);
        let mut per_action = vec![CompensatedSum::new(); n];
        let mut played = CompensatedSum::new();
        for (pi, g) in self.iterates.iter().zip(&self.gradients) {
            for (acc, v) in per_action.iter_mut().zip(g) {
                acc.add(*v);
            }
            played.add(pi.dot(g));
        }
        let best = per_action
            .iter()
            .map(CompensatedSum::value)
            .fold(f64::NEG_INFINITY, f64::max);
        (best - played.value()).max(0.0)
    }
}

/// Multiplicative-weights self-play:
/// `pi^{t+1}(y) ∝ pi^t(y) exp(eta g^t[y])`, starting from uniform.
pub fn mwu_selfplay(
    engine: &WinrateEngine,
    model: &PreferenceModel,
    k: usize,
    config: &SolverConfig,
) -> Result<SelfPlayTrace> {
    config.validate()?;
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let n = model.universe();
    let eta = config.resolve_step(n);
    let mut trace = SelfPlayTrace::new(Algorithm::Mwu, k, eta);
    let mut log_weights = vec![0.0f64; n];
    let mut pi = Policy::uniform(n);
    for _ in 0..config.iterations {
        let g = utility_gradient(engine, &pi, k, model)?;
        for (lw, gy) in log_weights.iter_mut().zip(&g) {
            *lw += eta * gy;
        }
        let next = softmax(&log_weights);
        trace.iterates.push(std::mem::replace(&mut pi, next));
        trace.gradients.push(g);
    }
    trace.regret = trace.recompute_regret();
    Ok(trace)
}

fn softmax(logits: &[f64]) -> Policy {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Policy::normalized(logits.iter().map(|l| (l - max).exp()).collect()).expect("max term is 1")
}

/// One application of `F(pi) = Proj(pi + eta * g(pi))`.
pub fn pga_step(
    engine: &WinrateEngine,
    pi: &Policy,
    k: usize,
    model: &PreferenceModel,
    eta: f64,
) -> Result<Policy> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return invalid(format!("step size must be nonnegative, got {eta}"));
    }
    if eta == 0.0 {
        return Ok(pi.clone());
    }
    let g = utility_gradient(engine, pi, k, model)?;
    Ok(step_with(pi, &g, eta))
}

fn step_with(pi: &Policy, g: &[f64], eta: f64) -> Policy {
    let v: Vec<f64> = pi.probs().iter().zip(g).map(|(p, gy)| p + eta * gy).collect();
    simplex_project(&v)
}

fn euclidean(a: &Policy, b: &Policy) -> f64 {
    a.probs()
        .iter()
        .zip(b.probs())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `||F(pi) - pi||_2`.
pub fn fixed_point_residual(
    engine: &WinrateEngine,
    pi: &Policy,
    k: usize,
    model: &PreferenceModel,
    eta: f64,
) -> Result<f64> {
    Ok(euclidean(&pga_step(engine, pi, k, model, eta)?, pi))
}

/// Iterates `F` from the uniform policy until the fixed-point residual drops
/// to the configured tolerance or the iteration budget runs out.
pub fn pga_selfplay(
    engine: &WinrateEngine,
    model: &PreferenceModel,
    k: usize,
    config: &SolverConfig,
) -> Result<SelfPlayTrace> {
    config.validate()?;
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let n = model.universe();
    let mut cfg = config.clone();
    cfg.algorithm = Algorithm::ProjectedGradient;
    let eta = cfg.resolve_step(n);
    let mut trace = SelfPlayTrace::new(Algorithm::ProjectedGradient, k, eta);
    let mut pi = Policy::uniform(n);
    for _ in 0..config.iterations {
        let g = utility_gradient(engine, &pi, k, model)?;
        let next = step_with(&pi, &g, eta);
        let residual = euclidean(&next, &pi);
        trace.iterates.push(std::mem::replace(&mut pi, next));
        trace.gradients.push(g);
        trace.residual = Some(residual);
        if residual <= config.tolerance {
            break;
        }
    }
    trace.regret = trace.recompute_regret();
    Ok(trace)
}

/// Runs the self-play algorithm named by `config` (MWU or projected gradient).
pub fn solve_symmetric(
    engine: &WinrateEngine,
    model: &PreferenceModel,
    k: usize,
    config: &SolverConfig,
) -> Result<SelfPlayTrace> {
    match config.algorithm {
        Algorithm::Mwu => mwu_selfplay(engine, model, k, config),
        Algorithm::ProjectedGradient => pga_selfplay(engine, model, k, config),
        Algorithm::LpNlhf => invalid("the LP solver handles the two-player NLHF game only"),
    }
}
