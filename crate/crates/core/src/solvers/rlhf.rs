use crate::error::{invalid, Result};
use crate::types::Policy;

/// KL-regularized reward maximization, solved in closed form:
/// `pi(y) ∝ pi_ref(y) exp(reward[y] / eta_kl)`.
pub fn rlhf_solve(reward: &[f64], reference: &Policy, eta_kl: f64) -> Result<Policy> {
    if reward.len() != reference.len() {
        return invalid("reward and reference policy lengths differ");
    }
    if !(eta_kl > 0.0 && eta_kl.is_finite()) {
        return invalid(format!("KL coefficient must be positive, got {eta_kl}"));
    }
    if let Some(y) = reference.probs().iter().position(|&p| p <= 0.0) {
        return invalid(format!("reference policy has zero mass on response {y}"));
    }
    if reward.iter().any(|r| !r.is_finite()) {
        return invalid("rewards must be finite");
    }
    let logits: Vec<f64> = reward
        .iter()
        .zip(reference.probs())
        .map(|(r, p)| p.ln() + r / eta_kl)
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Policy::normalized(logits.iter().map(|l| (l - max).exp()).collect())
}
