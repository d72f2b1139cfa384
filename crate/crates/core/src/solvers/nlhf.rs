//! The two-player NLHF game and its maximal-lottery solution.
//!
//! Payoffs split ties evenly, `M[y][y'] = (P[y ⪰ y'] + P[y ≻ y']) / 2`, which
//! makes the game symmetric constant-sum with value exactly 1/2. Any
//! optimal strategy then wins weakly with probability at least 1/2 against
//! every opponent.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};

use super::config::{Algorithm, SolverConfig};
use crate::error::{invalid, Error, Result};
use crate::model::{Mode, PreferenceModel};
use crate::numeric::compensated_sum;
use crate::types::{Multiset, Policy};

/// Residual allowed on the LP's guarantee before reporting a numerical failure.
const LP_GUARANTEE_TOLERANCE: f64 = 1e-9;

pub fn nlhf_payoff_matrix(model: &PreferenceModel) -> Vec<Vec<f64>> {
    let n = model.universe();
    (0..n)
        .map(|y| {
            let a = Multiset::singleton(y);
            (0..n)
                .map(|z| {
                    let b = Multiset::singleton(z);
                    0.5 * (model.winrate(&a, &b, Mode::Weak) + model.winrate(&a, &b, Mode::Strict))
                })
                .collect()
        })
        .collect()
}

/// Solves `max_pi min_pi' pi^T M pi'` by linear programming, or by MWU
/// self-play (averaged iterate) when the config asks for it.
pub fn nlhf_solve(model: &PreferenceModel, config: &SolverConfig) -> Result<Policy> {
    config.validate()?;
    let n = model.universe();
    if n == 1 {
        return Ok(Policy::point_mass(1, 0));
    }
    let m = nlhf_payoff_matrix(model);
    match config.algorithm {
        Algorithm::LpNlhf => solve_lp(&m),
        Algorithm::Mwu => Ok(solve_mwu(&m, config)),
        Algorithm::ProjectedGradient => invalid("NLHF supports the lp-nlhf and mwu algorithms"),
    }
}

fn column_values(m: &[Vec<f64>], pi: &[f64]) -> Vec<f64> {
    let n = m.len();
    (0..n)
        .map(|z| compensated_sum((0..n).map(|y| pi[y] * m[y][z])))
        .collect()
}

fn solve_lp(m: &[Vec<f64>]) -> Result<Policy> {
    let n = m.len();
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let value = problem.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let probs: Vec<_> = (0..n).map(|_| problem.add_var(0.0, (0.0, 1.0))).collect();
    for z in 0..n {
        let mut row = LinearExpr::empty();
        for y in 0..n {
            row.add(probs[y], m[y][z]);
        }
        row.add(value, -1.0);
        problem.add_constraint(row, ComparisonOp::Ge, 0.0);
    }
    let mut mass = LinearExpr::empty();
    for &p in &probs {
        mass.add(p, 1.0);
    }
    problem.add_constraint(mass, ComparisonOp::Eq, 1.0);
    let solution = problem
        .solve()
        .map_err(|e| Error::Numerical(format!("NLHF linear program: {e}")))?;
    let raw: Vec<f64> = probs.iter().map(|&v| solution[v].max(0.0)).collect();
    let pi = Policy::normalized(raw)?;
    let worst = column_values(m, pi.probs())
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if worst < 0.5 - LP_GUARANTEE_TOLERANCE {
        return Err(Error::Numerical(format!(
            "NLHF solution guarantees {worst}, residual {} below 1/2",
            0.5 - worst
        )));
    }
    Ok(pi)
}

fn solve_mwu(m: &[Vec<f64>], config: &SolverConfig) -> Policy {
    let n = m.len();
    let eta = config.resolve_step(n);
    let mut log_w = vec![0.0; n];
    let mut avg = vec![0.0; n];
    for _ in 0..config.iterations {
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_w.iter().map(|l: &f64| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();
        let pi: Vec<f64> = w.iter().map(|x| x / total).collect();
        for (a, p) in avg.iter_mut().zip(&pi) {
            *a += p;
        }
        // Row payoff against the current strategy as the opponent.
        for y in 0..n {
            let g = compensated_sum((0..n).map(|z| m[y][z] * pi[z]));
            log_w[y] += eta * g;
        }
    }
    Policy::normalized(avg).expect("average of distributions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PlComponent, RankingComponent};

    fn majority(eps: f64) -> PreferenceModel {
        PreferenceModel::rankings(
            PreferenceModel::default_labels(2),
            vec![
                (0.5 + eps, RankingComponent::new(vec![0, 1]).unwrap()),
                (0.5 - eps, RankingComponent::new(vec![1, 0]).unwrap()),
            ],
        )
        .unwrap()
    }

    fn cyclic() -> PreferenceModel {
        let t = 1.0 / 3.0;
        PreferenceModel::rankings(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                (t, RankingComponent::new(vec![0, 1, 2]).unwrap()),
                (t, RankingComponent::new(vec![1, 2, 0]).unwrap()),
                (t, RankingComponent::new(vec![2, 0, 1]).unwrap()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn majority_collapses_to_condorcet_winner() {
        let pi = nlhf_solve(&majority(0.1), &SolverConfig::lp()).unwrap();
        assert!(pi.total_variation(&Policy::point_mass(2, 0)) < 1e-9);
    }

    #[test]
    fn cycle_is_uniform() {
        let m = cyclic();
        let pi = nlhf_solve(&m, &SolverConfig::lp()).unwrap();
        assert!(pi.total_variation(&Policy::uniform(3)) < 1e-9);
        // Oracle: every pure reply to uniform scores exactly 1/2.
        let payoff = nlhf_payoff_matrix(&m);
        for z in 0..3 {
            let v: f64 = (0..3).map(|y| payoff[y][z] / 3.0).sum();
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn single_response() {
        let m = PreferenceModel::plackett_luce(vec!["x".into()], vec![(1.0, PlComponent::new(vec![0.0]).unwrap())])
            .unwrap();
        assert_eq!(nlhf_solve(&m, &SolverConfig::lp()).unwrap().probs(), &[1.0]);
    }

    #[test]
    fn mwu_route_approaches_lp() {
        let m = cyclic();
        let pi = nlhf_solve(&m, &SolverConfig::mwu(2000)).unwrap();
        assert!(pi.total_variation(&Policy::uniform(3)) < 1e-2);
        let pga = SolverConfig::pga(10);
        assert!(nlhf_solve(&m, &pga).is_err());
    }

    #[test]
    fn payoff_is_constant_sum() {
        let m = nlhf_payoff_matrix(&majority(0.2));
        for y in 0..2 {
            for z in 0..2 {
                assert!((m[y][z] + m[z][y] - 1.0).abs() < 1e-15);
            }
        }
    }
}
