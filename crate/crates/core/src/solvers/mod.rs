//! Equilibrium computation for the NLHF game and the `(k+1)`-player
//! alignment game, the KL-regularized RLHF baseline, and certification of
//! robust-alignment rates.

mod certify;
mod config;
mod gradient;
mod nlhf;
mod rlhf;
mod selfplay;
mod simplex;

pub use certify::{alignment_threshold, certify, Certifiable, CertificationReport, DEFAULT_CERT_TOLERANCE};
pub use config::{Algorithm, SolverConfig, StepSize, DEFAULT_PGA_STEP};
pub use gradient::{best_response_gap, utility, utility_gradient};
pub use nlhf::{nlhf_payoff_matrix, nlhf_solve};
pub use rlhf::rlhf_solve;
pub use selfplay::{fixed_point_residual, mwu_selfplay, pga_selfplay, pga_step, solve_symmetric, SelfPlayTrace};
pub use simplex::simplex_project;
