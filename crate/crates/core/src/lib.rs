//! Preference models, exact win-rate engines and equilibrium solvers for
//! test-time-scaled alignment games.
//!
//! A *k-output* policy answers a prompt with `k` responses and a user keeps
//! the one they like best. This crate models heterogeneous user populations
//! over a finite response set ([`PreferenceModel`]), evaluates win rates of
//! product policies `pi^{(x)k}` exactly ([`WinrateEngine`]), and computes and
//! certifies symmetric equilibria of the `(k+1)`-player alignment game whose
//! `k`-sample products win against any single-output opponent with
//! probability at least `k/(k+1)`.

pub mod distribution;
pub mod error;
pub mod instances;
pub mod model;
pub mod numeric;
pub mod properties;
pub mod solvers;
pub mod types;
pub mod winrate;

pub use error::{Error, Result};
pub use instances::{Instance, InstanceSpec};
pub use model::{Mode, ModelKind, PlComponent, PreferenceModel, RankingComponent};
pub use properties::{check_properties, PropertyReport};
pub use solvers::{
    certify, mwu_selfplay, nlhf_solve, pga_selfplay, pga_step, rlhf_solve, simplex_project, solve_symmetric, utility_gradient,
    Algorithm, CertificationReport, Certifiable, SelfPlayTrace, SolverConfig, StepSize,
};
pub use types::{MixtureOfProducts, Multiset, Policy, ProductPolicy, Response};
pub use winrate::{ranking_pure_closed_form, Backend, Contender, Estimate, WinrateEngine, WinrateQuery};
