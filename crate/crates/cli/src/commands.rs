//! The `solve`, `certify`, `sweep` and `reproduce` commands.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use ualign_core::instances::{
    condorcet_cycle_instance, majority_instance, random_pl_mixture, random_ranking_population, uniform_pl_instance,
    uniform_rankings_instance,
};
use ualign_core::properties::{random_policy, Property};
use ualign_core::solvers::{alignment_threshold, best_response_gap, fixed_point_residual, DEFAULT_CERT_TOLERANCE};
use ualign_core::{
    certify, check_properties, nlhf_solve, solve_symmetric, utility_gradient, Algorithm, Certifiable, Instance,
    Mode, Multiset, Policy, PreferenceModel, ProductPolicy, SolverConfig, WinrateEngine,
};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::report::{format_probs, Check, Report, Row};

/// Iteration grid used by `sweep` when the config gives none.
pub const DEFAULT_SWEEP_ITERATIONS: [usize; 3] = [100, 1_000, 10_000];

fn build_instances(cfg: &ExperimentConfig) -> Result<Vec<Instance>> {
    cfg.validate()?;
    Ok(cfg.instance.build()?)
}

/// Runs the configured solver once at `(instance, k)` and certifies each `l`.
fn solve_point(
    engine: &WinrateEngine,
    inst: &Instance,
    k: usize,
    ls: &[usize],
    solver: &SolverConfig,
) -> Result<Vec<Row>> {
    let model = &inst.model;
    let start = Instant::now();
    let mut rows = Vec::with_capacity(ls.len());
    match solver.algorithm {
        Algorithm::LpNlhf => {
            let pi = nlhf_solve(model, solver)?;
            let gap = best_response_gap(&pi, &utility_gradient(engine, &pi, k, model)?);
            let solved = start.elapsed();
            for &l in ls {
                let t = Instant::now();
                let rep = certify(engine, Certifiable::Policy(&pi), k, l, model, solver.tolerance)?;
                rows.push(make_row(inst, solver, k, 0, &rep, &pi, gap, model, solved + t.elapsed()));
            }
        }
        Algorithm::Mwu | Algorithm::ProjectedGradient => {
            let trace = solve_symmetric(engine, model, k, solver)?;
            let solved = start.elapsed();
            for &l in ls {
                let t = Instant::now();
                let rep = certify(engine, Certifiable::Trace(&trace), k, l, model, solver.tolerance)?;
                rows.push(make_row(
                    inst,
                    solver,
                    k,
                    trace.len(),
                    &rep,
                    trace.last(),
                    trace.last_gap(),
                    model,
                    solved + t.elapsed(),
                ));
            }
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn make_row(
    inst: &Instance,
    solver: &SolverConfig,
    k: usize,
    iterations: usize,
    rep: &ualign_core::CertificationReport,
    candidate: &Policy,
    candidate_gap: f64,
    model: &PreferenceModel,
    elapsed: std::time::Duration,
) -> Row {
    Row {
        instance: inst.name.clone(),
        prompt: inst.prompt.clone(),
        algorithm: solver.algorithm.to_string(),
        k,
        l: rep.l,
        iterations,
        seed: solver.seed,
        certified_rate: rep.certified_rate,
        weak_rate: rep.weak_rate,
        threshold: rep.threshold,
        regret_slack: rep.regret_slack,
        witness: model.label_of(&rep.witness),
        candidate: format_probs(candidate.probs()),
        candidate_gap,
        pass: rep.pass,
        wall_time_ms: elapsed.as_secs_f64() * 1e3,
    }
}

fn run_grid(engine: &WinrateEngine, points: Vec<(&Instance, usize, SolverConfig)>, ls: &[usize]) -> Result<Vec<Row>> {
    let chunks = points
        .into_par_iter()
        .map(|(inst, k, solver)| solve_point(engine, inst, k, ls, &solver))
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// One solver run per `(prompt, k)`, certified at every `l`.
pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<Report> {
    let instances = build_instances(cfg)?;
    let engine = cfg.engine()?;
    let points = instances
        .iter()
        .flat_map(|inst| cfg.k.iter().map(move |&k| (inst, k, cfg.solver.clone())))
        .collect();
    Ok(Report::from_rows("solve", run_grid(&engine, points, &cfg.l)?))
}

/// Certifies a fixed base policy read from `policy_path`.
pub fn cmd_certify(cfg: &ExperimentConfig, policy_path: &Path) -> Result<Report> {
    let instances = build_instances(cfg)?;
    let engine = cfg.engine()?;
    let pi = read_policy(policy_path)?;
    let mut rows = Vec::new();
    for inst in &instances {
        if pi.len() != inst.model.universe() {
            return Err(HarnessError::usage(
                "policy",
                format!(
                    "{} has {} entries but {} ({}) has {} responses",
                    policy_path.display(),
                    pi.len(),
                    inst.name,
                    inst.prompt,
                    inst.model.universe()
                ),
            ));
        }
        for &k in &cfg.k {
            let gap = best_response_gap(&pi, &utility_gradient(&engine, &pi, k, &inst.model)?);
            for &l in &cfg.l {
                let t = Instant::now();
                let rep = certify(&engine, Certifiable::Policy(&pi), k, l, &inst.model, cfg.solver.tolerance)?;
                let mut row = make_row(inst, &cfg.solver, k, 0, &rep, &pi, gap, &inst.model, t.elapsed());
                row.algorithm = "fixed-policy".into();
                rows.push(row);
            }
        }
    }
    Ok(Report::from_rows("certify", rows))
}

/// A JSON array of probabilities or `{"probs": [...]}`.
pub fn read_policy(path: &Path) -> Result<Policy> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Document {
        path: path.display().to_string(),
        source,
    })
}

/// Certified rate against `k` and against the iteration count.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Report> {
    let instances = build_instances(cfg)?;
    let engine = cfg.engine()?;
    let grid: Vec<usize> = if cfg.iterations_grid.is_empty() {
        DEFAULT_SWEEP_ITERATIONS.to_vec()
    } else {
        cfg.iterations_grid.clone()
    };
    let mut points = Vec::new();
    for inst in &instances {
        for &k in &cfg.k {
            for &t in &grid {
                let mut solver = cfg.solver.clone();
                solver.iterations = t;
                points.push((inst, k, solver));
            }
        }
    }
    Ok(Report::from_rows("sweep", run_grid(&engine, points, &cfg.l)?))
}

/// Claims that `reproduce` can re-derive numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Properties,
    UniformPl,
    UniformRankings,
    NlhfFails,
    MpneFixedPoint,
    MwuAverage,
    MultiOpponent,
}

impl Target {
    pub const ALL: [Target; 7] = [
        Target::Properties,
        Target::UniformPl,
        Target::UniformRankings,
        Target::NlhfFails,
        Target::MpneFixedPoint,
        Target::MwuAverage,
        Target::MultiOpponent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::Properties => "prop-2.2",
            Target::UniformPl => "prop-3.2",
            Target::UniformRankings => "prop-3.3",
            Target::NlhfFails => "prop-4.1",
            Target::MpneFixedPoint => "thm-4.3",
            Target::MwuAverage => "prop-4.3",
            Target::MultiOpponent => "thm-4.4",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Target::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Target::ALL.iter().map(|t| t.name()).collect();
            HarnessError::usage("target", format!("unknown target {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

pub fn cmd_reproduce(target: Target, engine: &WinrateEngine, seed: u64) -> Result<Report> {
    let checks = match target {
        Target::Properties => reproduce_properties(engine, seed)?,
        Target::UniformPl => reproduce_uniform_pl(engine, seed)?,
        Target::UniformRankings => reproduce_uniform_rankings(engine, seed)?,
        Target::NlhfFails => reproduce_nlhf(engine)?,
        Target::MpneFixedPoint => reproduce_fixed_point(engine)?,
        Target::MwuAverage => reproduce_mwu(engine)?,
        Target::MultiOpponent => reproduce_multi_opponent(engine)?,
    };
    Ok(Report::from_checks(format!("reproduce {target}"), checks))
}

struct CheckBuilder {
    target: Target,
    out: Vec<Check>,
}

impl CheckBuilder {
    fn new(target: Target) -> Self {
        Self { target, out: Vec::new() }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, instance: &str, case: impl Into<String>, k: usize, l: usize, value: f64, threshold: f64, pass: bool) {
        self.out.push(Check {
            target: self.target.to_string(),
            instance: instance.to_string(),
            case: case.into(),
            k,
            l,
            value,
            threshold,
            pass,
        });
    }
}

const PROPERTY_TRIALS: usize = 200;
const EXACT_TOL: f64 = 1e-12;

fn reproduce_properties(engine: &WinrateEngine, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut models = vec![
        ("condorcet-cycle".to_string(), condorcet_cycle_instance()?),
        ("majority:0.1".to_string(), majority_instance(0.1)?),
        ("uniform-pl:3".to_string(), uniform_pl_instance(3)?),
        ("uniform-rankings:4".to_string(), uniform_rankings_instance(4)?),
    ];
    for i in 0..3 {
        models.push((format!("random-pl-{i}"), random_pl_mixture(4, 3, &mut rng)));
        models.push((format!("random-rankings-{i}"), random_ranking_population(4, 5, &mut rng)));
    }
    let mut b = CheckBuilder::new(Target::Properties);
    for (i, (name, model)) in models.iter().enumerate() {
        let rep = check_properties(engine, model, PROPERTY_TRIALS, seed.wrapping_add(i as u64))?;
        let count = |p: Property| rep.failures.iter().filter(|f| f.property == p).count();
        let anti = count(Property::Antisymmetry);
        b.push(name, "antisymmetry-failures", 0, 0, anti as f64, 0.0, anti == 0);
        b.push(
            name,
            "min-copy-margin",
            0,
            0,
            rep.min_copy_margin,
            0.0,
            count(Property::MultiVsSingleCopy) == 0,
        );
        b.push(
            name,
            "min-subadditivity-slack",
            0,
            0,
            rep.min_subadditivity_slack,
            0.0,
            count(Property::Subadditivity) == 0,
        );
    }
    Ok(b.out)
}

/// Smallest weak win rate of `pi^{(x)k}` against a single response.
fn min_weak_rate(engine: &WinrateEngine, pi: &Policy, k: usize, model: &PreferenceModel) -> Result<f64> {
    let sigma = ProductPolicy::new(pi.clone(), k)?.into();
    Ok(engine.worst_pure_opponent_weak(&sigma, 1, model)?.1)
}

fn reproduce_uniform_pl(engine: &WinrateEngine, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CheckBuilder::new(Target::UniformPl);
    for k in 1..=3 {
        let model = uniform_pl_instance(k)?;
        let name = format!("uniform-pl:{k}");
        let want = k as f64 / (k + 1) as f64;
        let n = model.universe();
        let v = min_weak_rate(engine, &Policy::uniform(n), k, &model)?;
        b.push(&name, "uniform", k, 1, v, want, (v - want).abs() <= EXACT_TOL);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..20 {
            let v = min_weak_rate(engine, &random_policy(n, &mut rng), k, &model)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        b.push(&name, "random-min", k, 1, lo, want, (lo - want).abs() <= EXACT_TOL);
        b.push(&name, "random-max", k, 1, hi, want, (hi - want).abs() <= EXACT_TOL);
    }
    Ok(b.out)
}

fn reproduce_uniform_rankings(engine: &WinrateEngine, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CheckBuilder::new(Target::UniformRankings);

    // Two distinct responses against a third under all 3! rankings.
    let m3 = uniform_rankings_instance(3)?;
    let v = m3.winrate(&Multiset::from_ids(&[0, 1])?, &Multiset::singleton(2), Mode::Weak);
    b.push("uniform-rankings:3", "distinct-pair-vs-other", 2, 1, v, 2.0 / 3.0, (v - 2.0 / 3.0).abs() <= EXACT_TOL);

    let m = 4;
    let model = uniform_rankings_instance(m)?;
    let name = format!("uniform-rankings:{m}");
    for k in 1..=2 {
        let bound = k as f64 / (k + 1) as f64 * (1.0 + 1.0 / m as f64);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..50 {
            worst = worst.max(min_weak_rate(engine, &random_policy(m, &mut rng), k, &model)?);
        }
        b.push(&name, "max-over-policies-of-min-rate", k, 1, worst, bound, worst <= bound + EXACT_TOL);
    }
    Ok(b.out)
}

/// Projected gradient run to a fixed point.
fn pga_candidate(engine: &WinrateEngine, model: &PreferenceModel, k: usize) -> Result<(Policy, f64, f64)> {
    let mut cfg = SolverConfig::pga(200_000);
    cfg.tolerance = 1e-12;
    let trace = solve_symmetric(engine, model, k, &cfg)?;
    let pi = trace.last().clone();
    let eta = cfg.resolve_step(model.universe());
    let residual = fixed_point_residual(engine, &pi, k, model, eta)?;
    Ok((pi, residual, trace.last_gap()))
}

fn reproduce_nlhf(engine: &WinrateEngine) -> Result<Vec<Check>> {
    let eps = 0.1;
    let model = majority_instance(eps)?;
    let name = format!("majority:{eps}");
    let nlhf = nlhf_solve(&model, &SolverConfig::lp())?;
    let mut b = CheckBuilder::new(Target::NlhfFails);
    for k in [1, 2, 4, 8] {
        let rep = certify(engine, Certifiable::Policy(&nlhf), k, 1, &model, DEFAULT_CERT_TOLERANCE)?;
        let want = 0.5 + eps;
        let v = rep.certified_rate;
        b.push(&name, "nlhf", k, 1, v, want, (v - want).abs() <= EXACT_TOL);

        let (pi, _, _) = pga_candidate(engine, &model, k)?;
        let rep = certify(engine, Certifiable::Policy(&pi), k, 1, &model, DEFAULT_CERT_TOLERANCE)?;
        let floor = k as f64 / (k + 1) as f64 - 1e-6;
        b.push(&name, "mpne", k, 1, rep.certified_rate, floor, rep.certified_rate >= floor);
    }
    Ok(b.out)
}

fn reproduce_fixed_point(engine: &WinrateEngine) -> Result<Vec<Check>> {
    let tol = 1e-9;
    let mut b = CheckBuilder::new(Target::MpneFixedPoint);
    for (name, model) in [("majority:0.1", majority_instance(0.1)?), ("condorcet-cycle", condorcet_cycle_instance()?)] {
        for k in 1..=3 {
            let (pi, residual, gap) = pga_candidate(engine, &model, k)?;
            b.push(name, "residual", k, 1, residual, tol, residual <= tol);
            b.push(name, "best-response-gap", k, 1, gap, 10.0 * tol, gap <= 10.0 * tol);
            let rep = certify(engine, Certifiable::Policy(&pi), k, 1, &model, DEFAULT_CERT_TOLERANCE)?;
            let floor = k as f64 / (k + 1) as f64 - 10.0 * tol;
            b.push(name, "certified-rate", k, 1, rep.certified_rate, floor, rep.certified_rate >= floor);
        }
    }
    Ok(b.out)
}

const MWU_ROUNDS: usize = 10_000;

fn reproduce_mwu(engine: &WinrateEngine) -> Result<Vec<Check>> {
    let mut b = CheckBuilder::new(Target::MwuAverage);
    for (name, model) in [("majority:0.1", majority_instance(0.1)?), ("condorcet-cycle", condorcet_cycle_instance()?)] {
        let n = model.universe() as f64;
        for k in 1..=3 {
            let trace = solve_symmetric(engine, &model, k, &SolverConfig::mwu(MWU_ROUNDS))?;
            let rep = certify(engine, Certifiable::Trace(&trace), k, 1, &model, DEFAULT_CERT_TOLERANCE)?;
            b.push(name, "certified-rate", k, 1, rep.certified_rate, rep.threshold, rep.pass);
            let per_round = trace.regret_per_round();
            let bound = 2.0 * (n.ln() / MWU_ROUNDS as f64).sqrt();
            b.push(name, "regret-per-round", k, 1, per_round, bound, per_round <= bound);
        }
    }
    Ok(b.out)
}

fn reproduce_multi_opponent(engine: &WinrateEngine) -> Result<Vec<Check>> {
    let k = 4;
    let mut b = CheckBuilder::new(Target::MultiOpponent);
    for (name, model) in [("condorcet-cycle", condorcet_cycle_instance()?), ("majority:0.1", majority_instance(0.1)?)] {
        let trace = solve_symmetric(engine, &model, k, &SolverConfig::mwu(MWU_ROUNDS))?;
        for l in 1..=3 {
            let rep = certify(engine, Certifiable::Trace(&trace), k, l, &model, DEFAULT_CERT_TOLERANCE)?;
            debug_assert_eq!(rep.threshold, alignment_threshold(k, l) - l as f64 * trace.regret_per_round());
            b.push(name, "certified-rate", k, l, rep.certified_rate, rep.threshold, rep.pass);
        }
    }
    Ok(b.out)
}
