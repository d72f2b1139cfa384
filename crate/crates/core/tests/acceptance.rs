//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line, and exits nonzero if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ualign_core::instances::{
    condorcet_cycle_instance, majority_instance, random_pl_mixture, random_ranking_population, uniform_pl_instance,
    uniform_rankings_instance,
};
use ualign_core::model::Components;
use ualign_core::{
    certify, check_properties, mwu_selfplay, nlhf_solve, pga_selfplay, ranking_pure_closed_form, Certifiable,
    Contender, MixtureOfProducts, Mode, Multiset, Policy, PreferenceModel, ProductPolicy, SelfPlayTrace,
    SolverConfig, WinrateEngine, WinrateQuery,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------------------------------------------------------------------------
// Test-side oracles. These enumerate ordered tuples and rankings directly and
// do not call into the engine.

/// `(weight, order)` pairs, best first.
type Population = Vec<(f64, Vec<usize>)>;

fn population(model: &PreferenceModel) -> Population {
    match model.components() {
        Components::Rankings(r) => r.iter().map(|(w, c)| (*w, c.order().to_vec())).collect(),
        Components::PlackettLuce(_) => panic!("not a ranking population"),
    }
}

fn positions(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    for (i, &y) in order.iter().enumerate() {
        pos[y] = i;
    }
    pos
}

/// Every ordered `k`-tuple over `probs.len()` responses with its probability.
fn for_each_tuple(probs: &[f64], k: usize, mut f: impl FnMut(&[usize], f64)) {
    let n = probs.len();
    let mut t = vec![0usize; k];
    loop {
        let p: f64 = t.iter().map(|&y| probs[y]).product();
        f(&t, p);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            t[i] += 1;
            if t[i] < n {
                break;
            }
            t[i] = 0;
        }
    }
}

fn top(pos: &[usize], side: &[usize]) -> usize {
    side.iter().map(|&y| pos[y]).min().unwrap()
}

/// `P[a ⪰ b]` or `P[a ≻ b]` for two fixed sides under a ranking population.
fn side_vs_side(pop: &Population, a: &[usize], b: &[usize], strict: bool) -> f64 {
    pop.iter()
        .map(|(w, order)| {
            let pos = positions(order);
            let (ta, tb) = (top(&pos, a), top(&pos, b));
            let win = if strict { ta < tb } else { ta <= tb };
            if win {
                *w
            } else {
                0.0
            }
        })
        .sum()
}

/// `P[side ≻ pi^{(x)k}]` by tuple enumeration.
fn side_beats_product(pop: &Population, side: &[usize], pi: &[f64], k: usize) -> f64 {
    let mut acc = 0.0;
    for_each_tuple(pi, k, |t, p| acc += p * side_vs_side(pop, side, t, true));
    acc
}

/// `P[pi^{(x)k} ⪰ side]` by tuple enumeration.
fn product_weak_vs_side(pop: &Population, pi: &[f64], k: usize, side: &[usize]) -> f64 {
    let mut acc = 0.0;
    for_each_tuple(pi, k, |t, p| acc += p * side_vs_side(pop, t, side, false));
    acc
}

/// `1 - max_S P[S ≻ sigma^T]` over ordered `l`-tuples `S`, for the uniform
/// mixture of `iterates^{(x)k}`.
fn certified_rate_bruteforce(pop: &Population, iterates: &[Policy], k: usize, l: usize) -> f64 {
    let n = iterates[0].len();
    let uniform = vec![1.0; n];
    let mut worst: f64 = 0.0;
    for_each_tuple(&uniform, l, |s, _| {
        let total: f64 = iterates.iter().map(|pi| side_beats_product(pop, s, pi.probs(), k)).sum();
        worst = worst.max(total / iterates.len() as f64);
    });
    1.0 - worst
}

/// `Reg^T` recomputed from scratch with brute-force gradients.
fn regret_bruteforce(pop: &Population, trace: &SelfPlayTrace) -> f64 {
    let n = trace.iterates[0].len();
    let mut per_action = vec![0.0; n];
    let mut played = 0.0;
    for pi in &trace.iterates {
        for y in 0..n {
            let g = side_beats_product(pop, &[y], pi.probs(), trace.k);
            per_action[y] += g;
            played += pi.prob(y) * g;
        }
    }
    (per_action.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - played).max(0.0)
}

/// Root of `(1/2 + eps)(1 - p)^k = (1/2 - eps) p^k` on `[0, 1]` by bisection.
fn bisection_p_star(eps: f64, k: i32) -> f64 {
    let f = |p: f64| (0.5 + eps) * (1.0 - p).powi(k) - (0.5 - eps) * p.powi(k);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn random_base(n: usize, rng: &mut ChaCha8Rng) -> Policy {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    Policy::normalized(w).unwrap()
}

fn kk(k: usize) -> f64 {
    k as f64 / (k + 1) as f64
}

// ---------------------------------------------------------------------------

fn nlhf_majority_rate() -> Outcome {
    let start = Instant::now();
    let engine = WinrateEngine::default();
    let model = majority_instance(0.1).unwrap();
    let pi = nlhf_solve(&model, &SolverConfig::lp()).map_err(|e| e.to_string())?;
    let mut rates = Vec::new();
    for k in [1, 2, 4, 8] {
        let rep = certify(&engine, Certifiable::Policy(&pi), k, 1, &model, 1e-9).unwrap();
        ensure!((rep.certified_rate - 0.6).abs() <= 1e-12, "k = {k}: certified {}", rep.certified_rate);
        rates.push(rep.certified_rate);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("rates {rates:?} in {elapsed:?}"))
}

const ROUNDS: usize = 10_000;

fn mwu_mixture_certifies() -> Outcome {
    let engine = WinrateEngine::default();
    let mut summary = Vec::new();
    for (name, model) in [("majority", majority_instance(0.1).unwrap()), ("cycle", condorcet_cycle_instance().unwrap())] {
        let start = Instant::now();
        let pop = population(&model);
        let n = model.universe() as f64;
        for k in 1..=3 {
            let trace = mwu_selfplay(&engine, &model, k, &SolverConfig::mwu(ROUNDS)).unwrap();
            let rep = certify(&engine, Certifiable::Trace(&trace), k, 1, &model, 1e-9).unwrap();
            let per_round = trace.regret / ROUNDS as f64;
            let floor = kk(k) - per_round - 1e-9;
            ensure!(rep.certified_rate >= floor, "{name} k={k}: {} < {floor}", rep.certified_rate);
            let bound = 2.0 * (n.ln() / ROUNDS as f64).sqrt();
            ensure!(per_round <= bound, "{name} k={k}: Reg/T {per_round} > {bound}");

            let oracle_rate = certified_rate_bruteforce(&pop, &trace.iterates, k, 1);
            ensure!(
                (oracle_rate - rep.certified_rate).abs() <= 1e-10,
                "{name} k={k}: engine {} vs brute force {oracle_rate}",
                rep.certified_rate
            );
            let oracle_reg = regret_bruteforce(&pop, &trace);
            ensure!(
                (oracle_reg - trace.regret).abs() <= 1e-8,
                "{name} k={k}: regret {} vs brute force {oracle_reg}",
                trace.regret
            );
            summary.push(format!("{name}/k={k}: {:.4}", rep.certified_rate));
        }
        let elapsed = start.elapsed();
        ensure!(elapsed < Duration::from_secs(30), "{name} took {elapsed:?}");
    }
    Ok(summary.join(", "))
}

fn min_weak_rate(engine: &WinrateEngine, pi: &Policy, k: usize, model: &PreferenceModel) -> f64 {
    let sigma: Contender = ProductPolicy::new(pi.clone(), k).unwrap().into();
    engine.worst_pure_opponent_weak(&sigma, 1, model).unwrap().1
}

fn uniform_pl_tight() -> Outcome {
    let engine = WinrateEngine::default();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut worst_dev: f64 = 0.0;
    for k in 1..=3 {
        let model = uniform_pl_instance(k).unwrap();
        let n = model.universe();
        let mut policies = vec![Policy::uniform(n)];
        policies.extend((0..20).map(|_| random_base(n, &mut rng)));
        for (i, pi) in policies.iter().enumerate() {
            let v = min_weak_rate(&engine, pi, k, &model);
            let dev = (v - kk(k)).abs();
            worst_dev = worst_dev.max(dev);
            ensure!(dev <= 1e-12, "k={k} policy {i}: {v}");
        }
    }
    Ok(format!("max deviation {worst_dev:e} over 63 policies"))
}

fn uniform_rankings_bound() -> Outcome {
    let engine = WinrateEngine::default();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let model = uniform_rankings_instance(4).unwrap();
    let pop = population(&model);
    let mut summary = Vec::new();
    for k in 1..=2 {
        let bound = kk(k) * 1.25;
        let mut hi: f64 = 0.0;
        for i in 0..50 {
            let pi = random_base(4, &mut rng);
            let v = min_weak_rate(&engine, &pi, k, &model);
            let oracle = (0..4)
                .map(|y| product_weak_vs_side(&pop, pi.probs(), k, &[y]))
                .fold(f64::INFINITY, f64::min);
            ensure!((v - oracle).abs() <= 1e-12, "k={k} policy {i}: engine {v} vs brute force {oracle}");
            ensure!(v <= bound + 1e-12, "k={k} policy {i}: {v} > {bound}");
            hi = hi.max(v);
        }
        summary.push(format!("k={k}: max {hi:.4} <= {bound:.4}"));
    }
    Ok(summary.join(", "))
}

fn cycle_multi_opponent() -> Outcome {
    let engine = WinrateEngine::default();
    let model = condorcet_cycle_instance().unwrap();
    let pop = population(&model);
    let k = 4;
    let trace = mwu_selfplay(&engine, &model, k, &SolverConfig::mwu(ROUNDS)).unwrap();
    let per_round = trace.regret / ROUNDS as f64;
    let mut rates = Vec::new();
    for l in 1..=3 {
        let rep = certify(&engine, Certifiable::Trace(&trace), k, l, &model, 1e-9).unwrap();
        let floor = (5 - l) as f64 / 5.0 - per_round;
        ensure!(rep.certified_rate >= floor, "l={l}: {} < {floor}", rep.certified_rate);
        let oracle = certified_rate_bruteforce(&pop, &trace.iterates, k, l);
        ensure!(
            (oracle - rep.certified_rate).abs() <= 1e-10,
            "l={l}: engine {} vs brute force {oracle}",
            rep.certified_rate
        );
        rates.push(rep.certified_rate);
    }
    Ok(format!("rates {rates:?}, Reg/T = {per_round:e}"))
}

fn property_suite() -> Outcome {
    let engine = WinrateEngine::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut counts = Vec::new();
    for family in ["pl", "rankings"] {
        let mut failures = 0;
        for case in 0..200u64 {
            let n = rng.random_range(2..=5);
            let comps = rng.random_range(1..=4);
            let model = if family == "pl" {
                random_pl_mixture(n, comps, &mut rng)
            } else {
                random_ranking_population(n, comps, &mut rng)
            };
            let rep = check_properties(&engine, &model, 1, case).unwrap();
            failures += rep.failures.len();
        }
        ensure!(failures == 0, "{family}: {failures} failures");
        counts.push(format!("{family}: 200 cases, 0 failures"));
    }
    Ok(counts.join(", "))
}

fn exact_vs_closed_form_grid(engine: &WinrateEngine) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for n in 1..=6 {
        let model = random_ranking_population(n, 4, &mut rng);
        let pop = population(&model);
        for k in 1..=4 {
            let pi = random_base(n, &mut rng);
            for y in 0..n {
                let q = WinrateQuery::new(
                    ProductPolicy::new(pi.clone(), k).unwrap(),
                    Multiset::singleton(y),
                    &model,
                    Mode::Weak,
                );
                let exact = engine.exact_winrate(&q).unwrap().value;
                let closed = ranking_pure_closed_form(&pi, k, y, &model).unwrap().value;
                let brute = product_weak_vs_side(&pop, pi.probs(), k, &[y]);
                ensure!((exact - closed).abs() <= 1e-12, "n={n} k={k} y={y}: {exact} vs {closed}");
                ensure!((exact - brute).abs() <= 1e-12, "n={n} k={k} y={y}: {exact} vs tuples {brute}");
                checked += 1;
            }
        }
    }
    Ok(checked)
}

fn mc_queries() -> Vec<(PreferenceModel, Contender, Contender, Mode)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut out = Vec::new();
    for i in 0..30 {
        let n = rng.random_range(2..=5);
        let model = if i % 2 == 0 {
            random_pl_mixture(n, 3, &mut rng)
        } else {
            random_ranking_population(n, 3, &mut rng)
        };
        let side = |rng: &mut ChaCha8Rng, kind: usize| -> Contender {
            let k = rng.random_range(1..=3);
            match kind {
                0 => Multiset::from_ids(&(0..k).map(|_| rng.random_range(0..n)).collect::<Vec<_>>())
                    .unwrap()
                    .into(),
                1 => ProductPolicy::new(random_base(n, rng), k).unwrap().into(),
                _ => MixtureOfProducts::new(vec![
                    (0.3, ProductPolicy::new(random_base(n, rng), k).unwrap()),
                    (0.7, ProductPolicy::new(random_base(n, rng), k).unwrap()),
                ])
                .unwrap()
                .into(),
            }
        };
        let lhs = side(&mut rng, i % 3);
        let rhs = side(&mut rng, (i / 3) % 3);
        let mode = if i % 4 < 2 { Mode::Weak } else { Mode::Strict };
        out.push((model, lhs, rhs, mode));
    }
    out
}

fn oracle_equivalence() -> Outcome {
    let engine = WinrateEngine::default();
    let checked = exact_vs_closed_form_grid(&engine)?;

    let queries = mc_queries();
    let exact: Vec<f64> = queries
        .iter()
        .map(|(m, a, b, mode)| engine.exact_winrate(&WinrateQuery::new(a.clone(), b.clone(), m, *mode)).unwrap().value)
        .collect();
    let mut good_seeds = 0;
    let mut worst_z: f64 = 0.0;
    for seed in 0..30u64 {
        let mut all_within = true;
        for ((m, a, b, mode), truth) in queries.iter().zip(&exact) {
            let est = engine
                .mc_winrate(&WinrateQuery::new(a.clone(), b.clone(), m, *mode), 1_000_000, seed)
                .unwrap();
            ensure!(est.stderr > 0.0, "zero standard error");
            let z = (est.value - truth).abs() / est.stderr;
            worst_z = worst_z.max(z);
            all_within &= z <= 5.0;
        }
        good_seeds += all_within as usize;
    }
    ensure!(good_seeds >= 29, "only {good_seeds}/30 seeds within 5 SE on all queries");
    Ok(format!(
        "{checked} closed-form points agree; {good_seeds}/30 seeds within 5 SE on 30 queries (max z {worst_z:.2})"
    ))
}

fn equilibrium_oracles() -> Outcome {
    let engine = WinrateEngine::default();
    let majority = majority_instance(0.1).unwrap();
    let cycle = condorcet_cycle_instance().unwrap();
    let lp = SolverConfig::lp();
    let tv_major = nlhf_solve(&majority, &lp).unwrap().total_variation(&Policy::point_mass(2, 0));
    ensure!(tv_major <= 1e-6, "majority NLHF at TV {tv_major} from the point mass");
    let tv_cycle = nlhf_solve(&cycle, &lp).unwrap().total_variation(&Policy::uniform(3));
    ensure!(tv_cycle <= 1e-6, "cycle NLHF at TV {tv_cycle} from uniform");

    let p = bisection_p_star(0.1, 2);
    let oracle = Policy::new(vec![p, 1.0 - p]).unwrap();
    let trace = pga_selfplay(&engine, &majority, 2, &SolverConfig::pga(100_000)).unwrap();
    let tv_mpne = trace.last().total_variation(&oracle);
    ensure!(tv_mpne <= 1e-2, "MPNE {:?} at TV {tv_mpne} from p* = {p}", trace.last().probs());
    Ok(format!("NLHF TV {tv_major:e} / {tv_cycle:e}; MPNE TV {tv_mpne:e} from p* = {p:.6}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("NLHF rate on majority stays at 0.6", nlhf_majority_rate),
        ("MWU mixture certifies k/(k+1) - Reg/T", mwu_mixture_certifies),
        ("uniform PL weak rate equals k/(k+1)", uniform_pl_tight),
        ("uniform rankings weak rate bound", uniform_rankings_bound),
        ("multi-opponent certification on the cycle", cycle_multi_opponent),
        ("randomized property suite", property_suite),
        ("exact, closed form and Monte Carlo agree", oracle_equivalence),
        ("equilibrium oracles", equilibrium_oracles),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.2}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.2}s) {why}", i + 1)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
