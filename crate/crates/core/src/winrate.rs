//! Population win rates of product policies and mixtures of product policies.
//!
//! Three backends are provided and cross-checked in tests:
//!
//! * exact enumeration over support multisets with multinomial weights,
//! * a closed form for ranking populations against a single response,
//! * seeded Monte Carlo sampling.
//!
//! The opponent search [`WinrateEngine::best_pure_opponent`] maximizes the
//! strict win rate of a size-`l` multiset; pure multisets suffice because the
//! opponent's win rate is linear in its own mixed strategy.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{for_each_counts, MultisetDistribution};
use crate::error::{invalid, Error, Result};
use crate::model::{Components, Mode, PreferenceModel};
use crate::numeric::{multiset_count, CompensatedSum};
use crate::types::{MixtureOfProducts, Multiset, Policy, ProductPolicy};

/// Default budget on the number of multiset pairs visited by exact routines.
pub const DEFAULT_TERM_CAP: u64 = 10_000_000;

/// Values within this distance of the best opponent value count as ties.
pub const WITNESS_TIE_TOLERANCE: f64 = 1e-12;

/// One side of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Contender {
    Pure(Multiset),
    Product(ProductPolicy),
    Mixture(MixtureOfProducts),
}

impl Contender {
    /// Number of responses each draw produces.
    pub fn size(&self) -> usize {
        match self {
            Contender::Pure(s) => s.size(),
            Contender::Product(p) => p.k,
            Contender::Mixture(m) => m.k(),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let ok = match self {
            Contender::Pure(s) => s.max_id() < n,
            Contender::Product(p) => p.universe() == n,
            Contender::Mixture(m) => m.universe() == n,
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("contender does not live on a universe of {n} responses"))
        }
    }

    /// Number of distinct multisets the exact engine may visit for this side.
    fn nominal_terms(&self, n: usize) -> u128 {
        match self {
            Contender::Pure(_) => 1,
            Contender::Product(p) => multiset_count(n, p.k),
            Contender::Mixture(m) => multiset_count(n, m.k()),
        }
    }

    pub fn distribution(&self) -> MultisetDistribution {
        match self {
            Contender::Pure(s) => MultisetDistribution::point(s.clone()),
            Contender::Product(p) => MultisetDistribution::of_product(p),
            Contender::Mixture(m) => MultisetDistribution::of_mixture(m),
        }
    }
}

impl From<Multiset> for Contender {
    fn from(s: Multiset) -> Self {
        Contender::Pure(s)
    }
}

impl From<ProductPolicy> for Contender {
    fn from(p: ProductPolicy) -> Self {
        Contender::Product(p)
    }
}

impl From<MixtureOfProducts> for Contender {
    fn from(m: MixtureOfProducts) -> Self {
        Contender::Mixture(m)
    }
}

/// `P[lhs ⪰ rhs]` or `P[lhs ≻ rhs]` under a population model.
#[derive(Debug, Clone)]
pub struct WinrateQuery<'m> {
    pub lhs: Contender,
    pub rhs: Contender,
    pub model: &'m PreferenceModel,
    pub mode: Mode,
}

impl<'m> WinrateQuery<'m> {
    pub fn new(
        lhs: impl Into<Contender>,
        rhs: impl Into<Contender>,
        model: &'m PreferenceModel,
        mode: Mode,
    ) -> Self {
        Self {
            lhs: lhs.into(),
            rhs: rhs.into(),
            model,
            mode,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.model.universe();
        self.lhs.check(n)?;
        self.rhs.check(n)
    }

    /// The query with sides swapped and the relation reversed.
    pub fn reversed(&self) -> WinrateQuery<'m> {
        WinrateQuery {
            lhs: self.rhs.clone(),
            rhs: self.lhs.clone(),
            model: self.model,
            mode: self.mode.reversed(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Enumeration,
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub backend: Backend,
}

impl Estimate {
    fn exact(value: f64, backend: Backend) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            stderr: 0.0,
            n_samples: 0,
            backend,
        }
    }
}

/// Exact and sampled win-rate computations under an enumeration budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WinrateEngine {
    pub cap: u64,
}

impl Default for WinrateEngine {
    fn default() -> Self {
        Self {
            cap: DEFAULT_TERM_CAP,
        }
    }
}

impl WinrateEngine {
    pub fn with_cap(cap: u64) -> Self {
        Self { cap }
    }

    /// Fails with [`Error::TooLarge`] when `terms` exceeds the cap.
    pub fn check_terms(&self, terms: u128) -> Result<()> {
        if terms > u128::from(self.cap) {
            Err(Error::TooLarge {
                terms,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }

    /// Exact expectation by enumerating support multisets of both sides.
    pub fn exact_winrate(&self, q: &WinrateQuery<'_>) -> Result<Estimate> {
        q.validate()?;
        let n = q.model.universe();
        self.check_terms(q.lhs.nominal_terms(n).saturating_mul(q.rhs.nominal_terms(n)))?;
        let lhs = q.lhs.distribution();
        let rhs = q.rhs.distribution();
        Ok(Estimate::exact(
            expected_winrate(&lhs, &rhs, q.model, q.mode),
            Backend::Enumeration,
        ))
    }

    /// Seeded Monte Carlo estimate from `n` independent trials.
    ///
    /// Trials are split into fixed-size chunks, each with its own ChaCha
    /// stream derived from `seed`, so the result does not depend on the number
    /// of worker threads.
    pub fn mc_winrate(&self, q: &WinrateQuery<'_>, n: u64, seed: u64) -> Result<Estimate> {
        q.validate()?;
        if n == 0 {
            return invalid("Monte Carlo needs at least one sample");
        }
        let lhs = Sampler::new(&q.lhs)?;
        let rhs = Sampler::new(&q.rhs)?;
        let comps = WeightedIndex::new(q.model.component_weights())
            .map_err(|e| Error::InvalidArgument(format!("model weights: {e}")))?;
        let chunks = n.div_ceil(MC_CHUNK);
        let stats: Vec<Moments> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c);
                let len = MC_CHUNK.min(n - c * MC_CHUNK);
                let mut a = Vec::with_capacity(lhs.size());
                let mut b = Vec::with_capacity(rhs.size());
                let mut m = Moments::default();
                for _ in 0..len {
                    lhs.draw(&mut rng, &mut a);
                    rhs.draw(&mut rng, &mut b);
                    let i = comps.sample(&mut rng);
                    let v = q.model.component_winrate_iter(
                        i,
                        a.iter().map(|&y| (y, 1)),
                        b.iter().map(|&y| (y, 1)),
                        q.mode,
                    );
                    m.push(v);
                }
                m
            })
            .collect();
        let total = stats.into_iter().fold(Moments::default(), Moments::merge);
        Ok(Estimate {
            value: total.mean,
            stderr: total.stderr(),
            n_samples: n,
            backend: Backend::MonteCarlo,
        })
    }

    /// The size-`l` multiset with the largest strict win rate against `sigma`.
    ///
    /// Among values within [`WITNESS_TIE_TOLERANCE`] of the maximum, the
    /// multiset with the lexicographically smallest dense counts vector is
    /// returned; the reported value is the exact maximum.
    pub fn best_pure_opponent(
        &self,
        sigma: &Contender,
        l: usize,
        model: &PreferenceModel,
    ) -> Result<(Multiset, f64)> {
        if l == 0 {
            return invalid("opponent size must be at least 1");
        }
        let n = model.universe();
        sigma.check(n)?;
        self.check_terms(multiset_count(n, l).saturating_mul(sigma.nominal_terms(n)))?;
        let dist = sigma.distribution();
        let mut values = Vec::new();
        for_each_counts(n, l, |c| {
            let s = Multiset::from_dense(c).expect("l >= 1");
            let v = opponent_value(&s, &dist, model, Mode::Strict);
            values.push((s, v));
        });
        Ok(pick_extreme(values, true))
    }

    /// The size-`l` multiset minimizing the weak win rate of `sigma` against it.
    ///
    /// Computed directly from weak comparisons; by antisymmetry this mirrors
    /// [`Self::best_pure_opponent`].
    pub fn worst_pure_opponent_weak(
        &self,
        sigma: &Contender,
        l: usize,
        model: &PreferenceModel,
    ) -> Result<(Multiset, f64)> {
        if l == 0 {
            return invalid("opponent size must be at least 1");
        }
        let n = model.universe();
        sigma.check(n)?;
        self.check_terms(multiset_count(n, l).saturating_mul(sigma.nominal_terms(n)))?;
        let dist = sigma.distribution();
        let mut values = Vec::new();
        for_each_counts(n, l, |c| {
            let s = Multiset::from_dense(c).expect("l >= 1");
            let mut acc = CompensatedSum::new();
            for (t, p) in dist.entries() {
                acc.add(p * model.winrate(t, &s, Mode::Weak));
            }
            values.push((s, acc.value()));
        });
        Ok(pick_extreme(values, false))
    }
}

fn pick_extreme(values: Vec<(Multiset, f64)>, maximize: bool) -> (Multiset, f64) {
    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    let best = values
        .iter()
        .map(|(_, v)| *v)
        .fold(if maximize { f64::NEG_INFINITY } else { f64::INFINITY }, |acc, v| {
            if better(v, acc) {
                v
            } else {
                acc
            }
        });
    let witness = values
        .into_iter()
        .find(|(_, v)| (v - best).abs() <= WITNESS_TIE_TOLERANCE)
        .map(|(s, _)| s)
        .expect("at least one opponent");
    (witness, best)
}

/// `E_{T ~ dist}[P(s ≻ T)]` (or weak).
fn opponent_value(s: &Multiset, dist: &MultisetDistribution, model: &PreferenceModel, mode: Mode) -> f64 {
    let mut acc = CompensatedSum::new();
    for (t, p) in dist.entries() {
        acc.add(p * model.winrate(s, t, mode));
    }
    acc.value()
}

pub(crate) fn expected_winrate(
    lhs: &MultisetDistribution,
    rhs: &MultisetDistribution,
    model: &PreferenceModel,
    mode: Mode,
) -> f64 {
    let mut acc = CompensatedSum::new();
    for (s, p) in lhs.entries() {
        for (t, q) in rhs.entries() {
            acc.add(p * q * model.winrate(s, t, mode));
        }
    }
    acc.value()
}

/// `P[base^{(x)k} ⪰ y]` for a ranking population, computed as
/// `sum_i w_i (1 - q_i^k)` where `q_i` is the base mass strictly below `y`
/// in ranking `i`. Shares no code with the enumeration path.
pub fn ranking_pure_closed_form(
    base: &Policy,
    k: usize,
    y: usize,
    model: &PreferenceModel,
) -> Result<Estimate> {
    let Components::Rankings(rankings) = model.components() else {
        return invalid("closed form applies to ranking populations only");
    };
    if base.len() != model.universe() || y >= model.universe() {
        return invalid("policy or response outside the model's universe");
    }
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let mut acc = CompensatedSum::new();
    for (w, r) in rankings {
        let below: f64 = r.order()[r.position(y) + 1..]
            .iter()
            .map(|&z| base.prob(z))
            .sum();
        acc.add(w * (1.0 - below.powi(k as i32)));
    }
    Ok(Estimate::exact(acc.value(), Backend::ClosedForm))
}

const MC_CHUNK: u64 = 1 << 14;

/// Running mean and sum of squared deviations (Chan et al. merge).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        let mean = a.mean + d * b.n as f64 / n as f64;
        let m2 = a.m2 + b.m2 + d * d * (a.n as f64) * (b.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    /// `sqrt(s^2 / n)` with the unbiased variance, floored at `1/n` so a run
    /// in which every sample agreed still reports a positive error.
    fn stderr(&self) -> f64 {
        let n = self.n as f64;
        let var = if self.n > 1 { (self.m2 / (n - 1.0)).max(0.0) } else { 0.0 };
        (var / n).sqrt().max(1.0 / n)
    }
}

/// Draws the responses of one side of a query.
enum Sampler {
    Fixed(Vec<usize>),
    Product {
        table: WeightedAliasIndex<f64>,
        k: usize,
    },
    Mixture {
        pick: WeightedIndex<f64>,
        tables: Vec<WeightedAliasIndex<f64>>,
        k: usize,
    },
}

impl Sampler {
    fn new(c: &Contender) -> Result<Self> {
        let alias = |p: &Policy| {
            WeightedAliasIndex::new(p.probs().to_vec())
                .map_err(|e| Error::InvalidArgument(format!("policy weights: {e}")))
        };
        Ok(match c {
            Contender::Pure(s) => Sampler::Fixed(s.to_ids()),
            Contender::Product(p) => Sampler::Product {
                table: alias(&p.base)?,
                k: p.k,
            },
            Contender::Mixture(m) => Sampler::Mixture {
                pick: WeightedIndex::new(m.components().iter().map(|(w, _)| *w))
                    .map_err(|e| Error::InvalidArgument(format!("mixture weights: {e}")))?,
                tables: m
                    .components()
                    .iter()
                    .map(|(_, p)| alias(&p.base))
                    .collect::<Result<_>>()?,
                k: m.k(),
            },
        })
    }

    fn size(&self) -> usize {
        match self {
            Sampler::Fixed(v) => v.len(),
            Sampler::Product { k, .. } | Sampler::Mixture { k, .. } => *k,
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R, out: &mut Vec<usize>) {
        match self {
            Sampler::Fixed(v) => {
                if out.is_empty() {
                    out.extend_from_slice(v);
                }
            }
            Sampler::Product { table, k } => {
                out.clear();
                out.extend((0..*k).map(|_| table.sample(rng)));
            }
            Sampler::Mixture { pick, tables, k } => {
                let t = &tables[pick.sample(rng)];
                out.clear();
                out.extend((0..*k).map(|_| t.sample(rng)));
            }
        }
    }
}
