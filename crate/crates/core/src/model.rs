//! Population preference models: mixtures of Plackett–Luce components and
//! weighted populations of total rankings.
//!
//! Both families compare *multisets* of responses. A Plackett–Luce component
//! prefers `S` over `S'` with probability proportional to the exponentiated
//! reward mass of each side, so weak and strict preference coincide. A ranking
//! compares the most preferred element of each side; when both sides share
//! that element the comparison is a tie (weak = 1, strict = 0).

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::compensated_sum;
use crate::types::{Multiset, Response, DOCUMENT_MASS_TOLERANCE, MASS_TOLERANCE};

/// Which preference relation a win rate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `S ⪰ S'`: ties count as wins.
    Weak,
    /// `S ≻ S'`: ties count as losses.
    Strict,
}

impl Mode {
    pub fn reversed(self) -> Mode {
        match self {
            Mode::Weak => Mode::Strict,
            Mode::Strict => Mode::Weak,
        }
    }
}

/// One Plackett–Luce reward function.
#[derive(Debug, Clone, PartialEq)]
pub struct PlComponent {
    rewards: Vec<f64>,
    /// `exp(rewards[y] - max_reward)`, all in `(0, 1]` or underflowed to 0.
    shifted: Vec<f64>,
}

impl PlComponent {
    pub fn new(rewards: Vec<f64>) -> Result<Self> {
        if rewards.is_empty() {
            return invalid("reward vector is empty");
        }
        if let Some(r) = rewards.iter().find(|r| !r.is_finite()) {
            return invalid(format!("reward {r} is not finite"));
        }
        let max = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shifted = rewards.iter().map(|r| (r - max).exp()).collect();
        Ok(Self { rewards, shifted })
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Probability that `lhs` is preferred to `rhs`, multiplicities counted.
    pub(crate) fn winrate_iter<A, B>(&self, lhs: A, rhs: B) -> f64
    where
        A: Iterator<Item = (usize, u32)> + Clone,
        B: Iterator<Item = (usize, u32)> + Clone,
    {
        let mass = |it: A| it.map(|(y, c)| f64::from(c) * self.shifted[y]).sum::<f64>();
        let a = mass(lhs.clone());
        let b = rhs.clone().map(|(y, c)| f64::from(c) * self.shifted[y]).sum::<f64>();
        // Normal path: globally shifted weights have not underflowed.
        if a > 1e-280 && b > 1e-280 {
            return a / (a + b);
        }
        // Re-shift by the largest reward actually present.
        let local = lhs
            .clone()
            .chain(rhs.clone())
            .map(|(y, _)| self.rewards[y])
            .fold(f64::NEG_INFINITY, f64::max);
        let a: f64 = lhs.map(|(y, c)| f64::from(c) * (self.rewards[y] - local).exp()).sum();
        let b: f64 = rhs.map(|(y, c)| f64::from(c) * (self.rewards[y] - local).exp()).sum();
        a / (a + b)
    }

    /// Plackett–Luce preference of `lhs` over `rhs`.
    pub fn winrate(&self, lhs: &Multiset, rhs: &Multiset) -> f64 {
        self.winrate_iter(lhs.iter(), rhs.iter())
    }
}

/// A total ranking; `order[0]` is the most preferred response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingComponent {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl RankingComponent {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n == 0 {
            return invalid("ranking is empty");
        }
        let mut position = vec![usize::MAX; n];
        for (pos, &y) in order.iter().enumerate() {
            if y >= n || position[y] != usize::MAX {
                return invalid(format!("ranking {order:?} is not a permutation of 0..{n}"));
            }
            position[y] = pos;
        }
        Ok(Self { order, position })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Rank of `y`, 0 = most preferred.
    pub fn position(&self, y: usize) -> usize {
        self.position[y]
    }

    fn top_iter(&self, it: impl Iterator<Item = (usize, u32)>) -> usize {
        it.map(|(y, _)| self.position[y])
            .min()
            .expect("multisets are nonempty")
    }

    pub(crate) fn compare_iter<A, B>(&self, lhs: A, rhs: B) -> (bool, bool)
    where
        A: Iterator<Item = (usize, u32)>,
        B: Iterator<Item = (usize, u32)>,
    {
        let (a, b) = (self.top_iter(lhs), self.top_iter(rhs));
        (a <= b, a < b)
    }

    /// Most preferred element of `s`.
    pub fn top(&self, s: &Multiset) -> usize {
        self.order[self.top_iter(s.iter())]
    }

    /// `(1[S ⪰ S'], 1[S ≻ S'])` by comparing maximal elements.
    pub fn compare(&self, lhs: &Multiset, rhs: &Multiset) -> (bool, bool) {
        self.compare_iter(lhs.iter(), rhs.iter())
    }
}

/// Components of a preference model, all of one family.
#[derive(Debug, Clone, PartialEq)]
pub enum Components {
    PlackettLuce(Vec<(f64, PlComponent)>),
    Rankings(Vec<(f64, RankingComponent)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "pl")]
    PlackettLuce,
    #[serde(rename = "ranking")]
    Rankings,
}

/// A population preference over a finite response universe.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceModel {
    labels: Vec<String>,
    components: Components,
}

impl PreferenceModel {
    pub fn plackett_luce(labels: Vec<String>, components: Vec<(f64, PlComponent)>) -> Result<Self> {
        let n = labels.len();
        if components.iter().any(|(_, c)| c.rewards.len() != n) {
            return invalid(format!("every reward vector must have {n} entries"));
        }
        let weights = check_weights(components.iter().map(|(w, _)| *w).collect(), MASS_TOLERANCE)?;
        let components = weights.into_iter().zip(components).map(|(w, (_, c))| (w, c)).collect();
        Self::assemble(labels, Components::PlackettLuce(components))
    }

    pub fn rankings(labels: Vec<String>, components: Vec<(f64, RankingComponent)>) -> Result<Self> {
        let n = labels.len();
        if components.iter().any(|(_, c)| c.order.len() != n) {
            return invalid(format!("every ranking must order {n} responses"));
        }
        let weights = check_weights(components.iter().map(|(w, _)| *w).collect(), MASS_TOLERANCE)?;
        let components = weights.into_iter().zip(components).map(|(w, (_, c))| (w, c)).collect();
        Self::assemble(labels, Components::Rankings(components))
    }

    fn assemble(labels: Vec<String>, components: Components) -> Result<Self> {
        if labels.is_empty() {
            return invalid("response universe is empty");
        }
        let mut seen = HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return invalid(format!("duplicate response label {dup:?}"));
        }
        let empty = match &components {
            Components::PlackettLuce(c) => c.is_empty(),
            Components::Rankings(c) => c.is_empty(),
        };
        if empty {
            return invalid("model has no components");
        }
        Ok(Self { labels, components })
    }

    /// Default labels `y1..yn`.
    pub fn default_labels(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("y{i}")).collect()
    }

    pub fn kind(&self) -> ModelKind {
        match self.components {
            Components::PlackettLuce(_) => ModelKind::PlackettLuce,
            Components::Rankings(_) => ModelKind::Rankings,
        }
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        match &self.components {
            Components::PlackettLuce(c) => c.len(),
            Components::Rankings(c) => c.len(),
        }
    }

    pub fn component_weights(&self) -> Vec<f64> {
        match &self.components {
            Components::PlackettLuce(c) => c.iter().map(|(w, _)| *w).collect(),
            Components::Rankings(c) => c.iter().map(|(w, _)| *w).collect(),
        }
    }

    /// Number of responses `|Y|`.
    pub fn universe(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn response(&self, id: usize) -> Response {
        Response::labeled(id, self.labels[id].clone())
    }

    pub fn label_of(&self, s: &Multiset) -> String {
        let names: Vec<&str> = s.to_ids().iter().map(|&i| self.labels[i].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }

    /// Rejects multisets that mention ids outside the universe.
    pub fn check_multiset(&self, s: &Multiset) -> Result<()> {
        if s.max_id() >= self.universe() {
            return invalid(format!(
                "multiset {s} mentions response {} but the universe has {}",
                s.max_id(),
                self.universe()
            ));
        }
        Ok(())
    }

    pub(crate) fn component_winrate_iter<A, B>(&self, idx: usize, lhs: A, rhs: B, mode: Mode) -> f64
    where
        A: Iterator<Item = (usize, u32)> + Clone,
        B: Iterator<Item = (usize, u32)> + Clone,
    {
        match &self.components {
            Components::PlackettLuce(c) => c[idx].1.winrate_iter(lhs, rhs),
            Components::Rankings(c) => {
                let (weak, strict) = c[idx].1.compare_iter(lhs, rhs);
                let hit = match mode {
                    Mode::Weak => weak,
                    Mode::Strict => strict,
                };
                if hit {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub(crate) fn winrate_iter<A, B>(&self, lhs: A, rhs: B, mode: Mode) -> f64
    where
        A: Iterator<Item = (usize, u32)> + Clone,
        B: Iterator<Item = (usize, u32)> + Clone,
    {
        match &self.components {
            Components::PlackettLuce(c) => compensated_sum(
                c.iter()
                    .map(|(w, pl)| w * pl.winrate_iter(lhs.clone(), rhs.clone())),
            ),
            Components::Rankings(c) => {
                let mut acc = 0.0;
                for (w, r) in c {
                    let (weak, strict) = r.compare_iter(lhs.clone(), rhs.clone());
                    let hit = match mode {
                        Mode::Weak => weak,
                        Mode::Strict => strict,
                    };
                    if hit {
                        acc += w;
                    }
                }
                acc
            }
        }
    }

    /// Population win rate of `lhs` over `rhs` under the given relation.
    pub fn winrate(&self, lhs: &Multiset, rhs: &Multiset, mode: Mode) -> f64 {
        self.winrate_iter(lhs.iter(), rhs.iter(), mode)
    }

    /// The same population with response `y` renamed to `perm[y]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<PreferenceModel> {
        let n = self.universe();
        let check = RankingComponent::new(perm.to_vec())?;
        debug_assert_eq!(check.order.len(), n);
        let mut labels = vec![String::new(); n];
        for (y, l) in self.labels.iter().enumerate() {
            labels[perm[y]] = l.clone();
        }
        let components = match &self.components {
            Components::PlackettLuce(c) => Components::PlackettLuce(
                c.iter()
                    .map(|(w, pl)| {
                        let mut r = vec![0.0; n];
                        for (y, &v) in pl.rewards.iter().enumerate() {
                            r[perm[y]] = v;
                        }
                        Ok((*w, PlComponent::new(r)?))
                    })
                    .collect::<Result<_>>()?,
            ),
            Components::Rankings(c) => Components::Rankings(
                c.iter()
                    .map(|(w, rk)| {
                        Ok((*w, RankingComponent::new(rk.order.iter().map(|&y| perm[y]).collect())?))
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Self { labels, components })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|source| Error::Parse {
            what: "preference model".into(),
            source,
        })?;
        doc.into_model()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_json_str(&text)
    }

    pub fn to_document(&self) -> ModelDocument {
        let components = match &self.components {
            Components::PlackettLuce(c) => c
                .iter()
                .map(|(w, pl)| ComponentDocument::Pl {
                    weight: *w,
                    rewards: pl.rewards.clone(),
                })
                .collect(),
            Components::Rankings(c) => c
                .iter()
                .map(|(w, r)| ComponentDocument::Ranking {
                    weight: *w,
                    order: r.order.iter().map(|&y| OrderEntry::Id(y)).collect(),
                })
                .collect(),
        };
        ModelDocument {
            responses: self.labels.clone(),
            kind: self.kind(),
            components,
        }
    }
}

/// Checks weights are nonnegative and sum to 1. Within `tolerance` the
/// weights are rescaled once by their exact sum.
fn check_weights(weights: Vec<f64>, tolerance: f64) -> Result<Vec<f64>> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return invalid(format!("component weight {w} is not a finite nonnegative number"));
    }
    let total = compensated_sum(weights.iter().copied());
    if (total - 1.0).abs() > tolerance {
        return invalid(format!("component weights sum to {total}, expected 1"));
    }
    if total == 1.0 {
        return Ok(weights);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// JSON form of a preference model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub responses: Vec<String>,
    pub kind: ModelKind,
    pub components: Vec<ComponentDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComponentDocument {
    Pl { weight: f64, rewards: Vec<f64> },
    Ranking { weight: f64, order: Vec<OrderEntry> },
}

/// A ranking entry may name a response by id or by label.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderEntry {
    Id(usize),
    Label(String),
}

impl ModelDocument {
    pub fn into_model(self) -> Result<PreferenceModel> {
        let weights = check_weights(
            self.components
                .iter()
                .map(|c| match c {
                    ComponentDocument::Pl { weight, .. } | ComponentDocument::Ranking { weight, .. } => *weight,
                })
                .collect(),
            DOCUMENT_MASS_TOLERANCE,
        )?;
        match self.kind {
            ModelKind::PlackettLuce => {
                let comps = self
                    .components
                    .into_iter()
                    .zip(weights)
                    .map(|(c, w)| match c {
                        ComponentDocument::Pl { rewards, .. } => Ok((w, PlComponent::new(rewards)?)),
                        ComponentDocument::Ranking { .. } => {
                            invalid("ranking component inside a \"pl\" model")
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                PreferenceModel::plackett_luce(self.responses, comps)
            }
            ModelKind::Rankings => {
                let labels = self.responses;
                let comps = self
                    .components
                    .into_iter()
                    .zip(weights)
                    .map(|(c, w)| match c {
                        ComponentDocument::Ranking { order, .. } => {
                            let ids = order
                                .into_iter()
                                .map(|e| match e {
                                    OrderEntry::Id(i) => Ok(i),
                                    OrderEntry::Label(l) => labels
                                        .iter()
                                        .position(|x| *x == l)
                                        .ok_or_else(|| {
                                            Error::InvalidArgument(format!("unknown response label {l:?}"))
                                        }),
                                })
                                .collect::<Result<Vec<_>>>()?;
                            Ok((w, RankingComponent::new(ids)?))
                        }
                        ComponentDocument::Pl { .. } => invalid("reward component inside a \"ranking\" model"),
                    })
                    .collect::<Result<Vec<_>>>()?;
                PreferenceModel::rankings(labels, comps)
            }
        }
    }
}
