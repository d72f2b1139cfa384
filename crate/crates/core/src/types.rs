//! Responses, multisets of responses and single-output / product policies.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::compensated_sum;

/// Tolerance on the total mass of a policy or weight vector.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Looser tolerance accepted from text documents before a single exact rescale.
pub const DOCUMENT_MASS_TOLERANCE: f64 = 1e-9;

/// A response from the finite universe, identified by its index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Response {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Response {
    pub fn new(id: usize) -> Self {
        Self { id, label: None }
    }

    pub fn labeled(id: usize, label: impl Into<String>) -> Self {
        Self {
            id,
            label: Some(label.into()),
        }
    }
}

/// A nonempty multiset of response ids.
///
/// Stored as `(id, multiplicity)` pairs sorted by id with every multiplicity at
/// least one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset {
    counts: Vec<(usize, u32)>,
    size: u32,
}

impl Multiset {
    /// Builds a multiset from a list of ids, repeats allowed.
    pub fn from_ids(ids: &[usize]) -> Result<Self> {
        if ids.is_empty() {
            return invalid("multiset must contain at least one response");
        }
        let mut sorted = ids.to_vec();
        sorted.sort_unstable();
        let mut counts: Vec<(usize, u32)> = Vec::new();
        for id in sorted {
            match counts.last_mut() {
                Some((last, c)) if *last == id => *c += 1,
                _ => counts.push((id, 1)),
            }
        }
        Ok(Self {
            counts,
            size: ids.len() as u32,
        })
    }

    /// Builds a multiset from a dense counts vector indexed by response id.
    pub fn from_dense(dense: &[u32]) -> Result<Self> {
        let counts: Vec<(usize, u32)> = dense
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, c))
            .collect();
        let size = counts.iter().map(|(_, c)| c).sum::<u32>();
        if size == 0 {
            return invalid("multiset must contain at least one response");
        }
        Ok(Self { counts, size })
    }

    pub fn singleton(id: usize) -> Self {
        Self {
            counts: vec![(id, 1)],
            size: 1,
        }
    }

    /// Total multiplicity.
    pub fn size(&self) -> usize {
        self.size as usize
    }

    /// `(id, multiplicity)` pairs in increasing id order.
    pub fn counts(&self) -> &[(usize, u32)] {
        &self.counts
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + Clone + '_ {
        self.counts.iter().copied()
    }

    pub fn multiplicity(&self, id: usize) -> u32 {
        self.counts
            .binary_search_by_key(&id, |&(i, _)| i)
            .map(|pos| self.counts[pos].1)
            .unwrap_or(0)
    }

    pub fn contains(&self, id: usize) -> bool {
        self.multiplicity(id) > 0
    }

    /// Largest id present; used to validate against a universe size.
    pub fn max_id(&self) -> usize {
        self.counts.last().map(|&(i, _)| i).unwrap_or(0)
    }

    /// Multiset union `self + other` (multiplicities add).
    pub fn union(&self, other: &Multiset) -> Multiset {
        let mut out = Vec::with_capacity(self.counts.len() + other.counts.len());
        let (mut a, mut b) = (self.counts.iter().peekable(), other.counts.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(ia, ca)), Some(&&(ib, cb))) => match ia.cmp(&ib) {
                    Ordering::Less => {
                        out.push((ia, ca));
                        a.next();
                    }
                    Ordering::Greater => {
                        out.push((ib, cb));
                        b.next();
                    }
                    Ordering::Equal => {
                        out.push((ia, ca + cb));
                        a.next();
                        b.next();
                    }
                },
                (Some(&&x), None) => {
                    out.push(x);
                    a.next();
                }
                (None, Some(&&x)) => {
                    out.push(x);
                    b.next();
                }
                (None, None) => break,
            }
        }
        Multiset {
            counts: out,
            size: self.size + other.size,
        }
    }

    /// Dense counts vector over a universe of `n` responses.
    pub fn dense(&self, n: usize) -> Vec<u32> {
        let mut v = vec![0; n];
        for &(i, c) in &self.counts {
            v[i] = c;
        }
        v
    }

    /// Ids with multiplicity, in increasing order.
    pub fn to_ids(&self) -> Vec<usize> {
        self.counts
            .iter()
            .flat_map(|&(i, c)| std::iter::repeat_n(i, c as usize))
            .collect()
    }

    /// Applies a relabeling `id -> perm[id]`.
    pub fn relabel(&self, perm: &[usize]) -> Multiset {
        let ids: Vec<usize> = self.to_ids().into_iter().map(|i| perm[i]).collect();
        Multiset::from_ids(&ids).expect("relabeling preserves size")
    }
}

impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, id) in self.to_ids().iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for Multiset {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_ids().serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Multiset {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let ids = Vec::<usize>::deserialize(de)?;
        Multiset::from_ids(&ids).map_err(serde::de::Error::custom)
    }
}

/// A distribution over the response universe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Policy {
    probs: Vec<f64>,
}

impl Policy {
    /// Validates a probability vector whose mass is 1 within [`MASS_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::check_entries(&probs)?;
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return invalid(format!("policy mass is {total}, expected 1"));
        }
        Ok(Self { probs })
    }

    /// Accepts mass within [`DOCUMENT_MASS_TOLERANCE`] and rescales once.
    pub fn from_document(probs: Vec<f64>) -> Result<Self> {
        Self::check_entries(&probs)?;
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > DOCUMENT_MASS_TOLERANCE {
            return invalid(format!("policy mass is {total}, expected 1"));
        }
        Ok(Self {
            probs: probs.into_iter().map(|p| p / total).collect(),
        })
    }

    /// Normalizes an arbitrary nonnegative vector with positive mass.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        Self::check_entries(&weights)?;
        let total = compensated_sum(weights.iter().copied());
        if !(total > 0.0) {
            return invalid("cannot normalize a vector with zero mass");
        }
        Ok(Self {
            probs: weights.into_iter().map(|p| p / total).collect(),
        })
    }

    fn check_entries(probs: &[f64]) -> Result<()> {
        if probs.is_empty() {
            return invalid("policy over an empty response set");
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return invalid(format!("policy entry {i} is {p}"));
        }
        Ok(())
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform policy over zero responses");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, y: usize) -> Self {
        assert!(y < n, "response {y} outside a universe of {n}");
        let mut probs = vec![0.0; n];
        probs[y] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, y: usize) -> f64 {
        self.probs[y]
    }

    /// Ids with positive probability.
    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    pub fn total_variation(&self, other: &Policy) -> f64 {
        crate::numeric::total_variation(&self.probs, &other.probs)
    }

    /// `<self, v>`.
    pub fn dot(&self, v: &[f64]) -> f64 {
        compensated_sum(self.probs.iter().zip(v).map(|(p, g)| p * g))
    }

    pub fn relabel(&self, perm: &[usize]) -> Policy {
        let mut probs = vec![0.0; self.probs.len()];
        for (i, &p) in self.probs.iter().enumerate() {
            probs[perm[i]] = p;
        }
        Policy { probs }
    }
}

impl<'de> Deserialize<'de> for Policy {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Doc {
            Bare(Vec<f64>),
            Wrapped { probs: Vec<f64> },
        }
        let probs = match Doc::deserialize(de)? {
            Doc::Bare(p) | Doc::Wrapped { probs: p } => p,
        };
        Policy::from_document(probs).map_err(serde::de::Error::custom)
    }
}

/// `k` i.i.d. draws from a single-output policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPolicy {
    pub base: Policy,
    pub k: usize,
}

impl ProductPolicy {
    pub fn new(base: Policy, k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("product policy needs k >= 1");
        }
        Ok(Self { base, k })
    }

    pub fn universe(&self) -> usize {
        self.base.len()
    }
}

/// A weighted mixture of product policies sharing the same `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureOfProducts {
    components: Vec<(f64, ProductPolicy)>,
}

impl MixtureOfProducts {
    pub fn new(components: Vec<(f64, ProductPolicy)>) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return invalid("mixture needs at least one component");
        };
        let (k, n) = (first.k, first.universe());
        if components.iter().any(|(_, c)| c.k != k || c.universe() != n) {
            return invalid("mixture components must share k and the response universe");
        }
        if components.iter().any(|(w, _)| !w.is_finite() || *w < 0.0) {
            return invalid("mixture weights must be finite and nonnegative");
        }
        let total = compensated_sum(components.iter().map(|(w, _)| *w));
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return invalid(format!("mixture weights sum to {total}, expected 1"));
        }
        Ok(Self { components })
    }

    /// Uniform mixture over `(pi_t)^{(x)k}` for the given iterates.
    pub fn uniform(iterates: &[Policy], k: usize) -> Result<Self> {
        if iterates.is_empty() {
            return invalid("mixture needs at least one iterate");
        }
        let w = 1.0 / iterates.len() as f64;
        let components = iterates
            .iter()
            .map(|p| Ok((w, ProductPolicy::new(p.clone(), k)?)))
            .collect::<Result<Vec<_>>>()?;
        // Uniform weights may miss 1 by a few ulps for large T; skip the strict check.
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(f64, ProductPolicy)] {
        &self.components
    }

    pub fn k(&self) -> usize {
        self.components[0].1.k
    }

    pub fn universe(&self) -> usize {
        self.components[0].1.universe()
    }
}
