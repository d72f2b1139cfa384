//! Exact distributions over multisets induced by product policies.

use std::collections::BTreeMap;

use crate::numeric::{multinomial, CompensatedSum};
use crate::types::{MixtureOfProducts, Multiset, ProductPolicy};

/// Calls `f` with every counts vector of total `k` over `n` slots, in
/// increasing lexicographic order.
pub fn for_each_counts(n: usize, k: usize, mut f: impl FnMut(&[u32])) {
    if n == 0 {
        return;
    }
    let mut counts = vec![0u32; n];
    counts[n - 1] = k as u32;
    loop {
        f(&counts);
        // Next vector in lexicographic order with the same total: find the
        // rightmost position j < n-1 that can grow, i.e. some mass sits right of j.
        let tail: u32 = counts[n - 1];
        let mut j = n - 1;
        // Find rightmost j < n-1 such that sum(counts[j+1..]) > 0.
        let mut suffix = tail;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            if suffix > 0 {
                break;
            }
            suffix += counts[j];
        }
        // Move one unit to position j and push the rest of the suffix to the end.
        counts[j] += 1;
        let rest = suffix - 1;
        for c in counts.iter_mut().skip(j + 1) {
            *c = 0;
        }
        counts[n - 1] = rest;
    }
}

/// All size-`k` multisets over `n` responses in increasing lexicographic order
/// of their dense counts vectors.
pub fn all_multisets(n: usize, k: usize) -> Vec<Multiset> {
    let mut out = Vec::new();
    for_each_counts(n, k, |c| out.push(Multiset::from_dense(c).expect("k >= 1")));
    out
}

/// A finite distribution over multisets, stored as `(multiset, probability)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultisetDistribution {
    entries: Vec<(Multiset, f64)>,
}

impl MultisetDistribution {
    pub fn point(s: Multiset) -> Self {
        Self {
            entries: vec![(s, 1.0)],
        }
    }

    /// Law of the multiset of `k` i.i.d. draws; multisets with zero probability are omitted.
    pub fn of_product(p: &ProductPolicy) -> Self {
        let support = p.base.support();
        let probs: Vec<f64> = support.iter().map(|&y| p.base.prob(y)).collect();
        let mut entries = Vec::new();
        for_each_counts(support.len(), p.k, |c| {
            let mut mass = multinomial(c);
            for (&ci, &pi) in c.iter().zip(&probs) {
                if ci > 0 {
                    mass *= pi.powi(ci as i32);
                }
            }
            let ids: Vec<usize> = c
                .iter()
                .zip(&support)
                .flat_map(|(&ci, &y)| std::iter::repeat_n(y, ci as usize))
                .collect();
            entries.push((Multiset::from_ids(&ids).expect("k >= 1"), mass));
        });
        Self { entries }
    }

    /// Linear expansion of a mixture, merging equal multisets.
    pub fn of_mixture(m: &MixtureOfProducts) -> Self {
        let mut acc: BTreeMap<Multiset, CompensatedSum> = BTreeMap::new();
        for (w, comp) in m.components() {
            for (s, p) in Self::of_product(comp).entries {
                acc.entry(s).or_default().add(w * p);
            }
        }
        Self {
            entries: acc.into_iter().map(|(s, p)| (s, p.value())).collect(),
        }
    }

    pub fn entries(&self) -> &[(Multiset, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        crate::numeric::compensated_sum(self.entries.iter().map(|(_, p)| *p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::multiset_count;
    use crate::types::Policy;

    #[test]
    fn counts_enumeration_is_lexicographic_and_complete() {
        let mut seen = Vec::new();
        for_each_counts(3, 2, |c| seen.push(c.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![0, 0, 2],
                vec![0, 1, 1],
                vec![0, 2, 0],
                vec![1, 0, 1],
                vec![1, 1, 0],
                vec![2, 0, 0],
            ]
        );
        for n in 1..6 {
            for k in 1..5 {
                let mut count = 0u128;
                let mut prev: Option<Vec<u32>> = None;
                for_each_counts(n, k, |c| {
                    assert_eq!(c.iter().sum::<u32>() as usize, k);
                    if let Some(p) = &prev {
                        assert!(p.as_slice() < c);
                    }
                    prev = Some(c.to_vec());
                    count += 1;
                });
                assert_eq!(count, multiset_count(n, k));
            }
        }
    }

    #[test]
    fn product_distribution_matches_ordered_enumeration() {
        // Oracle: enumerate ordered k-tuples, |Y|^k of them.
        let base = Policy::new(vec![0.2, 0.5, 0.3]).unwrap();
        let k = 3;
        let dist = MultisetDistribution::of_product(&ProductPolicy::new(base.clone(), k).unwrap());
        assert!((dist.total_mass() - 1.0).abs() < 1e-15);
        let mut oracle: BTreeMap<Multiset, f64> = BTreeMap::new();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let s = Multiset::from_ids(&[a, b, c]).unwrap();
                    *oracle.entry(s).or_default() += base.prob(a) * base.prob(b) * base.prob(c);
                }
            }
        }
        assert_eq!(dist.len(), oracle.len());
        for (s, p) in dist.entries() {
            assert!((p - oracle[s]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_probability_responses_are_skipped() {
        let base = Policy::new(vec![0.0, 1.0, 0.0]).unwrap();
        let dist = MultisetDistribution::of_product(&ProductPolicy::new(base, 4).unwrap());
        assert_eq!(dist.len(), 1);
        assert_eq!(dist.entries()[0].0, Multiset::from_ids(&[1, 1, 1, 1]).unwrap());
    }
}
