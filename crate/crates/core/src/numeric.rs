//! Small numerical helpers shared by the engines.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Number of size-`k` multisets over `n` items, C(n+k-1, k), saturating at `u128::MAX`.
pub fn multiset_count(n: usize, k: usize) -> u128 {
    if n == 0 {
        return if k == 0 { 1 } else { 0 };
    }
    // C(n-1+k, k) computed as a running product that stays integral.
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        let num = (n as u128 - 1) + i;
        acc = match acc.checked_mul(num) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    acc
}

/// Multinomial coefficient k! / prod(c_i!) as a float.
///
/// Each intermediate value is a binomial coefficient, so the result is exact
/// while it stays below 2^53.
pub fn multinomial(counts: &[u32]) -> f64 {
    let mut total = 0u32;
    let mut coeff = 1.0f64;
    for &c in counts {
        for j in 1..=c {
            total += 1;
            coeff = coeff * f64::from(total) / f64::from(j);
        }
    }
    coeff
}

/// Total-variation distance between two equal-length probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
