//! Index sets over a small domain and lexicographic combination walking.

use crate::error::{Error, Result};

/// Bit-vector set over `[0, domain)` with cached cardinality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    words: Vec<u64>,
    domain: u64,
    ones: u64,
}

impl IndexSet {
    pub fn empty(domain: u64) -> Self {
        IndexSet {
            words: vec![0; (domain as usize).div_ceil(64)],
            domain,
            ones: 0,
        }
    }

    pub fn from_indices(domain: u64, indices: &[u64]) -> Result<Self> {
        let mut set = IndexSet::empty(domain);
        for &i in indices {
            set.insert(i)?;
        }
        Ok(set)
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    /// Cardinality.
    pub fn len(&self) -> u64 {
        self.ones
    }

    pub fn is_empty(&self) -> bool {
        self.ones == 0
    }

    pub fn insert(&mut self, index: u64) -> Result<()> {
        if index >= self.domain {
            return Err(Error::IndexOutOfRange {
                what: "set element",
                index,
                limit: self.domain,
            });
        }
        let word = &mut self.words[(index / 64) as usize];
        let mask = 1u64 << (index % 64);
        if *word & mask == 0 {
            *word |= mask;
            self.ones += 1;
        }
        Ok(())
    }

    pub fn contains(&self, index: u64) -> bool {
        index < self.domain && self.words[(index / 64) as usize] >> (index % 64) & 1 == 1
    }

    /// Member indices in ascending order.
    pub fn indices(&self) -> Vec<u64> {
        self.iter().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let bit = word.trailing_zeros() as u64;
                word &= word - 1;
                Some(w as u64 * 64 + bit)
            })
        })
    }
}

/// Advance `indices` (a strictly increasing size-k selection from `[0, n)`)
/// to the next combination in lexicographic order. Returns `false` once the
/// last combination has been passed.
pub fn next_combination(indices: &mut [u64], n: u64) -> bool {
    let k = indices.len();
    if k == 0 {
        return false; // single empty combination, no successor
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if indices[i] < n - (k - i) as u64 {
            indices[i] += 1;
            for j in i + 1..k {
                indices[j] = indices[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// First combination (0, 1, .., k-1); `None` if `k > n`.
pub fn first_combination(n: u64, k: u64) -> Option<Vec<u64>> {
    if k > n {
        return None;
    }
    Some((0..k).collect())
}

/// Binomial coefficient, saturating at `u128::MAX` (used for work estimates,
/// where saturation simply trips the guard).
pub fn binomial_saturating(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        let num = (n - i) as u128;
        acc = match acc.checked_mul(num) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}
