//! Seed-efficient table generation from a combinatorial design.
//!
//! A design is a family of l-element subsets of a t-bit seed's positions
//! with pairwise intersections of size at most r. Output bit i is the parity
//! of the seed restricted to set i, so each bit reads exactly l seed
//! positions. Sweeping all 2^t seeds and keeping the first whose table
//! passes the balance check at slack 1.03·Δ turns a positive success rate
//! into a deterministic construction whose randomness cost is t bits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{
    is_balanced_exact_scaled, sampled_balance_estimate, wilson_interval, ThresholdScale,
};
use crate::bits::Bits;
use crate::circuit::{build_balance_circuit, circuit_accepts};
use crate::error::{Error, Result};
use crate::guard::Guards;
use crate::params::Params;
use crate::rng::nth_output;
use crate::sets::{binomial_saturating, first_combination, next_combination};
use crate::table::Table;

/// A family of l-subsets of [t] with pairwise intersections of size ≤ r.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NwDesign {
    /// Seed length t.
    pub seed_len: u32,
    /// Set size l.
    pub set_size: u32,
    /// Pairwise intersection bound r.
    pub intersection_bound: u32,
    /// Each set lists its positions in increasing order.
    pub sets: Vec<Vec<u32>>,
}

impl NwDesign {
    /// Check the declared invariants: set sizes, sortedness, position range,
    /// and all pairwise intersection sizes.
    pub fn verify(&self) -> Result<()> {
        if self.seed_len > 63 {
            return Err(Error::Domain("seed length above 63 bits".into()));
        }
        let masks = self.masks()?;
        for (i, a) in masks.iter().enumerate() {
            for b in &masks[..i] {
                if (a & b).count_ones() > self.intersection_bound {
                    return Err(Error::Domain(format!(
                        "sets intersect in more than {} positions",
                        self.intersection_bound
                    )));
                }
            }
        }
        Ok(())
    }

    fn masks(&self) -> Result<Vec<u64>> {
        self.sets
            .iter()
            .map(|set| {
                if set.len() != self.set_size as usize {
                    return Err(Error::Domain("set size mismatch".into()));
                }
                let mut mask = 0u64;
                for &pos in set {
                    if pos >= self.seed_len {
                        return Err(Error::IndexOutOfRange {
                            what: "design position",
                            index: pos as u64,
                            limit: self.seed_len as u64,
                        });
                    }
                    if mask >> pos & 1 == 1 {
                        return Err(Error::Domain("repeated position in set".into()));
                    }
                    mask |= 1 << pos;
                }
                Ok(mask)
            })
            .collect()
    }
}

/// Greedily scan l-subsets of [t] in lexicographic order, keeping each set
/// that intersects all kept sets in at most r positions, until `count` sets
/// are found. The scan cost is guarded by C(t, l).
pub fn greedy_design(t: u32, l: u32, r: u32, count: u64, guards: &Guards) -> Result<NwDesign> {
    if t > 63 {
        return Err(Error::Domain("seed length above 63 bits".into()));
    }
    if l > t {
        return Err(Error::Domain("set size exceeds seed length".into()));
    }
    if r > l {
        return Err(Error::Domain("intersection bound exceeds set size".into()));
    }
    guards.admit("greedy_design", binomial_saturating(t as u64, l as u64))?;
    let mut sets: Vec<Vec<u32>> = Vec::new();
    let mut masks: Vec<u64> = Vec::new();
    if count > 0 {
        if let Some(mut combo) = first_combination(t as u64, l as u64) {
            loop {
                let mask = combo.iter().fold(0u64, |acc, &p| acc | 1 << p);
                if masks.iter().all(|kept| (kept & mask).count_ones() <= r) {
                    masks.push(mask);
                    sets.push(combo.iter().map(|&p| p as u32).collect());
                    if sets.len() as u64 == count {
                        break;
                    }
                }
                if !next_combination(&mut combo, t as u64) {
                    break;
                }
            }
        }
    }
    if (sets.len() as u64) < count {
        return Err(Error::DesignExhausted {
            needed: count,
            achieved: sets.len() as u64,
        });
    }
    Ok(NwDesign {
        seed_len: t,
        set_size: l,
        intersection_bound: r,
        sets,
    })
}

/// Seed value → t-bit string, most significant bit first.
pub fn seed_to_bits(seed: u64, t: u32) -> Bits {
    let mut bits = Bits::with_capacity(t as usize);
    bits.push_uint_msb(seed, t);
    bits
}

/// Output bit i: parity of the seed bits at set i's positions.
pub fn nw_bit(design: &NwDesign, seed: &Bits, i: usize) -> Result<bool> {
    nw_bit_counting(design, seed, i).map(|(bit, _)| bit)
}

/// Same as [`nw_bit`] but also reports how many seed positions were read;
/// the count is always exactly the design's set size.
pub fn nw_bit_counting(design: &NwDesign, seed: &Bits, i: usize) -> Result<(bool, u64)> {
    if seed.len() != design.seed_len as usize {
        return Err(Error::WidthMismatch {
            got: seed.len(),
            expected: design.seed_len as usize,
        });
    }
    let set = design.sets.get(i).ok_or(Error::IndexOutOfRange {
        what: "design set",
        index: i as u64,
        limit: design.sets.len() as u64,
    })?;
    let mut parity = false;
    let mut reads = 0u64;
    for &pos in set {
        if pos as usize >= seed.len() {
            return Err(Error::IndexOutOfRange {
                what: "design position",
                index: pos as u64,
                limit: seed.len() as u64,
            });
        }
        parity ^= seed.get(pos as usize);
        reads += 1;
    }
    Ok((parity, reads))
}

/// All output bits for one seed.
pub fn nw_gen(design: &NwDesign, seed: &Bits) -> Result<Bits> {
    (0..design.sets.len()).map(|i| nw_bit(design, seed, i)).collect()
}

/// How a candidate table is judged during the seed sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Exact checker at slack 1.03·Δ.
    Direct,
    /// The constant-depth circuit (accepts only tables balanced at 1.03·Δ).
    Circuit,
}

#[derive(Debug, Clone)]
pub struct DerandOutcome {
    pub table: Table,
    /// Smallest seed value whose table passes.
    pub seed: u64,
    pub design: NwDesign,
}

fn table_from_seed(params: &Params, design: &NwDesign, seed: u64) -> Result<Table> {
    let bits = nw_gen(design, &seed_to_bits(seed, design.seed_len))?;
    Table::from_bits(*params, &bits)
}

/// Sweep all 2^t seeds in increasing order and return the first whose table
/// is balanced at slack 1.03·Δ, or None when no seed works. The sweep is
/// parallel but the reported seed is always the smallest passing one.
pub fn derandomized_construct(
    params: &Params,
    t: u32,
    l: u32,
    r: u32,
    mode: CheckMode,
    guards: &Guards,
) -> Result<Option<DerandOutcome>> {
    let dims = params.dims()?;
    let design = greedy_design(t, l, r, dims.bits, guards)?;
    guards.admit("derandomized seed sweep", 1u128 << t)?;
    let circuit = match mode {
        CheckMode::Circuit => Some(build_balance_circuit(params, guards)?),
        CheckMode::Direct => None,
    };
    let check_guards = guards.clone();
    let seed = (0u64..1 << t)
        .into_par_iter()
        .find_first(|&s| {
            let Ok(table) = table_from_seed(params, &design, s) else {
                return false;
            };
            match &circuit {
                Some(c) => circuit_accepts(c, &table).unwrap_or(false),
                None => is_balanced_exact_scaled(&table, ThresholdScale::RELAXED_103, &check_guards)
                    .map(|v| v.is_none())
                    .unwrap_or(false),
            }
        });
    match seed {
        Some(s) => Ok(Some(DerandOutcome {
            table: table_from_seed(params, &design, s)?,
            seed: s,
            design,
        })),
        None => Ok(None),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeedRateReport {
    pub samples: u64,
    pub passing: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Estimate the fraction of seeds whose table passes the exact balance check
/// at slack 1.03·Δ, from uniformly sampled seeds.
pub fn empirical_seed_success_rate(
    params: &Params,
    t: u32,
    l: u32,
    r: u32,
    samples: u64,
    rng_seed: u64,
    guards: &Guards,
) -> Result<SeedRateReport> {
    let dims = params.dims()?;
    let design = greedy_design(t, l, r, dims.bits, guards)?;
    guards.admit("empirical_seed_success_rate", samples as u128)?;
    let mask = if t == 63 { u64::MAX >> 1 } else { (1u64 << t) - 1 };
    let check_guards = guards.clone();
    let passing = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = nth_output(rng_seed, i) & mask;
            let Ok(table) = table_from_seed(params, &design, s) else {
                return 0u64;
            };
            match is_balanced_exact_scaled(&table, ThresholdScale::RELAXED_103, &check_guards) {
                Ok(v) if v.is_none() => 1,
                _ => 0,
            }
        })
        .sum::<u64>();
    let (ci_low, ci_high) = wilson_interval(passing, samples);
    Ok(SeedRateReport {
        samples,
        passing,
        rate: passing as f64 / samples as f64,
        ci_low,
        ci_high,
    })
}

/// Convenience wrapper: sampled violation estimate for the table of one seed
/// at slack 1.03·Δ.
pub fn seed_table_estimate(
    params: &Params,
    design: &NwDesign,
    seed: u64,
    pair_samples: u64,
    rng_seed: u64,
) -> Result<crate::balance::BalanceEstimate> {
    let table = table_from_seed(params, design, seed)?;
    sampled_balance_estimate(&table, pair_samples, rng_seed, ThresholdScale::RELAXED_103)
}
