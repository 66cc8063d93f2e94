//! Balance checkers.
//!
//! A violation witness is a row set B and color set A whose joint cell count
//! exceeds Δ·(|A|/M)·|B|·N₁. Thresholds are compared exactly: Δ is the
//! dyadic rational `delta_mantissa / 2^DELTA_FRAC_BITS`, an optional scale
//! (e.g. 103/100) is a rational, and everything is cross-multiplied in u128.
//!
//! `is_balanced_exact` checks only |B| = K, |A| = M/D, which is equivalent
//! to the full quantification: any violating (B, A) with |B| ≥ K and
//! |A| ≥ M/D keeps violating after restricting B to its K rows with the most
//! A-cells and A to its M/D colors with the most cells in B (both steps can
//! only raise the count-per-threshold ratio). `is_balanced_full` walks every
//! subset pair and exists as the oracle for that reduction.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::guard::Guards;
use crate::params::DELTA_FRAC_BITS;
use crate::ratio::reduce;
use crate::rng::{nth_output, SplitMix64};
use crate::sets::{binomial_saturating, first_combination, next_combination};
use crate::table::{Color, ColorSet, RowSet, Table};

/// Rational multiplier applied to the slack Δ when checking thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdScale {
    pub num: u64,
    pub den: u64,
}

impl ThresholdScale {
    pub const UNIT: ThresholdScale = ThresholdScale { num: 1, den: 1 };
    /// The 1.03 relaxation used by the approximate-counting circuit sandwich.
    pub const RELAXED_103: ThresholdScale = ThresholdScale { num: 103, den: 100 };
}

impl Default for ThresholdScale {
    fn default() -> Self {
        ThresholdScale::UNIT
    }
}

/// A witnessed balance violation: the named rows and colors jointly hold
/// `count` cells, strictly more than threshold_num/threshold_den =
/// scale·Δ·(|A|/M)·|B|·N₁.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rows: Vec<u64>,
    pub colors: Vec<Color>,
    pub count: u64,
    pub threshold_num: u128,
    pub threshold_den: u128,
}

impl Serialize for Violation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        let mut s = serializer.serialize_struct("Violation", 5)?;
        s.serialize_field("rows", &self.rows)?;
        s.serialize_field("colors", &self.colors)?;
        s.serialize_field("count", &self.count)?;
        let num = u64::try_from(self.threshold_num)
            .map_err(|_| S::Error::custom("threshold numerator exceeds u64"))?;
        let den = u64::try_from(self.threshold_den)
            .map_err(|_| S::Error::custom("threshold denominator exceeds u64"))?;
        s.serialize_field("threshold_num", &num)?;
        s.serialize_field("threshold_den", &den)?;
        s.end()
    }
}

/// Exact threshold comparison and bookkeeping shared by the checkers.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ThresholdCtx {
    mantissa: u128,
    colors: u128,
    cols: u128,
    scale_num: u128,
    scale_den: u128,
}

impl ThresholdCtx {
    pub(crate) fn new(table: &Table, scale: ThresholdScale) -> Result<Self> {
        if scale.num == 0 || scale.den == 0 {
            return Err(Error::Domain(format!(
                "threshold scale {}/{} must be a positive rational",
                scale.num, scale.den
            )));
        }
        let dims = table.dims();
        let ctx = ThresholdCtx {
            mantissa: dims.delta_mantissa,
            colors: dims.colors as u128,
            cols: dims.cols as u128,
            scale_num: scale.num as u128,
            scale_den: scale.den as u128,
        };
        // Verify once that the largest cross-multiplication fits u128, so the
        // per-pair comparisons can use plain arithmetic.
        let max_count = dims.cells as u128;
        max_count
            .checked_mul(ctx.colors)
            .and_then(|v| v.checked_mul(1u128 << DELTA_FRAC_BITS))
            .and_then(|v| v.checked_mul(ctx.scale_den))
            .ok_or(Error::Overflow("threshold comparison"))?;
        ctx.mantissa
            .checked_mul(ctx.scale_num)
            .and_then(|v| v.checked_mul(ctx.colors))
            .and_then(|v| v.checked_mul(max_count))
            .ok_or(Error::Overflow("threshold comparison"))?;
        Ok(ctx)
    }

    /// count > scale·Δ·(|A|/M)·|B|·N₁, compared exactly.
    #[inline]
    pub(crate) fn exceeded(&self, count: u64, a_size: u64, b_size: u64) -> bool {
        let lhs = count as u128 * self.colors * (1u128 << DELTA_FRAC_BITS) * self.scale_den;
        let rhs = self.mantissa * self.scale_num * a_size as u128 * b_size as u128 * self.cols;
        lhs > rhs
    }

    /// The threshold scale·Δ·(|A|/M)·|B|·N₁ as a reduced rational.
    pub(crate) fn threshold(&self, a_size: u64, b_size: u64) -> (u128, u128) {
        reduce(
            self.mantissa * self.scale_num * a_size as u128 * b_size as u128 * self.cols,
            self.colors * (1u128 << DELTA_FRAC_BITS) * self.scale_den,
        )
    }

    fn violation(&self, rows: Vec<u64>, colors: Vec<Color>, count: u64) -> Violation {
        let (threshold_num, threshold_den) =
            self.threshold(colors.len() as u64, rows.len() as u64);
        Violation {
            rows,
            colors,
            count,
            threshold_num,
            threshold_den,
        }
    }
}

/// Cells of B × [N₁] whose color lies in A.
pub fn count_a_cells(table: &Table, rows: &RowSet, colors: &ColorSet) -> u64 {
    let mut count = 0u64;
    for x in rows.iter() {
        for y in 0..table.dims().cols {
            if colors.contains(table.cell(x, y)) {
                count += 1;
            }
        }
    }
    count
}

/// Exact checker at the definition threshold (scale 1).
pub fn is_balanced_exact(table: &Table, guards: &Guards) -> Result<Option<Violation>> {
    is_balanced_exact_scaled(table, ThresholdScale::UNIT, guards)
}

/// Exact checker over all |B| = K, |A| = M/D, in lexicographic order (row
/// combinations outermost), returning the first violation. Guarded by
/// C(N,K)·C(M,M/D) plus histogram work.
pub fn is_balanced_exact_scaled(
    table: &Table,
    scale: ThresholdScale,
    guards: &Guards,
) -> Result<Option<Violation>> {
    let dims = *table.dims();
    let ctx = ThresholdCtx::new(table, scale)?;
    let pairs = binomial_saturating(dims.rows, dims.min_rows)
        .saturating_mul(binomial_saturating(dims.colors, dims.a_size));
    guards.admit("is_balanced_exact", pairs)?;
    guards.admit(
        "is_balanced_exact histograms",
        dims.cells as u128 + dims.rows as u128 * dims.colors as u128,
    )?;

    let hist = table.row_histograms();
    let k = dims.min_rows;
    let a_size = dims.a_size;
    let mut b = match first_combination(dims.rows, k) {
        Some(b) => b,
        None => return Ok(None),
    };
    let mut colsum = vec![0u64; dims.colors as usize];
    loop {
        colsum.iter_mut().for_each(|c| *c = 0);
        for &x in &b {
            for (c, sum) in colsum.iter_mut().enumerate() {
                *sum += hist[x as usize][c] as u64;
            }
        }
        let mut a = first_combination(dims.colors, a_size).expect("a_size <= colors");
        loop {
            let count: u64 = a.iter().map(|&c| colsum[c as usize]).sum();
            if ctx.exceeded(count, a_size, k) {
                let colors = a.iter().map(|&c| c as Color).collect();
                return Ok(Some(ctx.violation(b.clone(), colors, count)));
            }
            if !next_combination(&mut a, dims.colors) {
                break;
            }
        }
        if !next_combination(&mut b, dims.rows) {
            break;
        }
    }
    Ok(None)
}

/// Exhaustive checker for the full definition (scale 1).
pub fn is_balanced_full(table: &Table, guards: &Guards) -> Result<Option<Violation>> {
    is_balanced_full_scaled(table, ThresholdScale::UNIT, guards)
}

/// Exhaustive checker over every B with |B| ≥ K and every A with
/// |A|·D ≥ M, in ascending bitmask order (row masks outermost). This is the
/// direct transcription of the definition and the oracle for the exact-size
/// reduction. Guarded by 2^N·2^M.
pub fn is_balanced_full_scaled(
    table: &Table,
    scale: ThresholdScale,
    guards: &Guards,
) -> Result<Option<Violation>> {
    let dims = *table.dims();
    let ctx = ThresholdCtx::new(table, scale)?;
    let subsets = if dims.rows + dims.colors < 128 {
        1u128 << (dims.rows + dims.colors)
    } else {
        u128::MAX
    };
    guards.admit("is_balanced_full", subsets)?;
    if dims.rows > 62 || dims.colors > 30 {
        return Err(Error::Domain(format!(
            "full enumeration over 2^{} row masks and 2^{} color masks cannot be materialized",
            dims.rows, dims.colors
        )));
    }

    let hist = table.row_histograms();
    // Per-row count of cells in each color subset, by subset-sum DP.
    let amasks = 1usize << dims.colors;
    let mut row_in_a = vec![vec![0u32; amasks]; dims.rows as usize];
    for (x, row) in row_in_a.iter_mut().enumerate() {
        for amask in 1..amasks {
            let low = amask.trailing_zeros() as usize;
            row[amask] = row[amask & (amask - 1)] + hist[x][low];
        }
    }

    for bmask in 0u64..1 << dims.rows {
        let b_size = bmask.count_ones() as u64;
        if b_size < dims.min_rows {
            continue;
        }
        for amask in 0usize..amasks {
            let a_size = amask.count_ones() as u64;
            if a_size * dims.density < dims.colors || a_size == 0 {
                continue;
            }
            let mut count = 0u64;
            let mut rest = bmask;
            while rest != 0 {
                let x = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                count += row_in_a[x][amask] as u64;
            }
            if ctx.exceeded(count, a_size, b_size) {
                let rows = (0..dims.rows).filter(|x| bmask >> x & 1 == 1).collect();
                let colors = (0..dims.colors as Color)
                    .filter(|c| amask >> c & 1 == 1)
                    .collect();
                return Ok(Some(ctx.violation(rows, colors, count)));
            }
        }
    }
    Ok(None)
}

/// Rows whose own stripe already exceeds the per-row share of the threshold:
/// count of A-cells in row x strictly above Δ·(|A|/M)·N₁. On a balanced
/// table, fewer than K rows can be bad for any A of size M/D (otherwise K of
/// them would assemble into an exact-size violation).
pub fn bad_rows(table: &Table, colors: &ColorSet) -> Result<RowSet> {
    let dims = *table.dims();
    let ctx = ThresholdCtx::new(table, ThresholdScale::UNIT)?;
    let mut bad = RowSet::empty(dims.rows);
    for x in 0..dims.rows {
        let mut count = 0u64;
        for y in 0..dims.cols {
            if colors.contains(table.cell(x, y)) {
                count += 1;
            }
        }
        // Per-row threshold is the b_size = 1 case.
        if ctx.exceeded(count, colors.len(), 1) {
            bad.insert(x)?;
        }
    }
    Ok(bad)
}

/// Wilson 95% score interval for `successes` out of `trials`.
/// z is the 0.975 normal quantile.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    const Z: f64 = 1.959963984540054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Monte-Carlo estimate of the violation rate over uniformly random
/// exact-size pairs (B, A).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BalanceEstimate {
    pub samples: u64,
    pub violations: u64,
    pub violation_rate: f64,
    /// Wilson 95% interval for the violation rate.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Sample `samples` uniform pairs (|B| = K, |A| = M/D) and count threshold
/// violations. Sample i draws from its own SplitMix64 stream seeded with
/// output i of the `rng_seed` stream, so the estimate is independent of
/// evaluation order and thread count.
pub fn sampled_balance_estimate(
    table: &Table,
    samples: u64,
    rng_seed: u64,
    scale: ThresholdScale,
) -> Result<BalanceEstimate> {
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let dims = *table.dims();
    let ctx = ThresholdCtx::new(table, scale)?;
    let hist = table.row_histograms();
    use rayon::prelude::*;
    let violations = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = SplitMix64::new(nth_output(rng_seed, i));
            let b = rng.subset(dims.rows, dims.min_rows);
            let a = rng.subset(dims.colors, dims.a_size);
            let count: u64 = b
                .iter()
                .map(|&x| a.iter().map(|&c| hist[x as usize][c as usize] as u64).sum::<u64>())
                .sum();
            ctx.exceeded(count, dims.a_size, dims.min_rows) as u64
        })
        .sum();
    let (ci_low, ci_high) = wilson_interval(violations, samples);
    Ok(BalanceEstimate {
        samples,
        violations,
        violation_rate: violations as f64 / samples as f64,
        ci_low,
        ci_high,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Params;

    fn micro() -> Params {
        Params::new(3, 2, 2, 1, 2, 1.0)
    }

    /// E(x, y) = (x + y) mod M: every color appears once per row, so any A
    /// of size M/D holds exactly |A| cells per row.
    fn latin(params: Params) -> Table {
        let colors = 1u64 << params.m;
        Table::from_fn(params, |x, y| ((x + y) % colors) as Color).unwrap()
    }

    /// Every cell color 0: color sets containing 0 swallow whole rows.
    fn constant(params: Params) -> Table {
        Table::zero(params).unwrap()
    }

    #[test]
    fn count_a_cells_matches_naive() {
        let t = Table::random(micro(), 5).unwrap();
        let rows = RowSet::from_indices(8, &[1, 4, 6]).unwrap();
        let colors = ColorSet::from_colors(4, &[0, 3]).unwrap();
        let mut expected = 0;
        for x in [1u64, 4, 6] {
            for y in 0..4 {
                let c = t.extract(x, y).unwrap();
                if c == 0 || c == 3 {
                    expected += 1;
                }
            }
        }
        assert_eq!(count_a_cells(&t, &rows, &colors), expected);
    }

    #[test]
    fn latin_table_is_balanced() {
        // Uniform rows: count = |A|·|B|·N₁/M = threshold/Δ, and Δ ≥ 1.
        let t = latin(micro());
        assert!(is_balanced_exact(&t, &Guards::default()).unwrap().is_none());
        assert!(is_balanced_full(&t, &Guards::default()).unwrap().is_none());
    }

    #[test]
    fn constant_table_violates_and_witness_is_lexicographic_first() {
        let t = constant(micro());
        let v = is_balanced_exact(&t, &Guards::default())
            .unwrap()
            .expect("constant table concentrates everything on color 0");
        // First B in lexicographic order is {0,1}; first violating A is {0}.
        assert_eq!(v.rows, vec![0, 1]);
        assert_eq!(v.colors, vec![0]);
        assert_eq!(v.count, 8); // both rows entirely color 0
        // Threshold 2·(1/4)·2·4 = 4.
        assert_eq!((v.threshold_num, v.threshold_den), (4, 1));
        assert!(is_balanced_full(&t, &Guards::default()).unwrap().is_some());
    }

    #[test]
    fn single_bad_row_is_caught() {
        // Latin everywhere except row 5, which is constant color 2. A pair
        // {5, x} against A = {2} holds 4 + 1 cells > 4.
        let t = Table::from_fn(micro(), |x, y| {
            if x == 5 {
                2
            } else {
                ((x + y) % 4) as Color
            }
        })
        .unwrap();
        let v = is_balanced_exact(&t, &Guards::default()).unwrap().unwrap();
        assert!(v.rows.contains(&5));
        assert_eq!(v.colors, vec![2]);
        assert_eq!(v.count, 5);
        assert!(is_balanced_full(&t, &Guards::default()).unwrap().is_some());
    }

    #[test]
    fn scaled_threshold_separates() {
        // Count 5 vs unit threshold 4: violation at scale 1, none at 13/10
        // (threshold 5.2). Scale rationals stay exact.
        let t = Table::from_fn(micro(), |x, y| {
            if x == 5 {
                2
            } else {
                ((x + y) % 4) as Color
            }
        })
        .unwrap();
        let relaxed = ThresholdScale { num: 13, den: 10 };
        assert!(is_balanced_exact_scaled(&t, relaxed, &Guards::default())
            .unwrap()
            .is_none());
        // Exactly at the boundary the comparison is strict: count 5 against
        // threshold 5 (scale 5/4) is not a violation.
        let boundary = ThresholdScale { num: 5, den: 4 };
        assert!(is_balanced_exact_scaled(&t, boundary, &Guards::default())
            .unwrap()
            .is_none());
        // Just below the boundary it is.
        let below = ThresholdScale { num: 124, den: 100 };
        assert!(is_balanced_exact_scaled(&t, below, &Guards::default())
            .unwrap()
            .is_some());
    }

    #[test]
    fn guards_trip_on_large_shapes() {
        let p = Params::new(20, 2, 8, 10, 2, 1.0);
        let t = Table::zero(p).unwrap();
        assert!(matches!(
            is_balanced_exact(&t, &Guards::default()),
            Err(Error::GuardExceeded { .. })
        ));
        assert!(matches!(
            is_balanced_full(&t, &Guards::default()),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn bad_rows_on_fixtures() {
        let t = constant(micro());
        let a0 = ColorSet::from_colors(4, &[0]).unwrap();
        // Every row is entirely color 0: count 4 > Δ·(1/4)·4 = 2.
        assert_eq!(bad_rows(&t, &a0).unwrap().len(), 8);
        let a1 = ColorSet::from_colors(4, &[1]).unwrap();
        assert_eq!(bad_rows(&t, &a1).unwrap().len(), 0);
        let l = latin(micro());
        for c in 0..4 {
            let a = ColorSet::from_colors(4, &[c]).unwrap();
            assert_eq!(bad_rows(&l, &a).unwrap().len(), 0);
        }
    }

    #[test]
    fn violation_serializes_to_flat_json() {
        let v = Violation {
            rows: vec![0, 1],
            colors: vec![2],
            count: 7,
            threshold_num: 4,
            threshold_den: 1,
        };
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(
            json,
            r#"{"rows":[0,1],"colors":[2],"count":7,"threshold_num":4,"threshold_den":1}"#
        );
    }

    #[test]
    fn wilson_interval_known_values() {
        // 0/10 successes: interval starts at 0 and reaches ~0.278.
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.27753).abs() < 1e-4);
        // 5/10: symmetric around 0.5.
        let (lo, hi) = wilson_interval(5, 10);
        assert!((lo - 0.23659).abs() < 1e-4);
        assert!((hi - 0.76341).abs() < 1e-4);
        // Contains the true rate for a fair estimate.
        let (lo, hi) = wilson_interval(500, 1000);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!(hi - lo < 0.07);
    }

    #[test]
    fn sampled_estimate_matches_verdict_extremes() {
        // Latin table: no violations anywhere, estimate must be 0.
        let est = sampled_balance_estimate(&latin(micro()), 500, 9, ThresholdScale::UNIT).unwrap();
        assert_eq!(est.violations, 0);
        // Constant table: most pairs containing color 0 violate; rate > 0.
        let est =
            sampled_balance_estimate(&constant(micro()), 500, 9, ThresholdScale::UNIT).unwrap();
        assert!(est.violations > 0);
        assert!(est.ci_low > 0.0);
        // Reproducible for a fixed seed.
        let again =
            sampled_balance_estimate(&constant(micro()), 500, 9, ThresholdScale::UNIT).unwrap();
        assert_eq!(est.violations, again.violations);
    }
}
