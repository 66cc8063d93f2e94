//! Rank certificates: describing a column index by its rank among a row's
//! cells that land in a color set.
//!
//! On a balanced table, any color set A of size M/D leaves all but fewer
//! than K rows "good": a good row holds at most Δ·N₁/D A-cells, so a column
//! whose cell lands in A can be named within the row by
//! ceil(log2(Δ·N₁/D)) bits — strictly fewer than the n₁ bits of a raw
//! column index whenever Δ < D. The helpers here build those certificates,
//! invert them, report the per-row savings, and find columns that escape a
//! color set entirely.

use serde::Serialize;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::ratio::{gt, reduce};
use crate::table::{Color, ColorSet, Table};

/// A column index re-described by its rank among the A-cells of its row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankCertificate {
    pub row: u64,
    pub colors: Vec<Color>,
    /// Number of columns y' < y with E(row, y') in the color set.
    pub rank: u64,
    /// Bits needed to name any rank in this row: ceil(log2(rank_space)),
    /// where rank_space is the row's total count of A-cells.
    pub bit_length: u32,
}

/// ceil(log2(x)) with ceil_log2(0) = ceil_log2(1) = 0.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

fn row_rank_space(table: &Table, row: u64, colors: &ColorSet) -> u64 {
    let mut space = 0;
    for y in 0..table.dims().cols {
        if colors.contains(table.cell(row, y)) {
            space += 1;
        }
    }
    space
}

/// Certificate for column `y` of row `x`: its rank among the row's A-cells.
/// Errors if the cell's color is not in the set.
pub fn encode_seed_rank(
    table: &Table,
    x: u64,
    y: u64,
    colors: &ColorSet,
) -> Result<RankCertificate> {
    let color = table.extract(x, y)?;
    if !colors.contains(color) {
        return Err(Error::NotInColorSet { row: x, col: y });
    }
    let mut rank = 0;
    for y_prev in 0..y {
        if colors.contains(table.cell(x, y_prev)) {
            rank += 1;
        }
    }
    Ok(RankCertificate {
        row: x,
        colors: colors.colors(),
        rank,
        bit_length: ceil_log2(row_rank_space(table, x, colors)),
    })
}

/// Invert a certificate: the column holding the rank-th A-cell of the row.
pub fn decode_seed_rank(table: &Table, x: u64, colors: &ColorSet, rank: u64) -> Result<u64> {
    if x >= table.dims().rows {
        return Err(Error::IndexOutOfRange {
            what: "row",
            index: x,
            limit: table.dims().rows,
        });
    }
    let mut seen = 0;
    for y in 0..table.dims().cols {
        if colors.contains(table.cell(x, y)) {
            if seen == rank {
                return Ok(y);
            }
            seen += 1;
        }
    }
    Err(Error::RankOutOfRange {
        rank,
        rank_space: seen,
    })
}

/// Per-row report of how tightly ranks compress on the rows that are not bad.
#[derive(Debug, Clone, Serialize)]
pub struct GoodRowReport {
    pub row: u64,
    /// Number of A-cells in the row.
    pub rank_space: u64,
    /// ceil(log2(rank_space)).
    pub bit_length: u32,
    /// Whether rank_space ≤ Δ·N₁/D (the good-row guarantee), compared as
    /// exact rationals.
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankBoundReport {
    /// |A| — size of the color set examined.
    pub a_size: u64,
    /// Δ·N₁/D as a reduced rational: the rank-space bound for good rows.
    pub bound_num: u64,
    pub bound_den: u64,
    /// Whether |A| ≤ 2^(m−d+c), the size regime the guarantee targets.
    pub a_size_within_regime: bool,
    /// Rows exceeding the per-row threshold (their ranks may need more bits).
    pub bad_rows: Vec<u64>,
    pub good_rows: Vec<GoodRowReport>,
}

/// Examine every row against the color set: bad rows are listed, and each
/// good row is reported with its rank space, certificate length, and whether
/// the Δ·N₁/D bound holds. `c` is the density-headroom constant that frames
/// the admissible |A| regime.
pub fn good_row_rank_bound(table: &Table, colors: &ColorSet, c: u32) -> Result<RankBoundReport> {
    let dims = *table.dims();
    let params = table.params();
    let bad = crate::balance::bad_rows(table, colors)?;
    // Δ·N₁/D with dyadic Δ: mantissa·N₁ / (2^32·D).
    let (bound_num, bound_den) = reduce(
        dims.delta_mantissa * dims.cols as u128,
        (1u128 << crate::params::DELTA_FRAC_BITS) * dims.density as u128,
    );
    // |A| ≤ 2^(m−d+c) checked in integers: |A|·2^d ≤ 2^(m+c).
    let a_size_within_regime = (colors.len() as u128) << params.d <= 1u128 << (params.m + c);
    let mut good_rows = Vec::new();
    for x in 0..dims.rows {
        if bad.contains(x) {
            continue;
        }
        let rank_space = row_rank_space(table, x, colors);
        // rank_space ≤ bound ⟺ NOT rank_space > bound.
        let within_bound = !gt(rank_space as u128, 1, bound_num, bound_den)?;
        good_rows.push(GoodRowReport {
            row: x,
            rank_space,
            bit_length: ceil_log2(rank_space),
            within_bound,
        });
    }
    Ok(RankBoundReport {
        a_size: colors.len(),
        bound_num: u64::try_from(bound_num).map_err(|_| Error::Overflow("rank bound"))?,
        bound_den: u64::try_from(bound_den).map_err(|_| Error::Overflow("rank bound"))?,
        a_size_within_regime,
        bad_rows: bad.indices(),
        good_rows,
    })
}

/// Smallest column whose cell in row `x` escapes the color set, if any.
/// On a balanced table with Δ < D, every good row has one: it holds at most
/// Δ·N₁/D < N₁ A-cells.
pub fn exists_escaping_advice(table: &Table, x: u64, colors: &ColorSet) -> Result<Option<u64>> {
    if x >= table.dims().rows {
        return Err(Error::IndexOutOfRange {
            what: "row",
            index: x,
            limit: table.dims().rows,
        });
    }
    for y in 0..table.dims().cols {
        if !colors.contains(table.cell(x, y)) {
            return Ok(Some(y));
        }
    }
    Ok(None)
}

/// The `count` globally most frequent colors (ties to the smaller color).
pub fn most_frequent_colors(table: &Table, count: u64) -> Result<ColorSet> {
    let dims = *table.dims();
    if count > dims.colors {
        return Err(Error::IndexOutOfRange {
            what: "color-set size",
            index: count,
            limit: dims.colors + 1,
        });
    }
    let mut totals = vec![0u64; dims.colors as usize];
    for x in 0..dims.rows {
        for y in 0..dims.cols {
            totals[table.cell(x, y) as usize] += 1;
        }
    }
    let mut order: Vec<Color> = (0..dims.colors as Color).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(totals[c as usize]), c));
    let mut set = ColorSet::empty(dims.colors);
    for &c in order.iter().take(count as usize) {
        set.insert(c)?;
    }
    Ok(set)
}

/// Estimated description length of a bit string, in bits.
///
/// This is a heuristic stand-in for an uncomputable quantity and is kept
/// behind its own trait so callers must opt in; nothing else in the crate
/// consumes it.
pub trait ComplexityEstimator {
    fn estimate_bits(&self, bits: &Bits) -> u64;
}

/// Default estimator: the raw length minus whatever redundancy a pair of
/// cheap universal coders can exhibit (zeroth-order frequency coding and
/// run-length coding), never more than the raw length plus nothing.
pub struct DefaultEstimator;

impl ComplexityEstimator for DefaultEstimator {
    fn estimate_bits(&self, bits: &Bits) -> u64 {
        let n = bits.len() as u64;
        if n == 0 {
            return 0;
        }
        let ones = bits.iter().filter(|&b| b).count() as u64;
        // Zeroth-order: n·H(ones/n) plus a self-delimiting count header.
        let header = 2 * ceil_log2(n + 1) as u64 + 2;
        let zeroth = {
            let p = ones as f64 / n as f64;
            let entropy = if ones == 0 || ones == n {
                0.0
            } else {
                -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
            };
            (n as f64 * entropy).ceil() as u64 + header
        };
        // Run-length: first bit plus each run length, self-delimited.
        let run_length = {
            let mut cost = 1u64;
            let mut run = 1u64;
            let mut prev = bits.get(0);
            for i in 1..bits.len() {
                let b = bits.get(i);
                if b == prev {
                    run += 1;
                } else {
                    cost += 2 * ceil_log2(run + 1) as u64 + 2;
                    run = 1;
                    prev = b;
                }
            }
            cost += 2 * ceil_log2(run + 1) as u64 + 2;
            cost
        };
        n.min(zeroth).min(run_length)
    }
}

/// Convenience wrapper over [`DefaultEstimator`].
pub fn complexity_proxy(bits: &Bits) -> u64 {
    DefaultEstimator.estimate_bits(bits)
}

/// Is some row of the table "compressible below its index length" according
/// to an estimator? Illustrative consumer of the pluggable trait; the core
/// checkers never call this.
pub fn rows_below_index_length(table: &Table, estimator: &dyn ComplexityEstimator) -> Vec<u64> {
    let dims = *table.dims();
    let mut rows = Vec::new();
    for x in 0..dims.rows {
        let mut row_bits = Bits::new();
        for y in 0..dims.cols {
            row_bits.push_uint_msb(table.cell(x, y) as u64, table.params().m);
        }
        if estimator.estimate_bits(&row_bits) < table.params().n as u64 {
            rows.push(x);
        }
    }
    rows
}
