//! Table parameters and closed-form bound calculators.
//!
//! A parameter bundle fixes the table shape through base-2 exponents:
//! `N = 2^n` rows, `N₁ = 2^n1` columns, `M = 2^m` colors, row-set threshold
//! `K = 2^k`, color-set density `D = 2^d`, and slack `Δ = 2^delta` (`delta`
//! may be fractional). A table is balanced when every row set of size ≥ K
//! and every color set of density ≥ 1/D cover at most a Δ·|A|/M fraction of
//! the row set's cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratio::reduce;

/// Fractional bits kept when the slack Δ = 2^delta is rounded up to a dyadic
/// rational for exact threshold comparisons.
pub const DELTA_FRAC_BITS: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Row exponent: the table has N = 2^n rows.
    pub n: u32,
    /// Column exponent: N₁ = 2^n1 columns.
    pub n1: u32,
    /// Color exponent: M = 2^m colors; every cell is an m-bit value.
    pub m: u32,
    /// Row-set threshold exponent: balance quantifies over |B| ≥ K = 2^k.
    pub k: u32,
    /// Density exponent: balance quantifies over |A|/M ≥ 1/D, D = 2^d.
    pub d: u32,
    /// Slack exponent: Δ = 2^delta. May be fractional.
    pub delta: f64,
}

/// Derived sizes for an in-memory table, produced only when the shape is
/// small enough to materialize and compare exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableDims {
    /// N: number of rows.
    pub rows: u64,
    /// N₁: number of columns.
    pub cols: u64,
    /// M: number of colors.
    pub colors: u64,
    /// K: row-set size at which balance is checked.
    pub min_rows: u64,
    /// D: density divisor.
    pub density: u64,
    /// M/D: color-set size at which balance is checked.
    pub a_size: u64,
    /// N·N₁ cells.
    pub cells: u64,
    /// N·N₁·m bits in the canonical encoding.
    pub bits: u64,
    /// ceil(Δ · 2^DELTA_FRAC_BITS): Δ rounded up to a dyadic rational.
    pub delta_mantissa: u128,
}

/// Largest row/column exponent for in-memory tables.
const MAX_SIDE_EXP: u32 = 40;
/// Largest color exponent (colors are handled as u32 values).
const MAX_COLOR_EXP: u32 = 32;
/// Largest slack exponent for which exact u128 threshold comparisons fit.
const MAX_DELTA_EXP: f64 = 48.0;
/// Cap on the canonical encoding size of an in-memory table.
const MAX_TABLE_BITS: u64 = 1 << 31;

impl Params {
    pub fn new(n: u32, n1: u32, m: u32, k: u32, d: u32, delta: f64) -> Self {
        Params { n, n1, m, k, d, delta }
    }

    /// Checks the structural constraints of the balance regime. Table and
    /// checker operations have their own (weaker) feasibility requirements,
    /// so a report with violations does not prevent building a table.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut flag = |constraint: &'static str, message: String| {
            violations.push(ConstraintViolation { constraint, message });
        };
        if self.m < 1 {
            flag("m >= 1", "need at least one output bit per cell".into());
        }
        if self.m >= self.n {
            flag(
                "m < n",
                format!("output exponent m = {} must be below row exponent n = {}", self.m, self.n),
            );
        }
        if self.k > self.n {
            flag(
                "k <= n",
                format!("row-set exponent k = {} exceeds row exponent n = {}", self.k, self.n),
            );
        }
        if self.d > self.m {
            flag(
                "d <= m",
                format!(
                    "density exponent d = {} exceeds color exponent m = {} (D must divide M)",
                    self.d, self.m
                ),
            );
        }
        if !self.delta.is_finite() || self.delta < 0.0 {
            flag(
                "delta >= 0",
                format!("slack exponent delta = {} must be finite and nonnegative (Δ ≥ 1)", self.delta),
            );
        }
        ValidationReport { violations }
    }

    /// Derived sizes, or an error when the shape cannot be materialized.
    pub fn dims(&self) -> Result<TableDims> {
        if self.n > MAX_SIDE_EXP || self.n1 > MAX_SIDE_EXP {
            return Err(Error::Domain(format!(
                "side exponents n = {}, n1 = {} exceed the in-memory cap of {MAX_SIDE_EXP}",
                self.n, self.n1
            )));
        }
        if self.m < 1 || self.m > MAX_COLOR_EXP {
            return Err(Error::Domain(format!(
                "color exponent m = {} outside 1..={MAX_COLOR_EXP}",
                self.m
            )));
        }
        if self.k > self.n {
            return Err(Error::Domain(format!(
                "row-set exponent k = {} exceeds n = {}",
                self.k, self.n
            )));
        }
        if self.d > self.m {
            return Err(Error::Domain(format!(
                "density exponent d = {} exceeds m = {}",
                self.d, self.m
            )));
        }
        if !self.delta.is_finite() || self.delta < 0.0 || self.delta > MAX_DELTA_EXP {
            return Err(Error::Domain(format!(
                "slack exponent delta = {} outside 0..={MAX_DELTA_EXP}",
                self.delta
            )));
        }
        let rows = 1u64 << self.n;
        let cols = 1u64 << self.n1;
        let cells = rows
            .checked_mul(cols)
            .ok_or(Error::Overflow("cell count"))?;
        let bits = cells
            .checked_mul(self.m as u64)
            .ok_or(Error::Overflow("encoding size"))?;
        if bits > MAX_TABLE_BITS {
            return Err(Error::Domain(format!(
                "encoding of {bits} bits exceeds the in-memory cap of {MAX_TABLE_BITS}"
            )));
        }
        Ok(TableDims {
            rows,
            cols,
            colors: 1u64 << self.m,
            min_rows: 1u64 << self.k,
            density: 1u64 << self.d,
            a_size: 1u64 << (self.m - self.d),
            cells,
            bits,
            delta_mantissa: delta_mantissa(self.delta),
        })
    }
}

/// ceil(2^delta · 2^DELTA_FRAC_BITS). Exact for integral `delta`; for
/// fractional `delta` the IEEE-754 value of exp2 is rounded up, which only
/// tightens every balance threshold.
pub fn delta_mantissa(delta: f64) -> u128 {
    (delta + DELTA_FRAC_BITS as f64).exp2().ceil() as u128
}

#[derive(Debug, Clone)]
pub struct ConstraintViolation {
    pub constraint: &'static str,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub violations: Vec<ConstraintViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Upper tail of a sum of independent indicators: the probability of
/// exceeding (1+t)·mu is at most e^(−t·ln(t/3)·mu), clamped to 1 where the
/// exponent is positive (t < 3). Requires mu ≥ 0 and t ≥ 1.
pub fn chernoff_upper_tail(mu: f64, t: f64) -> Result<f64> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::Domain(format!("mean mu = {mu} must be finite and >= 0")));
    }
    if !t.is_finite() || t < 1.0 {
        return Err(Error::Domain(format!("deviation t = {t} must be finite and >= 1")));
    }
    let exponent = -t * (t / 3.0).ln() * mu;
    Ok(exponent.exp().min(1.0))
}

/// First-moment existence bound for balanced tables, in log space.
#[derive(Debug, Clone, Copy)]
pub struct ExistenceBound {
    /// K·ln N + (M/D)·(1 + ln D) − (Δ−1)·ln((Δ−1)/3)·K·N₁/D: the natural log
    /// of an upper bound on the expected number of unbalanced (B, A) events
    /// in a uniformly random table. Negative values certify that balanced
    /// tables exist (and that random tables are balanced with probability
    /// ≥ 1 − e^bound).
    pub log_bound: f64,
    /// The subtracted term only fights the union bound when Δ−1 > 3; below
    /// that the log of the tail factor is nonnegative and the bound is
    /// vacuous.
    pub meaningful: bool,
}

/// Log-space existence bound for the given parameters. Needs Δ > 1 and
/// d ≤ m; works entirely in exponents, so arbitrarily large shapes are fine.
pub fn existence_log_bound(params: &Params) -> Result<ExistenceBound> {
    if params.d > params.m {
        return Err(Error::Domain(format!(
            "density exponent d = {} exceeds m = {}",
            params.d, params.m
        )));
    }
    if !params.delta.is_finite() || params.delta <= 0.0 {
        return Err(Error::Domain(format!(
            "slack exponent delta = {} must be positive (Δ > 1)",
            params.delta
        )));
    }
    let ln2 = std::f64::consts::LN_2;
    let big_k = (params.k as f64).exp2();
    let union_rows = big_k * params.n as f64 * ln2; // K · ln N
    let union_colors = ((params.m - params.d) as f64).exp2() * (1.0 + params.d as f64 * ln2); // (M/D)(1 + ln D)
    let slack = params.delta.exp2() - 1.0; // Δ − 1
    let tail_exponent =
        slack * (slack / 3.0).ln() * (params.k as f64 + params.n1 as f64 - params.d as f64).exp2();
    Ok(ExistenceBound {
        log_bound: union_rows + union_colors - tail_exponent,
        meaningful: slack > 3.0,
    })
}

/// Input for the advice lower bound: a source of length `n` with min-entropy
/// rate `sigma` (kept as an exact rational so the dominant term stays exact),
/// `h` bits of advice, and `m` extracted bits.
#[derive(Debug, Clone, Copy)]
pub struct BoundsInput {
    pub sigma_num: u64,
    pub sigma_den: u64,
    pub h: u32,
    pub n: u64,
    pub m: u64,
}

/// Number of distinct responses of an advice string of length at most h:
/// 2^(h+1) − 1.
pub fn advice_capacity(h: u32) -> u128 {
    (1u128 << (h + 1)) - 1
}

#[derive(Debug, Clone, Copy)]
pub struct AdviceBound {
    /// Dominant term (1 − sigma) / (2^(h+1) − 1) as an exact reduced rational.
    pub main_term_num: u128,
    pub main_term_den: u128,
    /// The same term in floating point.
    pub main_term: f64,
    /// Finite-length correction (h + log₂ n)/m subtracted from the main term.
    pub correction: f64,
}

impl AdviceBound {
    /// main_term − correction.
    pub fn lower_bound(&self) -> f64 {
        self.main_term - self.correction
    }
}

/// Lower bound on the extraction error forced by h bits of advice: no
/// extractor from a rate-sigma source can beat error
/// (1 − sigma)/(2^(h+1) − 1) − (h + log₂ n)/m.
pub fn advice_lower_bound(input: &BoundsInput) -> Result<AdviceBound> {
    if input.sigma_den == 0 || input.sigma_num == 0 || input.sigma_num >= input.sigma_den {
        return Err(Error::Domain(format!(
            "rate sigma = {}/{} must lie strictly between 0 and 1",
            input.sigma_num, input.sigma_den
        )));
    }
    if input.h > 62 {
        return Err(Error::Domain(format!(
            "advice length h = {} exceeds the supported 62",
            input.h
        )));
    }
    if input.m == 0 || input.n <= input.m {
        return Err(Error::Domain(format!(
            "need 0 < m < n, got m = {}, n = {}",
            input.m, input.n
        )));
    }
    let capacity = advice_capacity(input.h);
    let num = (input.sigma_den - input.sigma_num) as u128;
    let den = (input.sigma_den as u128)
        .checked_mul(capacity)
        .ok_or(Error::Overflow("advice bound denominator"))?;
    let (main_num, main_den) = reduce(num, den);
    let correction = (input.h as f64 + (input.n as f64).log2()) / input.m as f64;
    Ok(AdviceBound {
        main_term_num: main_num,
        main_term_den: main_den,
        main_term: main_num as f64 / main_den as f64,
        correction,
    })
}

/// Parameter choice that matches m extracted bits against h advice bits:
/// slack delta = n/2^(0.5·h), density d = ceil(delta) + c, columns indexed by
/// the advice (n1 = h), and row-set threshold k = m. `c` trades slack for
/// density headroom. For fractional delta the density exponent is rounded up,
/// which keeps d ≥ delta + c.
pub fn advice_regime_params(n: u32, m: u32, h: u32, c: u32) -> Params {
    let delta = n as f64 / (0.5 * h as f64).exp2();
    let d = delta.ceil() as u32 + c;
    Params {
        n,
        n1: h,
        m,
        k: m,
        d,
        delta,
    }
}

/// External JSON schema for a parameter file: the six shape exponents plus
/// the density-headroom constant `c` (defaults to 1).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParamsFile {
    pub n: u32,
    pub n1: u32,
    pub m: u32,
    pub k: u32,
    pub d: u32,
    pub delta: f64,
    #[serde(default = "default_c")]
    pub c: u32,
}

fn default_c() -> u32 {
    1
}

impl ParamsFile {
    pub fn params(&self) -> Params {
        Params::new(self.n, self.n1, self.m, self.k, self.d, self.delta)
    }

    pub fn from_params(params: &Params, c: u32) -> Self {
        ParamsFile {
            n: params.n,
            n1: params.n1,
            m: params.m,
            k: params.k,
            d: params.d,
            delta: params.delta,
            c,
        }
    }
}
