//! Constant-depth balance-checking circuit.
//!
//! The circuit reads a table's canonical encoding and outputs 1 when every
//! exact-size pair (|B| = K, |A| = M/D) keeps its A-cell count low. Per
//! pair, each of the K·N₁ cells gets an indicator wire (an OR over |A|
//! color-equality tests, each an AND of m input literals, negated where the
//! color bit is 0); the indicators feed an approximate threshold gadget with
//! target a = (1/0.99)·Δ·(1/D)·K·N₁ and tolerance 1/100, oriented to output
//! 1 when the count is low; a top AND joins all pairs.
//!
//! The gadget contract: inputs with at most (1−ε)a ones must yield 1, at
//! least (1+ε)a ones must yield 0, and anything in the gap is free. It is
//! realized here as an exact comparison (ones ≤ a), which satisfies both
//! clauses, and is accounted as a constant-depth block of depth 3 (such
//! approximate majority gadgets exist at that depth for polynomial size).
//!
//! Sandwich guarantee: acceptance implies every exact-size count is at most
//! (100/99)·Δ·(|A|/M)·|B|·N₁ < 1.03·Δ·(|A|/M)·|B|·N₁, hence the table is
//! balanced at slack 1.03·Δ; conversely a table balanced at Δ has all counts
//! at most 0.99·a, which forces acceptance.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::balance::{is_balanced_exact_scaled, ThresholdScale};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::guard::Guards;
use crate::params::{Params, DELTA_FRAC_BITS};
use crate::ratio::{gt, product, reduce};
use crate::sets::{binomial_saturating, first_combination, next_combination};
use crate::table::{Color, Table};

/// Depth accounted to one approximate-threshold gadget.
pub const APPROX_GADGET_DEPTH: u32 = 3;
/// Gadget tolerance ε = 1/100.
pub const EPS_NUM: u64 = 1;
pub const EPS_DEN: u64 = 100;

/// Wires 0..input_width are circuit inputs; wire input_width + g is gate g.
/// Gates only reference lower-numbered wires.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Gate {
    Not { input: usize },
    And { inputs: Vec<usize> },
    Or { inputs: Vec<usize> },
    ApproxThreshold {
        inputs: Vec<usize>,
        /// Threshold a as an exact reduced rational.
        a_num: u64,
        a_den: u64,
        eps_num: u64,
        eps_den: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub input_width: usize,
    pub gates: Vec<Gate>,
    /// Wire id of the output.
    pub output: usize,
    /// Number of (B, A) pairs the circuit checks.
    pub pair_count: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CircuitStats {
    pub input_width: usize,
    /// Gate count.
    pub size: usize,
    /// Longest input-to-output path, counting a threshold gadget as depth 3.
    pub depth: u32,
    pub pair_count: u64,
    pub a_num: u64,
    pub a_den: u64,
    pub eps_num: u64,
    pub eps_den: u64,
}

impl Circuit {
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// Longest path depth; AND/OR/NOT cost 1, the threshold gadget costs
    /// [`APPROX_GADGET_DEPTH`].
    pub fn depth(&self) -> u32 {
        let mut depths = vec![0u32; self.input_width + self.gates.len()];
        for (g, gate) in self.gates.iter().enumerate() {
            let (cost, inputs): (u32, &[usize]) = match gate {
                Gate::Not { input } => (1, std::slice::from_ref(input)),
                Gate::And { inputs } | Gate::Or { inputs } => (1, inputs),
                Gate::ApproxThreshold { inputs, .. } => (APPROX_GADGET_DEPTH, inputs),
            };
            let base = inputs.iter().map(|&w| depths[w]).max().unwrap_or(0);
            depths[self.input_width + g] = base + cost;
        }
        depths[self.output]
    }

    pub fn stats(&self) -> CircuitStats {
        let (a_num, a_den, eps_num, eps_den) = self
            .gates
            .iter()
            .find_map(|g| match g {
                Gate::ApproxThreshold { a_num, a_den, eps_num, eps_den, .. } => {
                    Some((*a_num, *a_den, *eps_num, *eps_den))
                }
                _ => None,
            })
            .unwrap_or((0, 1, EPS_NUM, EPS_DEN));
        CircuitStats {
            input_width: self.input_width,
            size: self.size(),
            depth: self.depth(),
            pair_count: self.pair_count,
            a_num,
            a_den,
            eps_num,
            eps_den,
        }
    }

    /// Evaluate on an input bit string of exactly `input_width` bits.
    pub fn evaluate(&self, input: &Bits) -> Result<bool> {
        if input.len() != self.input_width {
            return Err(Error::WidthMismatch {
                got: input.len(),
                expected: self.input_width,
            });
        }
        let mut values = vec![false; self.input_width + self.gates.len()];
        for (i, bit) in input.iter().enumerate() {
            values[i] = bit;
        }
        for (g, gate) in self.gates.iter().enumerate() {
            let out = match gate {
                Gate::Not { input } => !values[*input],
                Gate::And { inputs } => inputs.iter().all(|&w| values[w]),
                Gate::Or { inputs } => inputs.iter().any(|&w| values[w]),
                Gate::ApproxThreshold { inputs, a_num, a_den, .. } => {
                    let ones = inputs.iter().filter(|&&w| values[w]).count() as u128;
                    // Output 1 when the count is low: ones ≤ a, exactly.
                    !gt(ones, 1, *a_num as u128, *a_den as u128)?
                }
            };
            values[self.input_width + g] = out;
        }
        Ok(values[self.output])
    }
}

/// Threshold a = (1/0.99)·Δ·(1/D)·K·N₁ as an exact reduced rational, with
/// the dyadic Δ.
pub fn gadget_threshold(params: &Params) -> Result<(u64, u64)> {
    let dims = params.dims()?;
    let num = product(&[
        100,
        dims.delta_mantissa,
        dims.min_rows as u128,
        dims.cols as u128,
    ])?;
    let den = product(&[99, 1u128 << DELTA_FRAC_BITS, dims.density as u128])?;
    let (num, den) = reduce(num, den);
    Ok((
        u64::try_from(num).map_err(|_| Error::Overflow("gadget threshold"))?,
        u64::try_from(den).map_err(|_| Error::Overflow("gadget threshold"))?,
    ))
}

/// Build the balance checker for a table shape. Equality tests, indicators,
/// and input negations are shared across pairs, so the size stays well under
/// the structural bound pairs·(K·N₁·(|A|·(m+1)+1)+1)+1 gates asserted here.
pub fn build_balance_circuit(params: &Params, guards: &Guards) -> Result<Circuit> {
    let dims = params.dims()?;
    let pairs = binomial_saturating(dims.rows, dims.min_rows)
        .saturating_mul(binomial_saturating(dims.colors, dims.a_size));
    guards.admit("build_balance_circuit", pairs)?;
    let per_pair = (dims.min_rows as u128 * dims.cols as u128)
        .checked_mul(dims.a_size as u128 * (params.m as u128 + 1) + 1)
        .and_then(|v| v.checked_add(1))
        .ok_or(Error::Overflow("circuit size bound"))?;
    let size_bound = pairs
        .checked_mul(per_pair)
        .and_then(|v| v.checked_add(1))
        .ok_or(Error::Overflow("circuit size bound"))?;
    guards.admit("build_balance_circuit gates", size_bound)?;

    let input_width = dims.bits as usize;
    let (a_num, a_den) = gadget_threshold(params)?;
    let mut gates: Vec<Gate> = Vec::new();
    let push = |gates: &mut Vec<Gate>, gate: Gate| -> usize {
        gates.push(gate);
        input_width + gates.len() - 1
    };

    // Shared NOT wires per input bit, created on first use.
    let mut not_wire: Vec<Option<usize>> = vec![None; input_width];
    // Shared equality tests per (cell, color) and indicators per (cell, A).
    let mut eq_wire: HashMap<(u64, Color), usize> = HashMap::new();
    let mut ind_wire: HashMap<(u64, u64), usize> = HashMap::new();

    let m = params.m;
    let mut gadgets: Vec<usize> = Vec::new();
    let mut b = first_combination(dims.rows, dims.min_rows)
        .ok_or_else(|| Error::Domain("K exceeds N".into()))?;
    let mut pair_count = 0u64;
    loop {
        let mut a = first_combination(dims.colors, dims.a_size).expect("a_size <= colors");
        let mut a_rank = 0u64;
        loop {
            let mut indicators = Vec::with_capacity((dims.min_rows * dims.cols) as usize);
            for &x in &b {
                for y in 0..dims.cols {
                    let cell = x * dims.cols + y;
                    let wire = *ind_wire.entry((cell, a_rank)).or_insert_with(|| {
                        let eqs: Vec<usize> = a
                            .iter()
                            .map(|&color| {
                                *eq_wire.entry((cell, color as Color)).or_insert_with(|| {
                                    let literals: Vec<usize> = (0..m)
                                        .map(|bit| {
                                            let input = (cell * m as u64 + bit as u64) as usize;
                                            if color >> (m - 1 - bit) & 1 == 1 {
                                                input
                                            } else {
                                                *not_wire[input].get_or_insert_with(|| {
                                                    push(&mut gates, Gate::Not { input })
                                                })
                                            }
                                        })
                                        .collect();
                                    push(&mut gates, Gate::And { inputs: literals })
                                })
                            })
                            .collect();
                        push(&mut gates, Gate::Or { inputs: eqs })
                    });
                    indicators.push(wire);
                }
            }
            gadgets.push(push(
                &mut gates,
                Gate::ApproxThreshold {
                    inputs: indicators,
                    a_num,
                    a_den,
                    eps_num: EPS_NUM,
                    eps_den: EPS_DEN,
                },
            ));
            pair_count += 1;
            a_rank += 1;
            if !next_combination(&mut a, dims.colors) {
                break;
            }
        }
        if !next_combination(&mut b, dims.rows) {
            break;
        }
    }
    let output = push(&mut gates, Gate::And { inputs: gadgets });
    assert!(
        (gates.len() as u128) <= size_bound,
        "gate count {} exceeds structural bound {}",
        gates.len(),
        size_bound
    );
    Ok(Circuit {
        input_width,
        gates,
        output,
        pair_count,
    })
}

/// Does the circuit accept this table's encoding?
pub fn circuit_accepts(circuit: &Circuit, table: &Table) -> Result<bool> {
    circuit.evaluate(&table.encode_bits())
}

/// The two sandwich directions for one table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SandwichReport {
    pub accepts: bool,
    /// Exact checker verdict at slack Δ.
    pub balanced_at_unit: bool,
    /// Exact checker verdict at slack 1.03·Δ.
    pub balanced_at_relaxed: bool,
    /// accepts ⟹ balanced at 1.03·Δ.
    pub soundness_ok: bool,
    /// balanced at Δ ⟹ accepts.
    pub completeness_ok: bool,
}

/// Evaluate the sandwich on one table: the circuit may answer either way in
/// the gap between Δ and 1.03·Δ, but never outside it.
pub fn check_soundness_completeness(
    circuit: &Circuit,
    table: &Table,
    guards: &Guards,
) -> Result<SandwichReport> {
    let accepts = circuit_accepts(circuit, table)?;
    let balanced_at_unit = is_balanced_exact_scaled(table, ThresholdScale::UNIT, guards)?.is_none();
    let balanced_at_relaxed =
        is_balanced_exact_scaled(table, ThresholdScale::RELAXED_103, guards)?.is_none();
    Ok(SandwichReport {
        accepts,
        balanced_at_unit,
        balanced_at_relaxed,
        soundness_ok: !accepts || balanced_at_relaxed,
        completeness_ok: !balanced_at_unit || accepts,
    })
}
