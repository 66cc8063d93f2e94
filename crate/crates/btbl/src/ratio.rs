//! Exact nonnegative rationals as reduced `(numerator, denominator)` pairs.
//!
//! Thresholds in this crate are rationals with modest factors; all we ever
//! need is reduction, comparison against integer counts, and equality, so a
//! pair of `u128`s with explicit cross-multiplication keeps every comparison
//! exact.

use num_integer::Integer;

use crate::error::{Error, Result};

/// Reduce `num/den` to lowest terms. `den` must be nonzero.
pub fn reduce(num: u128, den: u128) -> (u128, u128) {
    assert!(den != 0, "zero denominator");
    if num == 0 {
        return (0, 1);
    }
    let g = num.gcd(&den);
    (num / g, den / g)
}

/// Exact comparison `a/b > c/d` by cross-multiplication, failing on overflow
/// rather than silently wrapping.
pub fn gt(a: u128, b: u128, c: u128, d: u128) -> Result<bool> {
    let lhs = a.checked_mul(d).ok_or(Error::Overflow("ratio compare"))?;
    let rhs = c.checked_mul(b).ok_or(Error::Overflow("ratio compare"))?;
    Ok(lhs > rhs)
}

/// Checked product of a slice of factors.
pub fn product(factors: &[u128]) -> Result<u128> {
    let mut acc: u128 = 1;
    for &f in factors {
        acc = acc.checked_mul(f).ok_or(Error::Overflow("product"))?;
    }
    Ok(acc)
}

/// Parse a nonnegative decimal literal such as `"1.03"` or `"2"` into a
/// reduced rational (103, 100), (2, 1).
pub fn parse_decimal(text: &str) -> Result<(u128, u128)> {
    let text = text.trim();
    let bad = || Error::Domain(format!("not a nonnegative decimal literal: {text:?}"));
    if text.is_empty() {
        return Err(bad());
    }
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let digits = |s: &str| s.is_empty() || s.bytes().all(|b| b.is_ascii_digit());
    if !digits(int_part) || !digits(frac_part) {
        return Err(bad());
    }
    let mut num: u128 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| bad())?
    };
    let mut den: u128 = 1;
    for b in frac_part.bytes() {
        num = num
            .checked_mul(10)
            .and_then(|v| v.checked_add((b - b'0') as u128))
            .ok_or(Error::Overflow("decimal literal"))?;
        den = den.checked_mul(10).ok_or(Error::Overflow("decimal literal"))?;
    }
    Ok(reduce(num, den))
}
