//! Self-delimiting pairing of bit strings.
//!
//! A pair (x₁, x₂) is encoded as double(bin(|x₂|)) ++ 01 ++ x₁ ++ x₂, where
//! bin writes a length in minimal binary (zero is the empty string) and
//! double repeats every bit. A decoder that knows where the string ends can
//! split it without any other context: doubled bits come in 00/11 pairs, the
//! first 01 pair terminates the length field, and the tail splits by |x₂|
//! counted from the right. The cost over the raw bits is
//! 2·⌈log₂(|x₂|+1)⌉ + 2.
//!
//! Concatenations of such encodings are *not* prefix-free in general — with
//! x₁ of varying length, one encoding can be a strict prefix of another —
//! but within a family that fixes |x₁| the encoding map is prefix-free,
//! which is what counting arguments over fixed-length first components need.

use crate::bits::Bits;
use crate::error::{Error, Result};

/// Every bit twice: 1011 → 11001111.
pub fn double_bits(x: &Bits) -> Bits {
    let mut out = Bits::with_capacity(2 * x.len());
    for bit in x.iter() {
        out.push(bit);
        out.push(bit);
    }
    out
}

/// Inverse of [`double_bits`]; rejects odd lengths and mismatched pairs.
pub fn undouble_bits(x: &Bits) -> Result<Bits> {
    if x.len() % 2 != 0 {
        return Err(Error::Codec("doubled string has odd length".into()));
    }
    let mut out = Bits::with_capacity(x.len() / 2);
    for i in (0..x.len()).step_by(2) {
        let (a, b) = (x.get(i), x.get(i + 1));
        if a != b {
            return Err(Error::Codec(format!("unpaired bits at offset {i}")));
        }
        out.push(a);
    }
    Ok(out)
}

/// Minimal binary, most significant bit first; zero is the empty string.
pub fn minimal_binary(value: u64) -> Bits {
    let width = 64 - value.leading_zeros();
    let mut out = Bits::with_capacity(width as usize);
    out.push_uint_msb(value, width);
    out
}

/// Parse a minimal-binary length field back to a number.
fn parse_length(bits: &Bits) -> Result<u64> {
    if bits.len() > 63 {
        return Err(Error::Codec("length field longer than 63 bits".into()));
    }
    if !bits.is_empty() && !bits.get(0) {
        return Err(Error::Codec("length field has a leading zero".into()));
    }
    let mut value = 0u64;
    for bit in bits.iter() {
        value = value << 1 | bit as u64;
    }
    Ok(value)
}

/// Encoded length of a pair: |x₁| + |x₂| + 2·⌈log₂(|x₂|+1)⌉ + 2.
pub fn encoded_pair_len(len1: u64, len2: u64) -> u64 {
    let width = 64 - len2.leading_zeros() as u64;
    len1 + len2 + 2 * width + 2
}

/// double(bin(|x₂|)) ++ 01 ++ x₁ ++ x₂.
pub fn encode_pair(x1: &Bits, x2: &Bits) -> Bits {
    let mut out = double_bits(&minimal_binary(x2.len() as u64));
    out.push(false);
    out.push(true);
    out.extend(x1);
    out.extend(x2);
    out
}

/// Split an encoding back into (x₁, x₂).
pub fn decode_pair(bits: &Bits) -> Result<(Bits, Bits)> {
    // Scan bit pairs: 00/11 extend the length field, 01 ends it, 10 is
    // impossible in a well-formed prefix.
    let mut length_bits = Bits::new();
    let mut offset = 0;
    loop {
        if offset + 2 > bits.len() {
            return Err(Error::Codec("input ends inside the length field".into()));
        }
        let (a, b) = (bits.get(offset), bits.get(offset + 1));
        offset += 2;
        match (a, b) {
            (false, true) => break,
            (true, false) => {
                return Err(Error::Codec(format!("pair 10 at offset {}", offset - 2)))
            }
            (bit, _) => length_bits.push(bit),
        }
    }
    let len2 = parse_length(&length_bits)? as usize;
    let payload = bits.len() - offset;
    if len2 > payload {
        return Err(Error::Codec(format!(
            "second component needs {len2} bits but only {payload} remain"
        )));
    }
    let split = offset + (payload - len2);
    let mut x1 = Bits::with_capacity(payload - len2);
    for i in offset..split {
        x1.push(bits.get(i));
    }
    let mut x2 = Bits::with_capacity(len2);
    for i in split..bits.len() {
        x2.push(bits.get(i));
    }
    Ok((x1, x2))
}

/// Right-nested tuple encoding: (x₁, …, x_k) ↦ pair(x₁, pair(x₂, …)); a
/// one-element tuple is the element itself.
pub fn encode_tuple(parts: &[Bits]) -> Result<Bits> {
    match parts {
        [] => Err(Error::Codec("cannot encode an empty tuple".into())),
        [only] => Ok(only.clone()),
        [first, rest @ ..] => Ok(encode_pair(first, &encode_tuple(rest)?)),
    }
}

/// Inverse of [`encode_tuple`] for a known arity.
pub fn decode_tuple(bits: &Bits, arity: usize) -> Result<Vec<Bits>> {
    if arity == 0 {
        return Err(Error::Codec("cannot decode an empty tuple".into()));
    }
    let mut parts = Vec::with_capacity(arity);
    let mut rest = bits.clone();
    for _ in 0..arity - 1 {
        let (head, tail) = decode_pair(&rest)?;
        parts.push(head);
        rest = tail;
    }
    parts.push(rest);
    Ok(parts)
}
