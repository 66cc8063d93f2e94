//! Fixed-order bit strings.
//!
//! `Bits` stores a sequence of bits packed MSB-first into bytes: bit `i` of
//! the string lives in byte `i / 8` at bit position `7 - i % 8`. Unused
//! positions in the final byte are kept at zero, so equal strings have equal
//! byte payloads and the payload can be written to disk verbatim.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits {
    bytes: Vec<u8>,
    len: usize,
}

impl Bits {
    pub fn new() -> Self {
        Bits::default()
    }

    /// Empty string with room reserved for `bits` pushes.
    pub fn with_capacity(bits: usize) -> Self {
        Bits {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    /// All-zero string of the given length.
    pub fn zeros(len: usize) -> Self {
        Bits {
            bytes: vec![0; len.div_ceil(8)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Packed bytes, MSB-first, final byte zero-padded.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Rebuild from packed bytes; padding bits in the final byte are masked
    /// off so the invariant holds regardless of the source.
    pub fn from_bytes(len: usize, bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Codec(format!(
                "payload of {} bytes cannot hold exactly {len} bits",
                bytes.len()
            )));
        }
        let mut bits = Bits { bytes, len };
        let tail = len % 8;
        if tail != 0 {
            if let Some(last) = bits.bytes.last_mut() {
                *last &= !(0xFFu8 >> tail);
            }
        }
        Ok(bits)
    }

    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of {}", self.len);
        (self.bytes[index / 8] >> (7 - index % 8)) & 1 == 1
    }

    pub fn set(&mut self, index: usize, value: bool) {
        assert!(index < self.len, "bit index {index} out of {}", self.len);
        let mask = 1u8 << (7 - index % 8);
        if value {
            self.bytes[index / 8] |= mask;
        } else {
            self.bytes[index / 8] &= !mask;
        }
    }

    pub fn push(&mut self, value: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        self.len += 1;
        if value {
            self.set(self.len - 1, true);
        }
    }

    pub fn extend(&mut self, other: &Bits) {
        for bit in other.iter() {
            self.push(bit);
        }
    }

    /// Append the low `width` bits of `value`, most significant first.
    pub fn push_uint_msb(&mut self, value: u64, width: u32) {
        assert!(width <= 64);
        for shift in (0..width).rev() {
            self.push((value >> shift) & 1 == 1);
        }
    }

    /// Read `width` bits starting at `start`, most significant first.
    pub fn read_uint_msb(&self, start: usize, width: u32) -> u64 {
        assert!(width <= 64);
        let mut acc = 0u64;
        for i in 0..width as usize {
            acc = (acc << 1) | self.get(start + i) as u64;
        }
        acc
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn starts_with(&self, prefix: &Bits) -> bool {
        prefix.len <= self.len && prefix.iter().enumerate().all(|(i, b)| self.get(i) == b)
    }

    /// Parse from ASCII `0`/`1`.
    pub fn from_binary_str(text: &str) -> Result<Self> {
        let mut bits = Bits::new();
        for ch in text.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::Codec(format!(
                        "invalid character {other:?} in bit string"
                    )))
                }
            }
        }
        Ok(bits)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        let mut bits = Bits::new();
        for b in iter {
            bits.push(b);
        }
        bits
    }
}
