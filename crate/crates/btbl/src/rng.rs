//! Deterministic random numbers from SplitMix64.
//!
//! Everything randomized in this crate draws from this one generator so that
//! results are reproducible from a single 64-bit seed on any platform. The
//! generator is counter-based: output i of the stream seeded with `s` is
//! `mix64(s + (i+1)·GOLDEN_GAMMA)`, so any output can also be computed
//! directly without stepping through its predecessors.

/// Weyl-sequence increment: the odd integer nearest 2^64/φ.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Stafford variant 13 mixing constants).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    z
}

/// Output `index` of the stream seeded with `seed`, without iteration.
#[inline]
pub fn nth_output(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform value in `[0, bound)` by masked rejection (no modulo bias).
    /// `bound` must be nonzero.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below(0) is empty");
        if bound.is_power_of_two() {
            return self.next_u64() & (bound - 1);
        }
        let mask = bound.next_power_of_two() - 1;
        loop {
            let v = self.next_u64() & mask;
            if v < bound {
                return v;
            }
        }
    }

    /// Uniform `size`-subset of `[0, domain)` via Floyd's algorithm; returned
    /// sorted ascending.
    pub fn subset(&mut self, domain: u64, size: u64) -> Vec<u64> {
        assert!(size <= domain, "subset larger than domain");
        let mut chosen = Vec::with_capacity(size as usize);
        for j in domain - size..domain {
            let t = self.below(j + 1);
            if chosen.contains(&t) {
                chosen.push(j);
            } else {
                chosen.push(t);
            }
        }
        chosen.sort_unstable();
        chosen
    }
}
