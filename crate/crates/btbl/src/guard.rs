//! Cost guards for operations whose work grows combinatorially.
//!
//! Every exhaustive routine estimates its work up front and refuses to run
//! past the configured limit, reporting the estimate instead of hanging.
//! The `BTBL_GUARD_LIMIT` environment variable overrides the default limit.

use crate::error::{Error, Result};

/// Default ceiling on combinatorial work (pair enumerations, subset sweeps).
pub const DEFAULT_WORK_LIMIT: u128 = 10_000_000;

/// Default ceiling on the bit width of a full table enumeration
/// (2^bits tables are walked, so 24 bits already means ~1.7e7 tables).
pub const DEFAULT_TABLE_ENUM_BITS: u32 = 24;

#[derive(Debug, Clone, Copy)]
pub struct Guards {
    /// Upper bound on estimated enumeration work (number of units visited).
    pub work_limit: u128,
    /// Upper bound on N·N₁·m for whole-table enumeration.
    pub table_enum_bits: u32,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            work_limit: DEFAULT_WORK_LIMIT,
            table_enum_bits: DEFAULT_TABLE_ENUM_BITS,
        }
    }
}

impl Guards {
    /// Defaults, with `BTBL_GUARD_LIMIT` (if set and parseable) replacing the
    /// work limit.
    pub fn from_env() -> Self {
        let mut guards = Guards::default();
        if let Ok(raw) = std::env::var("BTBL_GUARD_LIMIT") {
            if let Ok(limit) = raw.trim().parse::<u128>() {
                guards.work_limit = limit;
            }
        }
        guards
    }

    /// Rejects `operation` if its estimated work exceeds the limit.
    pub fn admit(&self, operation: &'static str, estimate: u128) -> Result<()> {
        if estimate > self.work_limit {
            return Err(Error::GuardExceeded {
                operation,
                estimate,
                limit: self.work_limit,
            });
        }
        Ok(())
    }
}
