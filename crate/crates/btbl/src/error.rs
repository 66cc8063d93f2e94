//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A row, column, color, or seed index outside its domain.
    #[error("{what} = {index} out of range (must be < {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: u64,
        limit: u64,
    },

    /// A numeric argument outside the domain of the requested computation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation whose estimated work exceeds the configured cost guard.
    #[error("guard exceeded in {operation}: estimated work {estimate} > limit {limit} \
             (override with BTBL_GUARD_LIMIT)")]
    GuardExceeded {
        operation: &'static str,
        estimate: u128,
        limit: u128,
    },

    /// Randomized construction used up its attempt budget without success.
    #[error("construction failed: no balanced table within {tries} attempts")]
    TriesExhausted { tries: u64 },

    /// Greedy design ran out of candidate sets.
    #[error("design exhausted: needed {needed} sets, achieved {achieved}")]
    DesignExhausted { needed: u64, achieved: u64 },

    /// Rank encoding asked for a cell that does not land in the color set.
    #[error("cell at row {row}, column {col} is not in the color set")]
    NotInColorSet { row: u64, col: u64 },

    /// Rank decoding asked for a rank the row does not reach.
    #[error("rank {rank} out of range: row has only {rank_space} matching cells")]
    RankOutOfRange { rank: u64, rank_space: u64 },

    /// Circuit evaluation with an input of the wrong width.
    #[error("input width {got} does not match circuit input width {expected}")]
    WidthMismatch { got: usize, expected: usize },

    /// Malformed self-delimiting encoding.
    #[error("malformed encoding: {0}")]
    Codec(String),

    /// Malformed table file.
    #[error("bad table file: {0}")]
    Format(String),

    /// Integer arithmetic left the representable range.
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
