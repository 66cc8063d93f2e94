//! Toolkit for (K, D, Δ)-balanced tables: two-argument color tables in which
//! no large row set concentrates its cells on any dense color set much beyond
//! the color set's density.
//!
//! The crate provides the table representation and its canonical bit encoding
//! ([`table`]), exact / exhaustive / sampled balance checkers ([`balance`]),
//! probabilistic, brute-force, and seed-enumerated constructions ([`construct`],
//! [`nw`]), rank certificates for cells landing in a color set ([`compress`]),
//! a constant-depth checking circuit ([`circuit`]), closed-form bound
//! calculators ([`params`]), and a self-delimiting pair code ([`codec`]).

pub mod balance;
pub mod bits;
pub mod circuit;
pub mod codec;
pub mod compress;
pub mod construct;
pub mod error;
pub mod guard;
pub mod nw;
pub mod params;
pub mod ratio;
pub mod rng;
pub mod sets;
pub mod table;

pub use error::{Error, Result};
pub use guard::Guards;
pub use params::Params;
pub use table::Table;
