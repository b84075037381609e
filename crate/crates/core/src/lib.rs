//! Coded distributed matrix multiplication.
//!
//! Build a coding plan for `AᵀB` (or `AᵀX`) over `N` workers, run it, decode
//! from whatever subset of results arrives, and analyse recovery thresholds,
//! loads and the conditioning of the decoding step.

pub mod analysis;
pub mod decoders;
pub mod error;
pub mod field;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod pattern;
pub mod rng;
pub mod schemes;
pub mod sim;

pub use error::{CcmError, Result};
pub use matrix::{assemble, direct_product, partition, random_matrix, BlockGrid, EntryDistribution, FlopCount, Matrix};
pub use pattern::CompletionPattern;
