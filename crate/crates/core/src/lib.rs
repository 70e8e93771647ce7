//! Agnostic online classification from offline oracles: pruned expert trees,
//! explicit expert ensembles, a subsampled wrapper and a query-aware adversary.

pub mod adversaries;
pub mod combinatorics;
pub mod concepts;
pub mod error;
pub mod harness;
pub mod learners;
pub mod oracles;
pub mod reductions;
pub mod subsampling;
pub mod verify;

pub use error::{Error, Result};
