//! Neumann eigenbasis on a box: transforms, fractional powers, diagonal
//! solves, spectral derivatives and the `H^s` / `H^{-s}` pairings.

mod field;
mod grid;
mod operator;
mod snapshot;
pub mod transform;

pub use field::{Representation, ScalarField};
pub use grid::{GridSpec, MIN_NODES};
pub use operator::{FractionalOperator, DEFAULT_MEAN_TOL};
pub use snapshot::{read_snapshot, snapshot_paths, write_snapshot, SnapshotHeader};
