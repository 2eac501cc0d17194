//! Shared fixtures for the benchmarks.

use swnoon::herald::{write_state, WriteParams};
use swnoon::FockVector;

/// Write state at the default excitation probability and the given cutoff.
pub fn write_fixture(cutoff: usize) -> FockVector {
    write_state(&WriteParams { chi: 0.01, cutoff }).expect("valid write parameters")
}
