//! Shared fixtures for the solver benchmarks.

use convwave_core::{Grid, InitialData, KernelSpec, SimConfig};

/// Deltas used by the rate benchmarks.
pub const DELTAS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

/// Default rate-experiment configuration on an `n`-point grid over [-30, 30).
pub fn config(kernel: KernelSpec, n: usize) -> SimConfig {
    let grid = Grid::new(n, 30.0).expect("valid grid size");
    SimConfig::new(kernel, 0.1, InitialData::DEFAULT.sample(grid))
}
