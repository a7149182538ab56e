//! Shared fixtures for the solver benchmarks.

use pinnflow_core::net::NetworkParams;

/// The full-scale network used in the published experiments: seven tanh
/// layers of width 50 mapping (x, y, t) to the five flow outputs.
pub fn paper_network(seed: u64) -> NetworkParams {
    let mut arch = vec![3];
    arch.extend([50; 7]);
    arch.push(5);
    NetworkParams::init(&arch, seed).expect("static architecture is valid")
}
