//! Shared fixtures for the criterion benches.

use bnbench_cli::synth::{gen_ground_truth, GenSpec};
use bnbench_core::model::{forward_sample, DiscreteBn};
use bnbench_core::Dataset;

/// The 27-node synthetic network and `n` rows sampled from it.
pub fn housing(n: usize, seed: u64) -> (DiscreteBn, Dataset) {
    let bn = gen_ground_truth(&GenSpec::housing(seed)).expect("default spec is feasible");
    let d = forward_sample(&bn, n, seed ^ 0x5eed).expect("n > 0");
    (bn, d)
}
