//! Shared fixtures for the criterion benches.

use nrmips::harness::{synth_dataset, synth_queries, NormProfile};
use nrmips::{Dataset, QuerySet};

/// Log-normal norms, uniform directions, fixed seed.
pub fn fixture(n: usize, dim: usize, num_queries: usize) -> (Dataset, QuerySet) {
    let ds = synth_dataset(n, dim, NormProfile::LogNormal { sigma: 0.5 }, 42).expect("valid fixture");
    let qs = synth_queries(num_queries, dim, 42).expect("valid fixture");
    (ds, qs)
}
