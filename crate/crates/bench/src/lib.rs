//! Shared fixtures for the benchmarks.

use pfcs_core::workload::{generate_zipf, synthetic_rib};
use pfcs_core::{IpAddr32, IpPrefix, NextHop, Population, ZipfSpec};

/// A synthetic RIB and a Zipf trace over a subset of its routes.
pub fn fixture(
    routes: usize,
    packets: u64,
    active: usize,
) -> (Vec<(IpPrefix, NextHop)>, Vec<IpAddr32>) {
    let rib = synthetic_rib(routes, 32, 7);
    let trace = generate_zipf(
        &rib,
        &ZipfSpec {
            packets,
            skew: 1.0,
            seed: 1,
            population: Population::ActiveRoutes(active),
        },
    )
    .expect("valid workload");
    (rib, trace.destinations)
}
