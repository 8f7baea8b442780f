//! Synthetic workloads: skewed traces, routing tables and update streams.
//!
//! Everything here is a pure function of its inputs and a 64-bit seed.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{FibUpdate, ScheduledUpdate};
use crate::prefix::{mask, IpAddr32, IpPrefix, NextHop};
use crate::trie::FibTrie;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkloadError {
    #[error("invalid workload: {0}")]
    InvalidSpec(String),
}

/// Which destinations a Zipf trace draws from.
#[derive(Debug, Clone, PartialEq)]
pub enum Population {
    /// Every route in the RIB is ranked.
    AllRoutes,
    /// Only the first `n` routes of the seeded ranking carry traffic; the
    /// rest of the table is idle.
    ActiveRoutes(usize),
    /// Rank an explicit destination list instead of routes.
    Destinations(Vec<IpAddr32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZipfSpec {
    pub packets: u64,
    /// Zipf exponent; must be positive.
    pub skew: f64,
    pub seed: u64,
    pub population: Population,
}

impl Default for ZipfSpec {
    fn default() -> Self {
        ZipfSpec {
            packets: 1_000_000,
            skew: 1.0,
            seed: 1,
            population: Population::AllRoutes,
        }
    }
}

/// A generated trace and the ranking it was drawn from (rank 1 first).
/// For route populations each ranked item is a route prefix; for an
/// explicit destination list it is the `/32` of each destination.
#[derive(Debug, Clone, PartialEq)]
pub struct ZipfTrace {
    pub destinations: Vec<IpAddr32>,
    pub ranking: Vec<IpPrefix>,
}

/// Inverse-CDF sampler over ranks `0..n` with mass proportional to
/// `(rank + 1)^-s`.
#[derive(Debug, Clone)]
pub struct ZipfSampler {
    cdf: Vec<f64>,
}

impl ZipfSampler {
    pub fn new(n: usize, s: f64) -> Self {
        let mut acc = 0.0;
        let cdf = (1..=n)
            .map(|r| {
                acc += (r as f64).powf(-s);
                acc
            })
            .collect();
        ZipfSampler { cdf }
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    /// A 0-based rank.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("sampler over an empty population");
        let u = rng.random::<f64>() * total;
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1)
    }
}

/// Draws a uniform address from `route` that the table resolves to `route`
/// itself, retrying a bounded number of times; falls back to the last draw
/// when more-specific routes cover (nearly) all of it.
fn address_in_own_region(trie: &FibTrie, route: IpPrefix, rng: &mut ChaCha8Rng) -> IpAddr32 {
    const ATTEMPTS: usize = 64;
    let host_mask = !mask(route.len());
    let mut addr = route.addr();
    for _ in 0..ATTEMPTS {
        addr = IpAddr32(route.addr().0 | (rng.next_u32() & host_mask));
        if trie.lpm(addr).is_some_and(|(m, _)| m == route) {
            break;
        }
    }
    addr
}

/// Generates a Zipf-skewed destination trace over `rib`.
///
/// Routes (or destinations) are ranked by a seeded shuffle, ranks are drawn
/// from Zipf(`skew`), and each drawn route contributes a uniformly random
/// address that it matches more specifically than any other route.
pub fn generate_zipf(
    rib: &[(IpPrefix, NextHop)],
    spec: &ZipfSpec,
) -> Result<ZipfTrace, WorkloadError> {
    if spec.skew <= 0.0 || !spec.skew.is_finite() {
        return Err(WorkloadError::InvalidSpec(format!(
            "skew must be positive, got {}",
            spec.skew
        )));
    }
    if spec.packets == 0 {
        return Err(WorkloadError::InvalidSpec(
            "packet count must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    if let Population::Destinations(list) = &spec.population {
        if list.is_empty() {
            return Err(WorkloadError::InvalidSpec("empty destination list".into()));
        }
        let mut ranked = list.clone();
        ranked.shuffle(&mut rng);
        let sampler = ZipfSampler::new(ranked.len(), spec.skew);
        let destinations = (0..spec.packets)
            .map(|_| ranked[sampler.sample(&mut rng)])
            .collect();
        let ranking = ranked.into_iter().map(|a| IpPrefix::of(a, 32)).collect();
        return Ok(ZipfTrace {
            destinations,
            ranking,
        });
    }

    let trie = FibTrie::build(rib.iter().copied());
    // Address order gives a ranking independent of RIB line order.
    let mut ranked: Vec<IpPrefix> = trie.routes().into_iter().map(|(p, _)| p).collect();
    if ranked.is_empty() {
        return Err(WorkloadError::InvalidSpec("empty RIB".into()));
    }
    ranked.shuffle(&mut rng);
    if let Population::ActiveRoutes(n) = spec.population {
        if n == 0 {
            return Err(WorkloadError::InvalidSpec(
                "active route count must be positive".into(),
            ));
        }
        ranked.truncate(n);
    }
    let sampler = ZipfSampler::new(ranked.len(), spec.skew);
    let destinations = (0..spec.packets)
        .map(|_| {
            let route = ranked[sampler.sample(&mut rng)];
            address_in_own_region(&trie, route, &mut rng)
        })
        .collect();
    Ok(ZipfTrace {
        destinations,
        ranking: ranked,
    })
}

/// Rough prefix-length mix of a global IPv4 table.
const LENGTH_WEIGHTS: &[(u8, u32)] = &[
    (8, 2),
    (10, 3),
    (12, 8),
    (13, 10),
    (14, 15),
    (15, 20),
    (16, 220),
    (17, 60),
    (18, 110),
    (19, 230),
    (20, 320),
    (21, 420),
    (22, 700),
    (23, 650),
    (24, 5900),
];

/// A synthetic RIB of exactly `n` distinct routes (n ≥ 1), starting with a
/// default route. Next hops are drawn from `next_hops` labels.
pub fn synthetic_rib(n: usize, next_hops: u32, seed: u64) -> Vec<(IpPrefix, NextHop)> {
    assert!(n >= 1, "a synthetic RIB needs at least the default route");
    assert!(next_hops >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: u32 = LENGTH_WEIGHTS.iter().map(|(_, w)| w).sum();
    let mut seen = std::collections::HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    seen.insert(IpPrefix::DEFAULT);
    out.push((IpPrefix::DEFAULT, NextHop(0)));
    while out.len() < n {
        let mut pick = rng.random_range(0..total);
        let len = LENGTH_WEIGHTS
            .iter()
            .find(|(_, w)| {
                if pick < *w {
                    true
                } else {
                    pick -= w;
                    false
                }
            })
            .map(|(l, _)| *l)
            .expect("weights cover the range");
        let prefix = IpPrefix::of(IpAddr32(rng.next_u32()), len);
        if seen.insert(prefix) {
            out.push((prefix, NextHop(rng.random_range(0..next_hops))));
        }
    }
    out
}

/// A stream of `count` FIB updates against `rib`, spread over packets
/// `1..=packets` and sorted by sequence number. Roughly half are inserts
/// (mostly more-specifics of existing routes, some next-hop changes) and
/// half withdrawals of non-default routes. Every withdrawal targets a route
/// that exists at that point in the stream.
pub fn synthetic_updates(
    rib: &[(IpPrefix, NextHop)],
    count: usize,
    packets: u64,
    next_hops: u32,
    seed: u64,
) -> Vec<ScheduledUpdate> {
    assert!(packets >= 1 && next_hops >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut live: Vec<IpPrefix> = FibTrie::build(rib.iter().copied())
        .routes()
        .into_iter()
        .map(|(p, _)| p)
        .filter(|p| !p.is_default())
        .collect();
    let mut seqs: Vec<u64> = (0..count).map(|_| rng.random_range(1..=packets)).collect();
    seqs.sort_unstable();

    let mut out = Vec::with_capacity(count);
    for seq in seqs {
        let roll = rng.random_range(0..100);
        let update = if roll < 45 && !live.is_empty() {
            let i = rng.random_range(0..live.len());
            FibUpdate::Withdraw(live.swap_remove(i))
        } else if roll < 55 && !live.is_empty() {
            let p = live[rng.random_range(0..live.len())];
            FibUpdate::Insert(p, NextHop(rng.random_range(0..next_hops)))
        } else {
            let p = if !live.is_empty() && rng.random_bool(0.8) {
                let base = live[rng.random_range(0..live.len())];
                let extra = rng.random_range(1..=8u8);
                IpPrefix::of(
                    IpAddr32(base.addr().0 | (rng.next_u32() & !mask(base.len()))),
                    (base.len() + extra).min(32),
                )
            } else {
                IpPrefix::of(IpAddr32(rng.next_u32()), rng.random_range(8..=24))
            };
            if !live.contains(&p) && !p.is_default() {
                live.push(p);
            }
            FibUpdate::Insert(p, NextHop(rng.random_range(0..next_hops)))
        };
        out.push(ScheduledUpdate {
            before_seq: seq,
            update,
        });
    }
    out
}
