//! A deterministic simulator of a three-tier FIB caching pipeline.
//!
//! Popular routes are served from a small TCAM cache, less popular ones from
//! a larger SRAM cache, and everything else from the full forwarding table
//! in DRAM. Only non-overlapping leaf prefixes are ever cached, so a cached
//! route can never hide a more-specific one.
//!
//! ```
//! use pfcs_core::{FibTrie, PfcsEngine, PipelineConfig, PacketRecord, ServedBy};
//!
//! let fib = FibTrie::build([
//!     ("0.0.0.0/0".parse().unwrap(), pfcs_core::NextHop(1)),
//!     ("10.0.0.0/8".parse().unwrap(), pfcs_core::NextHop(2)),
//! ]);
//! let mut engine = PfcsEngine::new(fib, PipelineConfig::default()).unwrap();
//! let out = engine
//!     .process_packet(PacketRecord { seq: 1, dst: "10.9.9.9".parse().unwrap() })
//!     .unwrap();
//! assert_eq!(out.served_by, Some(ServedBy::Dram));
//! assert_eq!(out.next_hop, Some(pfcs_core::NextHop(2)));
//! ```

pub mod cache;
pub mod engine;
pub mod io;
pub mod oracle;
pub mod prefix;
pub mod stats;
pub mod trie;
pub mod workload;

pub use cache::{CacheEntry, CacheError, CacheTier, InstallOutcome, TierKind};
pub use engine::{
    replay, EngineError, FibUpdate, ForwardingOutcome, InvariantViolation, PacketRecord,
    PfcsEngine, PipelineConfig, ReplayError, ReplayEvent, ScheduledUpdate, ServedBy, Snapshot,
};
pub use prefix::{parse_prefix, prefix_of, IpAddr32, IpPrefix, NextHop, PrefixError};
pub use stats::{OccupancySample, StatsError, StatsSink, Summary, WindowStat};
pub use trie::{CacheRoute, FibTrie, Invalidated, RouteLocation, TrieError, TrieStats};
pub use workload::{Population, ZipfSpec, ZipfTrace};
