//! The packet pipeline: TCAM, then SRAM and DRAM in parallel.
//!
//! Every packet first probes the TCAM tier. On a miss its header is
//! "cloned": the SRAM tier and the full table in DRAM both see it and the
//! DRAM-side residency flag decides which copy forwards. An SRAM miss is
//! forwarded by DRAM, which then generates a leaf route for the destination
//! and installs it into SRAM. SRAM hits may promote their entry into the
//! TCAM when it outweighs the TCAM's lightest hitter; the displaced TCAM
//! entry is demoted back to SRAM.

use std::fmt;

use thiserror::Error;

use crate::cache::{CacheError, CacheTier, TierKind};
use crate::prefix::{IpAddr32, IpPrefix, NextHop};
use crate::stats::{StatsSink, Summary};
use crate::trie::{CacheRoute, FibTrie, RouteLocation, TrieError, TrieStats};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub tcam_capacity: usize,
    pub sram_capacity: usize,
    /// Number of light traffic hitters tracked per tier.
    pub victim_set_size: usize,
    /// An SRAM entry must exceed the lightest TCAM hitter by more than this
    /// to displace it.
    pub promotion_margin: u64,
    /// Counters are halved every this many packets.
    pub aging_epoch: u64,
    /// Miss ratios are reported every this many packets.
    pub stats_window: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tcam_capacity: 10_000,
            sram_capacity: 20_000,
            victim_set_size: 8,
            promotion_margin: 0,
            aging_epoch: 1_000_000,
            stats_window: 100_000,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let checks = [
            ("tcam_capacity", self.tcam_capacity as u64),
            ("sram_capacity", self.sram_capacity as u64),
            ("victim_set_size", self.victim_set_size as u64),
            ("aging_epoch", self.aging_epoch),
            ("stats_window", self.stats_window),
        ];
        match checks.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(EngineError::InvalidConfig(name)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRecord {
    pub seq: u64,
    pub dst: IpAddr32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ServedBy {
    Tcam,
    Sram,
    Dram,
}

impl fmt::Display for ServedBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ServedBy::Tcam => "TCAM",
            ServedBy::Sram => "SRAM",
            ServedBy::Dram => "DRAM",
        })
    }
}

/// What happened to one packet. `next_hop` and `served_by` are both `None`
/// exactly when the packet was dropped for lack of a route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForwardingOutcome {
    pub next_hop: Option<NextHop>,
    pub served_by: Option<ServedBy>,
    pub installed: Option<CacheRoute>,
    pub promoted: Option<IpPrefix>,
    pub evictions: Vec<(TierKind, IpPrefix)>,
}

impl ForwardingOutcome {
    fn served(next_hop: NextHop, by: ServedBy) -> Self {
        ForwardingOutcome {
            next_hop: Some(next_hop),
            served_by: Some(by),
            installed: None,
            promoted: None,
            evictions: Vec::new(),
        }
    }

    fn dropped() -> Self {
        ForwardingOutcome {
            next_hop: None,
            served_by: None,
            installed: None,
            promoted: None,
            evictions: Vec::new(),
        }
    }

    pub fn is_dropped(&self) -> bool {
        self.served_by.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FibUpdate {
    Insert(IpPrefix, NextHop),
    Withdraw(IpPrefix),
}

impl fmt::Display for FibUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FibUpdate::Insert(p, nh) => write!(f, "I {p} {nh}"),
            FibUpdate::Withdraw(p) => write!(f, "W {p}"),
        }
    }
}

/// A FIB update to apply before the packet with sequence number `before_seq`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledUpdate {
    pub before_seq: u64,
    pub update: FibUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Snapshot {
    pub tcam_occupancy: usize,
    pub sram_occupancy: usize,
    pub packet_count: u64,
    pub trie: TrieStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid pipeline configuration: {0} must be positive")]
    InvalidConfig(&'static str),
    #[error("sequence gap: expected packet {expected}, got {got}")]
    SequenceGap { expected: u64, got: u64 },
    #[error(transparent)]
    Trie(#[from] TrieError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("{tier} holds {prefix} but its residency flag is {flag:?}")]
    FlagMismatch {
        tier: TierKind,
        prefix: IpPrefix,
        flag: Option<RouteLocation>,
    },
}

/// A broken engine invariant, found by [`PfcsEngine::check_invariants`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantViolation {
    #[error("{tier} over capacity: {occupancy} > {capacity}")]
    Capacity {
        tier: TierKind,
        occupancy: usize,
        capacity: usize,
    },
    #[error("{0} resident in both TCAM and SRAM")]
    BothTiers(IpPrefix),
    #[error("{tier} entry {prefix} has flag {flag:?}")]
    Flag {
        tier: TierKind,
        prefix: IpPrefix,
        flag: Option<RouteLocation>,
    },
    #[error("{tier} entry {prefix} caches next hop {cached}, table says {table}")]
    StaleNextHop {
        tier: TierKind,
        prefix: IpPrefix,
        cached: NextHop,
        table: NextHop,
    },
    #[error("flag counters disagree with tiers: {in_tcam} InTcam vs {tcam} TCAM entries, {in_sram} InSram vs {sram} SRAM entries")]
    FlagCount {
        in_tcam: usize,
        tcam: usize,
        in_sram: usize,
        sram: usize,
    },
    #[error("cached prefixes {0} and {1} overlap")]
    Overlap(IpPrefix, IpPrefix),
    #[error("packet {seq} to {dst}: forwarded to {got:?}, longest match gives {want:?}")]
    WrongNextHop {
        seq: u64,
        dst: IpAddr32,
        got: Option<NextHop>,
        want: Option<NextHop>,
    },
    #[error("generated prefix {prefix} strictly covers route {route}")]
    HiddenRoute { prefix: IpPrefix, route: IpPrefix },
}

/// The three-tier forwarding engine.
#[derive(Debug, Clone)]
pub struct PfcsEngine {
    trie: FibTrie,
    tcam: CacheTier,
    sram: CacheTier,
    config: PipelineConfig,
    packets: u64,
    stats: StatsSink,
}

impl PfcsEngine {
    /// A cold engine: both caches empty.
    pub fn new(fib: FibTrie, config: PipelineConfig) -> Result<Self, EngineError> {
        config.validate()?;
        Ok(PfcsEngine {
            tcam: CacheTier::new(TierKind::Tcam, config.tcam_capacity, config.victim_set_size),
            sram: CacheTier::new(TierKind::Sram, config.sram_capacity, config.victim_set_size),
            trie: fib,
            config,
            packets: 0,
            stats: StatsSink::new(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn trie(&self) -> &FibTrie {
        &self.trie
    }

    pub fn tcam(&self) -> &CacheTier {
        &self.tcam
    }

    pub fn sram(&self) -> &CacheTier {
        &self.sram
    }

    pub fn stats(&self) -> &StatsSink {
        &self.stats
    }

    pub fn packet_count(&self) -> u64 {
        self.packets
    }

    /// Pre-loads SRAM with the leaf routes of `destinations`. TCAM stays
    /// empty and fills through promotion.
    pub fn warm_start<I>(&mut self, destinations: I) -> Result<(), EngineError>
    where
        I: IntoIterator<Item = IpAddr32>,
    {
        for dst in destinations {
            let Some(route) = self.trie.generate_cacheable(dst) else {
                continue;
            };
            if self.trie.get_location(route.prefix)? != RouteLocation::Uncached {
                continue;
            }
            let mut evictions = Vec::new();
            self.install_sram(route, self.packets, &mut evictions)?;
        }
        Ok(())
    }

    fn tier_mut(&mut self, kind: TierKind) -> &mut CacheTier {
        match kind {
            TierKind::Tcam => &mut self.tcam,
            TierKind::Sram => &mut self.sram,
        }
    }

    /// Installs into SRAM and keeps flags in sync; an evicted entry drops to
    /// `Uncached`.
    fn install_sram(
        &mut self,
        route: CacheRoute,
        seq: u64,
        evictions: &mut Vec<(TierKind, IpPrefix)>,
    ) -> Result<(), EngineError> {
        let out = self.sram.install(route, seq)?;
        if let Some(victim) = out.evicted {
            self.trie
                .set_location(victim.prefix, RouteLocation::Uncached)?;
            evictions.push((TierKind::Sram, victim.prefix));
        }
        self.trie
            .set_location(route.prefix, RouteLocation::InSram)?;
        Ok(())
    }

    pub fn process_packet(&mut self, pkt: PacketRecord) -> Result<ForwardingOutcome, EngineError> {
        let expected = self.packets + 1;
        if pkt.seq != expected {
            return Err(EngineError::SequenceGap {
                expected,
                got: pkt.seq,
            });
        }
        let outcome = self.forward(pkt)?;
        self.packets = pkt.seq;
        if self.packets.is_multiple_of(self.config.aging_epoch) {
            self.tcam.age();
            self.sram.age();
        }
        self.stats.record(outcome.served_by);
        if self.packets.is_multiple_of(self.config.stats_window) {
            self.close_window();
        }
        Ok(outcome)
    }

    fn close_window(&mut self) {
        if self.stats.close_window().is_ok() {
            let snap = self.snapshot();
            self.stats.sample_occupancy(&snap);
        }
    }

    fn forward(&mut self, pkt: PacketRecord) -> Result<ForwardingOutcome, EngineError> {
        if let Some(route) = self.tcam.lookup(pkt.dst) {
            return Ok(ForwardingOutcome::served(route.next_hop, ServedBy::Tcam));
        }

        // Header clone: the SRAM copy and the DRAM copy see the same packet.
        let sram_hit = self.sram.lookup(pkt.dst);
        if let Some(route) = sram_hit {
            let flag = self.trie.get_location(route.prefix).ok();
            if flag != Some(RouteLocation::InSram) {
                return Err(EngineError::FlagMismatch {
                    tier: TierKind::Sram,
                    prefix: route.prefix,
                    flag,
                });
            }
            // DRAM sees the flag and drops its copy; SRAM forwards.
            let mut outcome = ForwardingOutcome::served(route.next_hop, ServedBy::Sram);
            self.maybe_promote(route.prefix, pkt.seq, &mut outcome)?;
            return Ok(outcome);
        }

        // SRAM missed: DRAM forwards and teaches SRAM the leaf route.
        let Some(route) = self.trie.generate_cacheable(pkt.dst) else {
            return Ok(ForwardingOutcome::dropped());
        };
        let flag = self.trie.get_location(route.prefix)?;
        if flag != RouteLocation::Uncached {
            let tier = match flag {
                RouteLocation::InTcam => TierKind::Tcam,
                _ => TierKind::Sram,
            };
            return Err(EngineError::FlagMismatch {
                tier,
                prefix: route.prefix,
                flag: Some(flag),
            });
        }
        let mut outcome = ForwardingOutcome::served(route.next_hop, ServedBy::Dram);
        self.install_sram(route, pkt.seq, &mut outcome.evictions)?;
        outcome.installed = Some(route);
        Ok(outcome)
    }

    fn maybe_promote(
        &mut self,
        prefix: IpPrefix,
        seq: u64,
        outcome: &mut ForwardingOutcome,
    ) -> Result<(), EngineError> {
        let hits = self.sram.get(&prefix).map_or(0, |e| e.hits);
        // A free TCAM slot counts as a victim with no hits.
        let lightest = if self.tcam.is_full() {
            self.tcam
                .select_victims(self.config.victim_set_size)
                .iter()
                .filter_map(|r| self.tcam.get(&r.prefix))
                .map(|e| e.hits)
                .min()
                .unwrap_or(0)
        } else {
            0
        };
        let promote = hits > lightest.saturating_add(self.config.promotion_margin);
        if !promote {
            return Ok(());
        }

        let entry = self.sram.take(&prefix).expect("promoted entry is in SRAM");
        let out = self.tcam.install(entry.route, seq)?;
        self.trie.set_location(prefix, RouteLocation::InTcam)?;
        outcome.promoted = Some(prefix);
        if let Some(victim) = out.evicted {
            outcome.evictions.push((TierKind::Tcam, victim.prefix));
            self.install_sram(victim, seq, &mut outcome.evictions)?;
        }
        Ok(())
    }

    /// Applies a routing change and purges every cached route it
    /// invalidates. Returns the purged `(tier, prefix)` pairs.
    pub fn apply_fib_update(
        &mut self,
        update: &FibUpdate,
    ) -> Result<Vec<(TierKind, IpPrefix)>, EngineError> {
        let invalidated = match *update {
            FibUpdate::Insert(prefix, nh) => self.trie.insert_route(prefix, nh),
            FibUpdate::Withdraw(prefix) => self.trie.withdraw_route(prefix)?,
        };
        let mut purged = Vec::new();
        for inv in invalidated {
            let tier = match inv.location {
                RouteLocation::InTcam => TierKind::Tcam,
                RouteLocation::InSram => TierKind::Sram,
                RouteLocation::Uncached => continue,
            };
            if self.tier_mut(tier).remove(&inv.prefix) {
                purged.push((tier, inv.prefix));
            }
        }
        Ok(purged)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            tcam_occupancy: self.tcam.occupancy(),
            sram_occupancy: self.sram.occupancy(),
            packet_count: self.packets,
            trie: self.trie.stats(),
        }
    }

    /// Closes any partially filled stats window and returns run totals.
    pub fn finish(&mut self) -> Summary {
        if self.stats.pending_packets() > 0 {
            self.close_window();
        }
        self.stats.summary(&self.snapshot())
    }

    /// Checks capacity, tier exclusivity, flag consistency, next-hop
    /// agreement and disjointness of everything cached. Cost is linear in
    /// the number of cached entries.
    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        for tier in [&self.tcam, &self.sram] {
            if tier.occupancy() > tier.capacity() {
                return Err(InvariantViolation::Capacity {
                    tier: tier.kind(),
                    occupancy: tier.occupancy(),
                    capacity: tier.capacity(),
                });
            }
            if let Some((x, y)) = tier.find_overlap() {
                return Err(InvariantViolation::Overlap(x, y));
            }
            let want = match tier.kind() {
                TierKind::Tcam => RouteLocation::InTcam,
                TierKind::Sram => RouteLocation::InSram,
            };
            for entry in tier.entries() {
                let prefix = entry.route.prefix;
                let record = self.trie.cached_route(prefix);
                let flag = record.map(|(_, loc)| loc);
                if flag != Some(want) {
                    return Err(InvariantViolation::Flag {
                        tier: tier.kind(),
                        prefix,
                        flag,
                    });
                }
                let table = record.expect("flag present").0.next_hop;
                if table != entry.route.next_hop {
                    return Err(InvariantViolation::StaleNextHop {
                        tier: tier.kind(),
                        prefix,
                        cached: entry.route.next_hop,
                        table,
                    });
                }
            }
        }

        for entry in self.tcam.entries() {
            let prefix = entry.route.prefix;
            if self.sram.get(&prefix).is_some() {
                return Err(InvariantViolation::BothTiers(prefix));
            }
            if let Some(other) = self.sram.find_overlapping(prefix) {
                return Err(InvariantViolation::Overlap(prefix, other));
            }
        }

        let stats = self.trie.stats();
        if stats.in_tcam != self.tcam.occupancy() || stats.in_sram != self.sram.occupancy() {
            return Err(InvariantViolation::FlagCount {
                in_tcam: stats.in_tcam,
                tcam: self.tcam.occupancy(),
                in_sram: stats.in_sram,
                sram: self.sram.occupancy(),
            });
        }
        Ok(())
    }

    /// Full-table check of the generated prefixes: pairwise disjoint and
    /// never hiding a more-specific route. Linear in the table size.
    pub fn check_table_invariants(&self) -> Result<(), InvariantViolation> {
        let generated = self.trie.generated();
        for pair in generated.windows(2) {
            let (x, y) = (pair[0].0.prefix, pair[1].0.prefix);
            if x.last() >= y.first() {
                return Err(InvariantViolation::Overlap(x, y));
            }
        }
        let routes = self.trie.routes();
        for (route, _) in &generated {
            let p = route.prefix;
            // Routes are in address order; those inside `p` form a run.
            let start = routes.partition_point(|(r, _)| r.addr() < p.addr());
            for (r, _) in &routes[start..] {
                if r.addr() > p.last() {
                    break;
                }
                if r.len() > p.len() {
                    return Err(InvariantViolation::HiddenRoute {
                        prefix: p,
                        route: *r,
                    });
                }
            }
        }
        Ok(())
    }

    #[doc(hidden)]
    /// Fault injection for the validation harness: rewrites the next hop of
    /// whichever cached entry covers `dst`. Returns false if nothing is
    /// cached there.
    pub fn corrupt_cached_next_hop(&mut self, dst: IpAddr32, nh: NextHop) -> bool {
        for kind in [TierKind::Tcam, TierKind::Sram] {
            let tier = self.tier_mut(kind);
            if let Some(prefix) = tier.find(dst).map(|e| e.route.prefix) {
                return tier.corrupt_next_hop(&prefix, nh);
            }
        }
        false
    }
}

/// Something the replay driver reports to its observer.
#[derive(Debug)]
pub enum ReplayEvent<'a> {
    Packet {
        packet: PacketRecord,
        outcome: &'a ForwardingOutcome,
    },
    Update {
        update: &'a FibUpdate,
        purged: &'a [(TierKind, IpPrefix)],
    },
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("packet {seq}: {source}")]
    Engine {
        seq: u64,
        #[source]
        source: EngineError,
    },
    #[error("update before packet {seq} ({update}): {source}")]
    Update {
        seq: u64,
        update: FibUpdate,
        #[source]
        source: EngineError,
    },
    #[error("after packet {seq}: {violation}")]
    Violation {
        seq: u64,
        violation: InvariantViolation,
    },
}

impl ReplayError {
    pub fn is_violation(&self) -> bool {
        matches!(self, ReplayError::Violation { .. })
    }
}

/// Feeds `destinations` through `engine` as packets numbered from the
/// engine's current count, applying each scheduled update just before the
/// packet it names. Updates must be sorted by `before_seq`; any scheduled
/// past the last packet are applied at the end.
///
/// The observer sees every packet and update and may abort the replay with
/// an invariant violation.
pub fn replay<I, F>(
    engine: &mut PfcsEngine,
    destinations: I,
    updates: &[ScheduledUpdate],
    mut observe: F,
) -> Result<u64, ReplayError>
where
    I: IntoIterator<Item = IpAddr32>,
    F: FnMut(&PfcsEngine, ReplayEvent<'_>) -> Result<(), InvariantViolation>,
{
    let mut pending = updates.iter().peekable();
    let apply = |engine: &mut PfcsEngine,
                 sched: &ScheduledUpdate,
                 observe: &mut F|
     -> Result<(), ReplayError> {
        let purged =
            engine
                .apply_fib_update(&sched.update)
                .map_err(|source| ReplayError::Update {
                    seq: sched.before_seq,
                    update: sched.update.clone(),
                    source,
                })?;
        observe(
            engine,
            ReplayEvent::Update {
                update: &sched.update,
                purged: &purged,
            },
        )
        .map_err(|violation| ReplayError::Violation {
            seq: engine.packet_count(),
            violation,
        })
    };

    let mut count = 0;
    for dst in destinations {
        let seq = engine.packet_count() + 1;
        while let Some(sched) = pending.next_if(|u| u.before_seq <= seq) {
            apply(engine, sched, &mut observe)?;
        }
        let packet = PacketRecord { seq, dst };
        let outcome = engine
            .process_packet(packet)
            .map_err(|source| ReplayError::Engine { seq, source })?;
        count += 1;
        observe(
            engine,
            ReplayEvent::Packet {
                packet,
                outcome: &outcome,
            },
        )
        .map_err(|violation| ReplayError::Violation { seq, violation })?;
    }
    for sched in pending {
        apply(engine, sched, &mut observe)?;
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> IpPrefix {
        s.parse().unwrap()
    }
    fn a(s: &str) -> IpAddr32 {
        s.parse().unwrap()
    }
    const A: NextHop = NextHop(1);
    const B: NextHop = NextHop(2);
    const C: NextHop = NextHop(3);
    const D: NextHop = NextHop(4);

    fn toy_fib() -> FibTrie {
        FibTrie::build([
            (p("0.0.0.0/0"), A),
            (p("10.0.0.0/8"), B),
            (p("10.1.0.0/16"), C),
        ])
    }

    fn tiny() -> PipelineConfig {
        PipelineConfig {
            tcam_capacity: 1,
            sram_capacity: 1,
            victim_set_size: 1,
            promotion_margin: 0,
            ..PipelineConfig::default()
        }
    }

    fn send(e: &mut PfcsEngine, dst: &str) -> ForwardingOutcome {
        let seq = e.packet_count() + 1;
        let out = e.process_packet(PacketRecord { seq, dst: a(dst) }).unwrap();
        e.check_invariants().unwrap();
        out
    }

    #[test]
    fn cold_engine() {
        let mut e = PfcsEngine::new(FibTrie::new(), PipelineConfig::default()).unwrap();
        assert_eq!(e.snapshot(), Snapshot::default());
        let out = send(&mut e, "1.2.3.4");
        assert!(out.is_dropped());
        assert_eq!(out.next_hop, None);

        let mut e = PfcsEngine::new(toy_fib(), PipelineConfig::default()).unwrap();
        assert_ne!(send(&mut e, "10.2.3.4").served_by, Some(ServedBy::Tcam));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = PipelineConfig {
            sram_capacity: 0,
            ..PipelineConfig::default()
        };
        assert_eq!(
            PfcsEngine::new(FibTrie::new(), cfg).unwrap_err(),
            EngineError::InvalidConfig("sram_capacity")
        );
    }

    #[test]
    fn worked_example() {
        let mut e = PfcsEngine::new(toy_fib(), tiny()).unwrap();
        let leaf = CacheRoute {
            prefix: p("10.2.0.0/15"),
            next_hop: B,
        };

        let o1 = send(&mut e, "10.2.3.4");
        assert_eq!(o1.next_hop, Some(B));
        assert_eq!(o1.served_by, Some(ServedBy::Dram));
        assert_eq!(o1.installed, Some(leaf));
        assert_eq!(o1.promoted, None);

        let o2 = send(&mut e, "10.3.0.1");
        assert_eq!(o2.next_hop, Some(B));
        assert_eq!(o2.served_by, Some(ServedBy::Sram));
        assert_eq!(o2.promoted, Some(leaf.prefix));
        assert_eq!(o2.installed, None);
        let snap = e.snapshot();
        assert_eq!((snap.tcam_occupancy, snap.sram_occupancy), (1, 0));
        assert_eq!(
            e.trie().get_location(leaf.prefix),
            Ok(RouteLocation::InTcam)
        );

        let o3 = send(&mut e, "10.2.9.9");
        assert_eq!(o3.next_hop, Some(B));
        assert_eq!(o3.served_by, Some(ServedBy::Tcam));
        assert_eq!(e.snapshot().packet_count, 3);
    }

    #[test]
    fn drop_without_route() {
        let fib = FibTrie::build([(p("10.0.0.0/8"), B)]);
        let mut e = PfcsEngine::new(fib, tiny()).unwrap();
        let out = send(&mut e, "192.0.2.1");
        assert_eq!(
            (out.next_hop, out.served_by, out.installed),
            (None, None, None)
        );
        assert_eq!(e.snapshot().sram_occupancy, 0);
    }

    #[test]
    fn sequence_gap() {
        let mut e = PfcsEngine::new(toy_fib(), tiny()).unwrap();
        let err = e
            .process_packet(PacketRecord {
                seq: 2,
                dst: a("1.1.1.1"),
            })
            .unwrap_err();
        assert_eq!(
            err,
            EngineError::SequenceGap {
                expected: 1,
                got: 2
            }
        );
        assert_eq!(e.packet_count(), 0);
    }

    #[test]
    fn warm_start() {
        let mut e = PfcsEngine::new(toy_fib(), PipelineConfig::default()).unwrap();
        e.warm_start([]).unwrap();
        assert_eq!(e.snapshot().sram_occupancy, 0);

        e.warm_start([a("10.2.3.4")]).unwrap();
        assert_eq!(e.snapshot().sram_occupancy, 1);
        assert_eq!(
            e.trie().get_location(p("10.2.0.0/15")),
            Ok(RouteLocation::InSram)
        );

        e.warm_start([a("10.2.3.4"), a("10.3.0.1")]).unwrap();
        let snap = e.snapshot();
        assert_eq!((snap.tcam_occupancy, snap.sram_occupancy), (0, 1));
        e.check_invariants().unwrap();

        // Warm routes are served from SRAM straight away.
        assert_eq!(send(&mut e, "10.3.3.3").served_by, Some(ServedBy::Sram));
    }

    #[test]
    fn warm_start_overflow_evicts() {
        let mut e = PfcsEngine::new(toy_fib(), tiny()).unwrap();
        e.warm_start([a("10.2.3.4"), a("192.168.1.1")]).unwrap();
        assert_eq!(e.snapshot().sram_occupancy, 1);
        assert_eq!(
            e.trie().get_location(p("10.2.0.0/15")),
            Ok(RouteLocation::Uncached)
        );
        assert_eq!(
            e.trie().get_location(p("128.0.0.0/1")),
            Ok(RouteLocation::InSram)
        );
        e.check_invariants().unwrap();
    }

    #[test]
    fn update_purges_tcam() {
        let mut e = PfcsEngine::new(toy_fib(), tiny()).unwrap();
        send(&mut e, "10.2.3.4");
        send(&mut e, "10.3.0.1");
        let purged = e
            .apply_fib_update(&FibUpdate::Insert(p("10.2.128.0/17"), D))
            .unwrap();
        assert_eq!(purged, vec![(TierKind::Tcam, p("10.2.0.0/15"))]);
        e.check_invariants().unwrap();
        let out = send(&mut e, "10.2.9.9");
        assert_ne!(out.served_by, Some(ServedBy::Tcam));
        assert_eq!(out.installed.unwrap().prefix, p("10.2.0.0/17"));
        assert_eq!(send(&mut e, "10.2.200.1").next_hop, Some(D));
    }

    #[test]
    fn update_elsewhere_is_noop() {
        let mut e = PfcsEngine::new(toy_fib(), tiny()).unwrap();
        send(&mut e, "10.2.3.4");
        let before = e.snapshot();
        let purged = e
            .apply_fib_update(&FibUpdate::Insert(p("172.16.0.0/12"), D))
            .unwrap();
        assert!(purged.is_empty());
        let after = e.snapshot();
        assert_eq!(before.tcam_occupancy, after.tcam_occupancy);
        assert_eq!(before.sram_occupancy, after.sram_occupancy);
    }

    #[test]
    fn withdraw_purges_sram() {
        let mut e = PfcsEngine::new(toy_fib(), PipelineConfig::default()).unwrap();
        let out = send(&mut e, "10.1.2.3");
        assert_eq!(out.installed.unwrap().prefix, p("10.1.0.0/16"));
        let purged = e
            .apply_fib_update(&FibUpdate::Withdraw(p("10.1.0.0/16")))
            .unwrap();
        assert_eq!(purged, vec![(TierKind::Sram, p("10.1.0.0/16"))]);
        e.check_invariants().unwrap();
        assert_eq!(send(&mut e, "10.1.2.3").next_hop, Some(B));

        let err = e
            .apply_fib_update(&FibUpdate::Withdraw(p("10.1.0.0/16")))
            .unwrap_err();
        assert_eq!(
            err,
            EngineError::Trie(TrieError::UnknownRoute(p("10.1.0.0/16")))
        );
    }

    #[test]
    fn promotion_demotes_tcam_victim() {
        let mut e = PfcsEngine::new(toy_fib(), tiny()).unwrap();
        // 10.2.0.0/15 into TCAM.
        send(&mut e, "10.2.3.4");
        send(&mut e, "10.2.3.4");
        // 128.0.0.0/1 into SRAM, then hit it once: its counter (1) beats the
        // TCAM entry's (0), so they swap.
        assert_eq!(send(&mut e, "192.168.1.1").served_by, Some(ServedBy::Dram));
        let out = send(&mut e, "192.168.1.1");
        assert_eq!(out.served_by, Some(ServedBy::Sram));
        assert_eq!(out.promoted, Some(p("128.0.0.0/1")));
        assert_eq!(out.evictions, vec![(TierKind::Tcam, p("10.2.0.0/15"))]);
        assert_eq!(
            e.trie().get_location(p("10.2.0.0/15")),
            Ok(RouteLocation::InSram)
        );
        assert_eq!(
            e.trie().get_location(p("128.0.0.0/1")),
            Ok(RouteLocation::InTcam)
        );
    }

    #[test]
    fn margin_blocks_promotion() {
        let cfg = PipelineConfig {
            promotion_margin: 5,
            ..tiny()
        };
        let mut e = PfcsEngine::new(toy_fib(), cfg).unwrap();
        send(&mut e, "10.2.3.4");
        send(&mut e, "10.2.3.4");
        send(&mut e, "192.168.1.1");
        for _ in 0..5 {
            let out = send(&mut e, "192.168.1.1");
            assert_eq!(out.promoted, None);
        }
        assert_eq!(send(&mut e, "192.168.1.1").promoted, Some(p("128.0.0.0/1")));
    }

    #[test]
    fn margin_applies_to_free_tcam_slots() {
        let cfg = PipelineConfig {
            promotion_margin: 2,
            ..PipelineConfig::default()
        };
        let mut e = PfcsEngine::new(toy_fib(), cfg).unwrap();
        assert_eq!(send(&mut e, "10.2.3.4").served_by, Some(ServedBy::Dram));
        for _ in 0..2 {
            let out = send(&mut e, "10.2.3.4");
            assert_eq!(out.served_by, Some(ServedBy::Sram));
            assert_eq!(out.promoted, None);
        }
        assert_eq!(send(&mut e, "10.2.3.4").promoted, Some(p("10.2.0.0/15")));
        assert_eq!(send(&mut e, "10.2.3.4").served_by, Some(ServedBy::Tcam));
    }

    #[test]
    fn repeat_after_dram_is_cached() {
        let mut e = PfcsEngine::new(toy_fib(), PipelineConfig::default()).unwrap();
        for dst in ["10.1.2.3", "10.200.0.1", "8.8.8.8", "200.1.1.1"] {
            assert_eq!(send(&mut e, dst).served_by, Some(ServedBy::Dram));
            assert_ne!(send(&mut e, dst).served_by, Some(ServedBy::Dram));
        }
    }

    #[test]
    fn windows_and_aging() {
        let cfg = PipelineConfig {
            stats_window: 2,
            aging_epoch: 3,
            ..PipelineConfig::default()
        };
        let mut e = PfcsEngine::new(toy_fib(), cfg).unwrap();
        for _ in 0..5 {
            send(&mut e, "10.2.3.4");
        }
        assert_eq!(e.stats().windows().len(), 2);
        // Packets 3, 4, 5 hit the TCAM; packet 3's hit was halved at packet 3.
        assert_eq!(e.tcam().get(&p("10.2.0.0/15")).unwrap().hits, 2);
        let summary = e.finish();
        assert_eq!(e.stats().windows().len(), 3);
        assert_eq!(e.stats().occupancy_samples().len(), 3);
        assert_eq!(summary.total_packets, 5);
        assert_eq!(summary.tcam_misses, 2);
        assert_eq!(summary.sram_misses, 1);
    }

    #[test]
    fn corrupted_entry_is_detected() {
        let mut e = PfcsEngine::new(toy_fib(), PipelineConfig::default()).unwrap();
        send(&mut e, "10.2.3.4");
        assert!(e.corrupt_cached_next_hop(a("10.2.3.4"), D));
        assert!(matches!(
            e.check_invariants(),
            Err(InvariantViolation::StaleNextHop { .. })
        ));
    }

    #[test]
    fn replay_orders_updates() {
        let mut e = PfcsEngine::new(toy_fib(), PipelineConfig::default()).unwrap();
        let updates = vec![
            ScheduledUpdate {
                before_seq: 2,
                update: FibUpdate::Insert(p("10.2.0.0/16"), D),
            },
            ScheduledUpdate {
                before_seq: 9,
                update: FibUpdate::Withdraw(p("10.2.0.0/16")),
            },
        ];
        let mut hops = Vec::new();
        let n = replay(
            &mut e,
            [a("10.2.3.4"), a("10.2.3.4")],
            &updates,
            |eng, ev| {
                if let ReplayEvent::Packet { outcome, .. } = ev {
                    hops.push(outcome.next_hop);
                }
                eng.check_invariants()
            },
        )
        .unwrap();
        assert_eq!(n, 2);
        assert_eq!(hops, vec![Some(B), Some(D)]);
        // The trailing withdraw still ran.
        assert_eq!(e.trie().lpm(a("10.2.3.4")), Some((p("10.0.0.0/8"), B)));
    }
}
