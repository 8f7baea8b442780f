//! Capacity-bounded cache tier holding pairwise-disjoint prefixes.
//!
//! One type models both the TCAM and the SRAM cache. Entries are kept in an
//! address-ordered map; because no entry overlaps another, the only entry
//! that can contain an address is its in-order predecessor, so a lookup is a
//! single ordered-map probe. A second ordered index keyed by
//! `(hits, inserted_at, prefix)` yields the light traffic hitters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::prefix::{IpAddr32, IpPrefix, NextHop};
use crate::trie::CacheRoute;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TierKind {
    Tcam,
    Sram,
}

impl fmt::Display for TierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TierKind::Tcam => "TCAM",
            TierKind::Sram => "SRAM",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CacheError {
    #[error("{tier}: {new} overlaps resident entry {existing}")]
    OverlapViolation {
        tier: TierKind,
        new: IpPrefix,
        existing: IpPrefix,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheEntry {
    pub route: CacheRoute,
    pub hits: u64,
    pub inserted_at: u64,
}

impl CacheEntry {
    fn victim_key(&self) -> VictimKey {
        (self.hits, self.inserted_at, self.route.prefix)
    }
}

/// Eviction order: fewest hits, then oldest insertion, then lowest address.
type VictimKey = (u64, u64, IpPrefix);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstallOutcome {
    pub evicted: Option<CacheRoute>,
}

#[derive(Debug, Clone)]
pub struct CacheTier {
    kind: TierKind,
    capacity: usize,
    victim_set_size: usize,
    entries: BTreeMap<IpPrefix, CacheEntry>,
    by_load: BTreeSet<VictimKey>,
}

impl CacheTier {
    /// # Panics
    /// If `capacity` or `victim_set_size` is zero.
    pub fn new(kind: TierKind, capacity: usize, victim_set_size: usize) -> Self {
        assert!(capacity > 0, "cache capacity must be positive");
        assert!(victim_set_size > 0, "victim set size must be positive");
        CacheTier {
            kind,
            capacity,
            victim_set_size,
            entries: BTreeMap::new(),
            by_load: BTreeSet::new(),
        }
    }

    pub fn kind(&self) -> TierKind {
        self.kind
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn victim_set_size(&self) -> usize {
        self.victim_set_size
    }

    pub fn occupancy(&self) -> usize {
        self.entries.len()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    /// The resident prefix containing `a`, without touching counters.
    pub fn find(&self, a: IpAddr32) -> Option<&CacheEntry> {
        self.entries
            .range(..=IpPrefix::of(a, 32))
            .next_back()
            .map(|(_, e)| e)
            .filter(|e| e.route.prefix.contains(a))
    }

    pub fn get(&self, prefix: &IpPrefix) -> Option<&CacheEntry> {
        self.entries.get(prefix)
    }

    /// Looks up `a`; on a hit the entry's counter is bumped.
    pub fn lookup(&mut self, a: IpAddr32) -> Option<CacheRoute> {
        let prefix = self.find(a)?.route.prefix;
        let entry = self.entries.get_mut(&prefix).expect("entry just found");
        self.by_load.remove(&entry.victim_key());
        entry.hits += 1;
        self.by_load.insert(entry.victim_key());
        Some(entry.route)
    }

    /// Installs `route` with a zero counter, evicting the lightest hitter if
    /// the tier is full. An equal prefix is replaced in place.
    pub fn install(&mut self, route: CacheRoute, seq: u64) -> Result<InstallOutcome, CacheError> {
        let prefix = route.prefix;
        if let Some(existing) = self.find_overlapping(prefix) {
            if existing != prefix {
                return Err(CacheError::OverlapViolation {
                    tier: self.kind,
                    new: prefix,
                    existing,
                });
            }
            self.remove(&prefix);
            self.insert_entry(route, seq);
            return Ok(InstallOutcome { evicted: None });
        }

        let evicted = if self.is_full() {
            let victim = *self.by_load.first().expect("full tier has entries");
            let entry = self.take(&victim.2).expect("indexed entry exists");
            Some(entry.route)
        } else {
            None
        };
        self.insert_entry(route, seq);
        Ok(InstallOutcome { evicted })
    }

    fn insert_entry(&mut self, route: CacheRoute, seq: u64) {
        let entry = CacheEntry {
            route,
            hits: 0,
            inserted_at: seq,
        };
        self.by_load.insert(entry.victim_key());
        self.entries.insert(route.prefix, entry);
    }

    /// Any resident prefix overlapping `prefix`.
    pub fn find_overlapping(&self, prefix: IpPrefix) -> Option<IpPrefix> {
        // Entries covered by (or equal to) `prefix` start at its address.
        if let Some((&next, _)) = self
            .entries
            .range(IpPrefix::lower_bound(prefix.addr())..)
            .next()
        {
            if next.addr() <= prefix.last() {
                return Some(next);
            }
        }
        // An entry covering `prefix` must be its in-order predecessor.
        self.entries
            .range(..IpPrefix::lower_bound(prefix.addr()))
            .next_back()
            .map(|(&p, _)| p)
            .filter(|p| p.covers(&prefix))
    }

    /// Up to `k` entries, lightest first.
    pub fn select_victims(&self, k: usize) -> Vec<CacheRoute> {
        self.by_load
            .iter()
            .take(k)
            .map(|key| self.entries[&key.2].route)
            .collect()
    }

    /// Counter of the lightest hitter among the configured victim set.
    pub fn lightest_hits(&self) -> Option<u64> {
        self.by_load.first().map(|key| key.0)
    }

    /// Halves every counter (floor).
    pub fn age(&mut self) {
        self.by_load.clear();
        for entry in self.entries.values_mut() {
            entry.hits /= 2;
            self.by_load.insert(entry.victim_key());
        }
    }

    pub fn remove(&mut self, prefix: &IpPrefix) -> bool {
        self.take(prefix).is_some()
    }

    /// Removes and returns the entry for `prefix`.
    pub fn take(&mut self, prefix: &IpPrefix) -> Option<CacheEntry> {
        let entry = self.entries.remove(prefix)?;
        self.by_load.remove(&entry.victim_key());
        Some(entry)
    }

    /// Entries in address order.
    pub fn entries(&self) -> impl Iterator<Item = &CacheEntry> + '_ {
        self.entries.values()
    }

    #[doc(hidden)]
    pub fn corrupt_next_hop(&mut self, prefix: &IpPrefix, nh: NextHop) -> bool {
        match self.entries.get_mut(prefix) {
            Some(e) => {
                e.route.next_hop = nh;
                true
            }
            None => false,
        }
    }

    /// First pair of overlapping entries, if any. Always `None` unless the
    /// tier was corrupted.
    pub fn find_overlap(&self) -> Option<(IpPrefix, IpPrefix)> {
        let mut prev: Option<IpPrefix> = None;
        for &p in self.entries.keys() {
            if let Some(q) = prev {
                if q.last() >= p.first() {
                    return Some((q, p));
                }
            }
            prev = Some(p);
        }
        None
    }
}
