//! The full forwarding table and the cacheable-route generator.
//!
//! [`FibTrie`] is a plain binary trie over prefix bits stored in an arena.
//! Every node may carry a real route (a FIB entry) and, independently, a
//! generated cache marker. A generated prefix is a *leaf* prefix: it strictly
//! covers no real route, so every address under it resolves to the same
//! next hop and it can be cached without hiding a more-specific route.
//! The marker also records which cache tier currently holds the prefix.

use std::collections::HashMap;

use thiserror::Error;

use crate::prefix::{IpAddr32, IpPrefix, NextHop, MAX_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrieError {
    #[error("{0} is not a generated cache prefix")]
    UnknownCachePrefix(IpPrefix),
    #[error("{0} is not a route in the FIB")]
    UnknownRoute(IpPrefix),
}

/// Where a generated prefix currently lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RouteLocation {
    Uncached,
    InTcam,
    InSram,
}

impl RouteLocation {
    const fn slot(self) -> usize {
        match self {
            RouteLocation::Uncached => 0,
            RouteLocation::InTcam => 1,
            RouteLocation::InSram => 2,
        }
    }
}

/// A non-overlapping route that may be installed in a cache tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheRoute {
    pub prefix: IpPrefix,
    pub next_hop: NextHop,
}

/// A generated prefix removed from the trie by a FIB update, with the
/// location it had at removal time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Invalidated {
    pub prefix: IpPrefix,
    pub location: RouteLocation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrieStats {
    pub real_routes: usize,
    pub generated_total: usize,
    pub in_tcam: usize,
    pub in_sram: usize,
    pub uncached: usize,
}

#[derive(Debug, Clone, Copy)]
struct CacheMark {
    next_hop: NextHop,
    location: RouteLocation,
}

const NIL: u32 = 0;
const ROOT: u32 = 0;

#[derive(Debug, Clone, Default)]
struct Node {
    /// Child indices; `NIL` (the root's index) means absent.
    children: [u32; 2],
    route: Option<NextHop>,
    mark: Option<CacheMark>,
    /// Real routes in this subtree, this node included.
    routes_below: u32,
    /// Generated prefixes in this subtree, this node included.
    marks_below: u32,
}

impl Node {
    fn is_empty(&self) -> bool {
        self.route.is_none() && self.mark.is_none() && self.children == [NIL, NIL]
    }

    /// Real routes strictly below this node.
    fn strict_routes_below(&self) -> u32 {
        self.routes_below - u32::from(self.route.is_some())
    }
}

/// Binary trie holding real routes, generated cache prefixes and their
/// residency flags.
#[derive(Debug, Clone)]
pub struct FibTrie {
    nodes: Vec<Node>,
    free: Vec<u32>,
    real_routes: usize,
    by_location: [usize; 3],
    /// Node index of every generated prefix.
    marked: HashMap<IpPrefix, u32>,
}

impl Default for FibTrie {
    fn default() -> Self {
        Self::new()
    }
}

impl FibTrie {
    pub fn new() -> Self {
        FibTrie {
            nodes: vec![Node::default()],
            free: Vec::new(),
            real_routes: 0,
            by_location: [0; 3],
            marked: HashMap::new(),
        }
    }

    /// Builds a trie from routes; later duplicates override earlier ones.
    pub fn build<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (IpPrefix, NextHop)>,
    {
        let mut trie = FibTrie::new();
        for (prefix, nh) in entries {
            trie.set_route(prefix, nh);
        }
        trie
    }

    fn alloc(&mut self) -> u32 {
        match self.free.pop() {
            Some(idx) => {
                self.nodes[idx as usize] = Node::default();
                idx
            }
            None => {
                self.nodes.push(Node::default());
                (self.nodes.len() - 1) as u32
            }
        }
    }

    /// Indices of the nodes on the path to `prefix`, root first. The path
    /// stops early if a node is missing; `path.len() == prefix.len() + 1`
    /// iff the node for `prefix` exists.
    fn path_to(&self, prefix: IpPrefix, path: &mut Vec<u32>) {
        path.clear();
        let mut idx = ROOT;
        path.push(idx);
        for depth in 0..prefix.len() {
            let next = self.nodes[idx as usize].children[prefix.addr().bit(depth)];
            if next == NIL {
                return;
            }
            idx = next;
            path.push(idx);
        }
    }

    fn find(&self, prefix: IpPrefix) -> Option<u32> {
        let mut idx = ROOT;
        for depth in 0..prefix.len() {
            idx = self.nodes[idx as usize].children[prefix.addr().bit(depth)];
            if idx == NIL {
                return None;
            }
        }
        Some(idx)
    }

    /// Creates missing nodes down to `prefix`, returning the full path.
    fn ensure_path(&mut self, prefix: IpPrefix, path: &mut Vec<u32>) {
        self.path_to(prefix, path);
        while path.len() <= prefix.len() as usize {
            let depth = (path.len() - 1) as u8;
            let parent = *path.last().expect("path holds the root");
            let child = self.alloc();
            self.nodes[parent as usize].children[prefix.addr().bit(depth)] = child;
            path.push(child);
        }
    }

    /// Removes empty nodes from the bottom of `path` upwards.
    fn prune(&mut self, path: &[u32], addr: IpAddr32) {
        for depth in (1..path.len()).rev() {
            let idx = path[depth];
            if !self.nodes[idx as usize].is_empty() {
                return;
            }
            let parent = path[depth - 1];
            self.nodes[parent as usize].children[addr.bit((depth - 1) as u8)] = NIL;
            self.free.push(idx);
        }
    }

    fn set_route(&mut self, prefix: IpPrefix, nh: NextHop) {
        let mut path = Vec::with_capacity(33);
        self.ensure_path(prefix, &mut path);
        let node = *path.last().unwrap();
        if self.nodes[node as usize].route.replace(nh).is_none() {
            self.real_routes += 1;
            for &idx in &path {
                self.nodes[idx as usize].routes_below += 1;
            }
        }
    }

    /// Longest-prefix match over real routes only.
    pub fn lpm(&self, a: IpAddr32) -> Option<(IpPrefix, NextHop)> {
        let mut idx = ROOT;
        let mut best = None;
        let mut depth: u8 = 0;
        loop {
            let node = &self.nodes[idx as usize];
            if let Some(nh) = node.route {
                best = Some((depth, nh));
            }
            if depth == MAX_LEN {
                break;
            }
            idx = node.children[a.bit(depth)];
            if idx == NIL {
                break;
            }
            depth += 1;
        }
        best.map(|(len, nh)| (IpPrefix::of(a, len), nh))
    }

    /// Returns the generated prefix covering `a`, creating it if needed.
    ///
    /// The result is the shortest prefix of `a` that is at least as long as
    /// the LPM match and strictly covers no real route; it carries the LPM
    /// next hop. New prefixes start [`RouteLocation::Uncached`].
    pub fn generate_cacheable(&mut self, a: IpAddr32) -> Option<CacheRoute> {
        let mut path = [NIL; 33];
        let mut idx = ROOT;
        let mut depth: u8 = 0;
        let mut matched: Option<(u8, NextHop)> = None;
        loop {
            path[depth as usize] = idx;
            let node = &self.nodes[idx as usize];
            if let Some(mark) = node.mark {
                return Some(CacheRoute {
                    prefix: IpPrefix::of(a, depth),
                    next_hop: mark.next_hop,
                });
            }
            if let Some(nh) = node.route {
                matched = Some((depth, nh));
            }
            if depth == MAX_LEN {
                break;
            }
            let next = node.children[a.bit(depth)];
            if next == NIL {
                break;
            }
            idx = next;
            depth += 1;
        }
        let (match_len, next_hop) = matched?;
        let deepest = depth;

        // Walk down from the match until the subtree holds no more-specific
        // route; past the end of the existing path the subtree is empty.
        let mut leaf_len = match_len;
        while leaf_len <= deepest
            && self.nodes[path[leaf_len as usize] as usize].strict_routes_below() > 0
        {
            leaf_len += 1;
        }
        debug_assert!(leaf_len <= MAX_LEN);

        let prefix = IpPrefix::of(a, leaf_len);
        let mut full_path = Vec::with_capacity(33);
        self.ensure_path(prefix, &mut full_path);
        let node = *full_path.last().unwrap();
        self.nodes[node as usize].mark = Some(CacheMark {
            next_hop,
            location: RouteLocation::Uncached,
        });
        for &idx in &full_path {
            self.nodes[idx as usize].marks_below += 1;
        }
        self.by_location[RouteLocation::Uncached.slot()] += 1;
        self.marked.insert(prefix, node);
        Some(CacheRoute { prefix, next_hop })
    }

    /// The generated route stored exactly at `prefix`, if any.
    pub fn cached_route(&self, prefix: IpPrefix) -> Option<(CacheRoute, RouteLocation)> {
        let node = &self.nodes[*self.marked.get(&prefix)? as usize];
        node.mark.map(|m| {
            (
                CacheRoute {
                    prefix,
                    next_hop: m.next_hop,
                },
                m.location,
            )
        })
    }

    pub fn set_location(&mut self, prefix: IpPrefix, loc: RouteLocation) -> Result<(), TrieError> {
        let mark = self
            .marked
            .get(&prefix)
            .and_then(|&idx| self.nodes[idx as usize].mark.as_mut())
            .ok_or(TrieError::UnknownCachePrefix(prefix))?;
        let old = std::mem::replace(&mut mark.location, loc);
        self.by_location[old.slot()] -= 1;
        self.by_location[loc.slot()] += 1;
        Ok(())
    }

    pub fn get_location(&self, prefix: IpPrefix) -> Result<RouteLocation, TrieError> {
        self.cached_route(prefix)
            .map(|(_, loc)| loc)
            .ok_or(TrieError::UnknownCachePrefix(prefix))
    }

    /// Adds or replaces a real route. Every generated prefix overlapping it
    /// is removed and returned so the caller can purge the caches.
    pub fn insert_route(&mut self, prefix: IpPrefix, nh: NextHop) -> Vec<Invalidated> {
        let out = self.invalidate_overlapping(prefix);
        self.set_route(prefix, nh);
        out
    }

    /// Removes a real route and every generated prefix that overlaps it or
    /// whose minimal length depended on it.
    pub fn withdraw_route(&mut self, prefix: IpPrefix) -> Result<Vec<Invalidated>, TrieError> {
        let node = self.find(prefix).ok_or(TrieError::UnknownRoute(prefix))?;
        if self.nodes[node as usize].route.is_none() {
            return Err(TrieError::UnknownRoute(prefix));
        }
        let mut out = self.invalidate_overlapping(prefix);

        let mut path = Vec::with_capacity(33);
        self.path_to(prefix, &mut path);
        self.nodes[node as usize].route = None;
        self.real_routes -= 1;
        for &idx in &path {
            self.nodes[idx as usize].routes_below -= 1;
        }

        // A generated prefix whose parent strictly covered only the withdrawn
        // route is no longer minimal; a later generation could produce its
        // parent and overlap it. Such a prefix is the sibling of an ancestor
        // of the withdrawn route.
        for depth in (0..prefix.len()).rev() {
            let ancestor = path[depth as usize];
            if self.nodes[ancestor as usize].strict_routes_below() > 0 {
                break;
            }
            let sibling_bit = 1 - prefix.addr().bit(depth);
            let sibling = self.nodes[ancestor as usize].children[sibling_bit];
            if sibling != NIL && self.nodes[sibling as usize].mark.is_some() {
                let sib_addr = IpAddr32(
                    (prefix.addr().0 & crate::prefix::mask(depth))
                        | ((sibling_bit as u32) << (31 - depth as u32)),
                );
                let sib_prefix = IpPrefix::of(sib_addr, depth + 1);
                out.push(self.clear_mark(sib_prefix));
            }
        }

        self.path_to(prefix, &mut path);
        self.prune(&path, prefix.addr());
        Ok(out)
    }

    /// Drops the marker at `prefix` (which must exist) and prunes.
    fn clear_mark(&mut self, prefix: IpPrefix) -> Invalidated {
        let mut path = Vec::with_capacity(33);
        self.path_to(prefix, &mut path);
        let node = *path.last().unwrap();
        let mark = self.nodes[node as usize]
            .mark
            .take()
            .expect("clear_mark on a prefix without marker");
        for &idx in &path {
            self.nodes[idx as usize].marks_below -= 1;
        }
        self.by_location[mark.location.slot()] -= 1;
        self.marked.remove(&prefix);
        self.prune(&path, prefix.addr());
        Invalidated {
            prefix,
            location: mark.location,
        }
    }

    /// Removes generated prefixes covering `prefix` (on its path) and those
    /// covered by it (in its subtree).
    fn invalidate_overlapping(&mut self, prefix: IpPrefix) -> Vec<Invalidated> {
        let mut found = Vec::new();
        let mut path = Vec::with_capacity(33);
        self.path_to(prefix, &mut path);
        for (depth, &idx) in path.iter().enumerate() {
            if self.nodes[idx as usize].marks_below == 0 {
                break;
            }
            if self.nodes[idx as usize].mark.is_some() {
                found.push(IpPrefix::of(prefix.addr(), depth as u8));
            }
        }
        if path.len() == prefix.len() as usize + 1 {
            let top = *path.last().unwrap();
            // The node itself was handled above; collect strictly below.
            let mut stack: Vec<(u32, IpPrefix)> = Vec::new();
            for bit in 0..2 {
                let child = self.nodes[top as usize].children[bit];
                if child != NIL {
                    stack.push((child, child_prefix(prefix, bit)));
                }
            }
            while let Some((idx, here)) = stack.pop() {
                let node = &self.nodes[idx as usize];
                if node.marks_below == 0 {
                    continue;
                }
                if node.mark.is_some() {
                    found.push(here);
                }
                for bit in 0..2 {
                    let child = node.children[bit];
                    if child != NIL {
                        stack.push((child, child_prefix(here, bit)));
                    }
                }
            }
        }
        found.sort();
        found.into_iter().map(|p| self.clear_mark(p)).collect()
    }

    pub fn stats(&self) -> TrieStats {
        TrieStats {
            real_routes: self.real_routes,
            generated_total: self.by_location.iter().sum(),
            uncached: self.by_location[RouteLocation::Uncached.slot()],
            in_tcam: self.by_location[RouteLocation::InTcam.slot()],
            in_sram: self.by_location[RouteLocation::InSram.slot()],
        }
    }

    /// All real routes in address order.
    pub fn routes(&self) -> Vec<(IpPrefix, NextHop)> {
        let mut out = Vec::with_capacity(self.real_routes);
        self.walk(|prefix, node| {
            if let Some(nh) = node.route {
                out.push((prefix, nh));
            }
        });
        out
    }

    /// All generated prefixes in address order, with their locations.
    pub fn generated(&self) -> Vec<(CacheRoute, RouteLocation)> {
        let mut out = Vec::new();
        self.walk(|prefix, node| {
            if let Some(m) = node.mark {
                out.push((
                    CacheRoute {
                        prefix,
                        next_hop: m.next_hop,
                    },
                    m.location,
                ));
            }
        });
        out
    }

    /// Preorder traversal (bit 0 before bit 1), i.e. address order.
    fn walk(&self, mut visit: impl FnMut(IpPrefix, &Node)) {
        let mut stack = vec![(ROOT, IpPrefix::DEFAULT)];
        while let Some((idx, here)) = stack.pop() {
            let node = &self.nodes[idx as usize];
            visit(here, node);
            for bit in [1, 0] {
                let child = node.children[bit];
                if child != NIL {
                    stack.push((child, child_prefix(here, bit)));
                }
            }
        }
    }

    /// Number of live arena nodes; exposed for memory accounting.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - self.free.len()
    }

    #[doc(hidden)]
    /// Rewrites the next hop of a generated prefix. Only used to inject
    /// faults when exercising the validation harness.
    pub fn corrupt_mark(&mut self, prefix: IpPrefix, nh: NextHop) -> bool {
        match self
            .find(prefix)
            .and_then(|idx| self.nodes[idx as usize].mark.as_mut())
        {
            Some(mark) => {
                mark.next_hop = nh;
                true
            }
            None => false,
        }
    }
}

fn child_prefix(parent: IpPrefix, bit: usize) -> IpPrefix {
    let len = parent.len() + 1;
    let addr = parent.addr().0 | ((bit as u32) << (32 - len as u32));
    IpPrefix::of(IpAddr32(addr), len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefix::prefix_of;

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
    const E: NextHop = NextHop(5);

    fn toy() -> FibTrie {
        FibTrie::build([
            (p("0.0.0.0/0"), A),
            (p("10.0.0.0/8"), B),
            (p("10.1.0.0/16"), C),
        ])
    }

    #[test]
    fn build_and_lpm() {
        let empty = FibTrie::build([]);
        assert_eq!(empty.lpm(a("1.2.3.4")), None);
        assert_eq!(empty.stats(), TrieStats::default());

        let dflt = FibTrie::build([(IpPrefix::DEFAULT, A)]);
        assert_eq!(dflt.lpm(a("8.8.8.8")), Some((IpPrefix::DEFAULT, A)));

        let dup = FibTrie::build([(p("10.0.0.0/8"), B), (p("10.0.0.0/8"), C)]);
        assert_eq!(dup.lpm(a("10.1.1.1")), Some((p("10.0.0.0/8"), C)));
        assert_eq!(dup.stats().real_routes, 1);

        let f = toy();
        assert_eq!(f.lpm(a("10.1.2.3")), Some((p("10.1.0.0/16"), C)));
        assert_eq!(f.lpm(a("10.2.3.4")), Some((p("10.0.0.0/8"), B)));
        assert_eq!(f.lpm(a("192.168.1.1")), Some((IpPrefix::DEFAULT, A)));
        assert_eq!(f.stats().real_routes, 3);
    }

    #[test]
    fn host_route_lpm() {
        let f = FibTrie::build([(p("10.0.0.1/32"), D), (p("10.0.0.0/31"), E)]);
        assert_eq!(f.lpm(a("10.0.0.1")), Some((p("10.0.0.1/32"), D)));
        assert_eq!(f.lpm(a("10.0.0.0")), Some((p("10.0.0.0/31"), E)));
        assert_eq!(f.lpm(a("10.0.0.2")), None);
    }

    #[test]
    fn generate_examples() {
        let mut f = toy();
        assert_eq!(
            f.generate_cacheable(a("10.1.2.3")),
            Some(CacheRoute {
                prefix: p("10.1.0.0/16"),
                next_hop: C
            })
        );
        assert_eq!(
            f.generate_cacheable(a("10.2.3.4")),
            Some(CacheRoute {
                prefix: p("10.2.0.0/15"),
                next_hop: B
            })
        );
        assert_eq!(
            f.generate_cacheable(a("192.168.1.1")),
            Some(CacheRoute {
                prefix: p("128.0.0.0/1"),
                next_hop: A
            })
        );
        assert_eq!(f.stats().generated_total, 3);
        assert_eq!(f.stats().uncached, 3);
    }

    #[test]
    fn generate_without_route() {
        let mut f = FibTrie::build([(p("10.0.0.0/8"), B)]);
        assert_eq!(f.generate_cacheable(a("11.0.0.1")), None);
        assert_eq!(f.stats().generated_total, 0);
    }

    #[test]
    fn generate_is_idempotent() {
        let mut f = toy();
        let first = f.generate_cacheable(a("10.2.3.4"));
        let again = f.generate_cacheable(a("10.3.0.1"));
        assert_eq!(first, again);
        assert_eq!(f.stats().generated_total, 1);
    }

    #[test]
    fn locations() {
        let mut f = toy();
        let r = f.generate_cacheable(a("10.2.3.4")).unwrap();
        assert_eq!(f.get_location(r.prefix), Ok(RouteLocation::Uncached));
        f.set_location(r.prefix, RouteLocation::InSram).unwrap();
        assert_eq!(f.get_location(r.prefix), Ok(RouteLocation::InSram));
        f.set_location(r.prefix, RouteLocation::InTcam).unwrap();
        assert_eq!(f.get_location(r.prefix), Ok(RouteLocation::InTcam));

        f.set_location(r.prefix, RouteLocation::Uncached).unwrap();
        let before = f.stats();
        f.set_location(r.prefix, RouteLocation::Uncached).unwrap();
        assert_eq!(f.stats(), before);

        let unknown = p("10.0.0.0/8");
        assert_eq!(
            f.set_location(unknown, RouteLocation::InSram),
            Err(TrieError::UnknownCachePrefix(unknown))
        );
        assert_eq!(
            f.get_location(p("172.16.0.0/12")),
            Err(TrieError::UnknownCachePrefix(p("172.16.0.0/12")))
        );
    }

    #[test]
    fn stats_counting() {
        let mut f = toy();
        let r1 = f.generate_cacheable(a("10.2.3.4")).unwrap();
        f.generate_cacheable(a("192.168.1.1")).unwrap();
        f.set_location(r1.prefix, RouteLocation::InTcam).unwrap();
        let s = f.stats();
        assert_eq!(s.generated_total, 2);
        assert_eq!(s.in_tcam, 1);
        assert_eq!(s.uncached, 1);
        assert_eq!(s.in_sram, 0);
    }

    #[test]
    fn insert_invalidation() {
        let mut f = toy();
        f.generate_cacheable(a("10.2.3.4")).unwrap();
        let inv = f.insert_route(p("10.2.128.0/17"), D);
        assert_eq!(inv.len(), 1);
        assert_eq!(inv[0].prefix, p("10.2.0.0/15"));
        assert_eq!(f.stats().generated_total, 0);
        assert_eq!(f.lpm(a("10.2.200.1")), Some((p("10.2.128.0/17"), D)));
        // Regeneration respects the new route.
        assert_eq!(
            f.generate_cacheable(a("10.2.3.4")).unwrap().prefix,
            p("10.2.0.0/17")
        );

        assert!(f.insert_route(p("172.16.0.0/12"), E).is_empty());
    }

    #[test]
    fn insert_same_prefix_new_next_hop() {
        let mut f = toy();
        f.generate_cacheable(a("10.1.2.3")).unwrap();
        let inv = f.insert_route(p("10.1.0.0/16"), D);
        assert_eq!(
            inv.iter().map(|i| i.prefix).collect::<Vec<_>>(),
            vec![p("10.1.0.0/16")]
        );
        assert_eq!(f.generate_cacheable(a("10.1.2.3")).unwrap().next_hop, D);
    }

    #[test]
    fn insert_covering_invalidates_below() {
        let mut f = toy();
        f.generate_cacheable(a("10.2.3.4")).unwrap();
        f.generate_cacheable(a("10.1.2.3")).unwrap();
        f.generate_cacheable(a("192.168.1.1")).unwrap();
        let inv = f.insert_route(p("10.0.0.0/8"), E);
        let mut got: Vec<_> = inv.iter().map(|i| i.prefix).collect();
        got.sort();
        assert_eq!(got, vec![p("10.1.0.0/16"), p("10.2.0.0/15")]);
        assert_eq!(f.stats().generated_total, 1);
    }

    #[test]
    fn withdraw() {
        let mut f = toy();
        let r = f.generate_cacheable(a("10.1.2.3")).unwrap();
        f.set_location(r.prefix, RouteLocation::InSram).unwrap();
        let inv = f.withdraw_route(p("10.1.0.0/16")).unwrap();
        assert_eq!(
            inv,
            vec![Invalidated {
                prefix: p("10.1.0.0/16"),
                location: RouteLocation::InSram
            }]
        );
        assert_eq!(f.stats().in_sram, 0);
        assert_eq!(f.lpm(a("10.1.2.3")), Some((p("10.0.0.0/8"), B)));

        assert!(f.withdraw_route(p("10.0.0.0/8")).unwrap().is_empty());
        assert_eq!(
            f.withdraw_route(p("10.9.0.0/16")),
            Err(TrieError::UnknownRoute(p("10.9.0.0/16")))
        );
        // A node that exists only on a path is not a route either.
        assert_eq!(
            f.withdraw_route(p("0.0.0.0/1")),
            Err(TrieError::UnknownRoute(p("0.0.0.0/1")))
        );
    }

    #[test]
    fn withdraw_drops_non_minimal_sibling() {
        // 10.2.0.0/15 is only as long as it is because of 10.1.0.0/16.
        // Once that route goes, regenerating under the default route would
        // yield 0.0.0.0/0, which must not coexist with the old leaf.
        let mut f = FibTrie::build([(IpPrefix::DEFAULT, A), (p("10.1.0.0/16"), C)]);
        let leaf = f.generate_cacheable(a("10.2.3.4")).unwrap();
        assert_eq!(leaf.prefix, p("10.2.0.0/15"));
        let inv = f.withdraw_route(p("10.1.0.0/16")).unwrap();
        assert_eq!(
            inv.iter().map(|i| i.prefix).collect::<Vec<_>>(),
            vec![leaf.prefix]
        );
        assert_eq!(
            f.generate_cacheable(a("192.168.1.1")).unwrap().prefix,
            IpPrefix::DEFAULT
        );
        assert_eq!(f.stats().generated_total, 1);
    }

    #[test]
    fn prune_releases_nodes() {
        let mut f = FibTrie::build([(IpPrefix::DEFAULT, A)]);
        let baseline = f.node_count();
        f.insert_route(p("10.1.2.0/24"), B);
        f.generate_cacheable(a("10.1.2.9")).unwrap();
        f.generate_cacheable(a("10.1.3.9")).unwrap();
        f.withdraw_route(p("10.1.2.0/24")).unwrap();
        assert_eq!(f.stats().generated_total, 0);
        assert_eq!(f.node_count(), baseline);
    }

    #[test]
    fn listing() {
        let mut f = toy();
        assert_eq!(
            f.routes(),
            vec![
                (p("0.0.0.0/0"), A),
                (p("10.0.0.0/8"), B),
                (p("10.1.0.0/16"), C)
            ]
        );
        f.generate_cacheable(a("192.168.1.1"));
        f.generate_cacheable(a("10.2.3.4"));
        let gen: Vec<_> = f.generated().into_iter().map(|(r, _)| r.prefix).collect();
        assert_eq!(gen, vec![p("10.2.0.0/15"), p("128.0.0.0/1")]);
    }

    #[test]
    fn generated_covers_single_host() {
        let mut f = FibTrie::build([(p("10.0.0.0/31"), A), (p("10.0.0.1/32"), B)]);
        let r = f.generate_cacheable(a("10.0.0.0")).unwrap();
        assert_eq!(
            r,
            CacheRoute {
                prefix: prefix_of(a("10.0.0.0"), 32),
                next_hop: A
            }
        );
        let r = f.generate_cacheable(a("10.0.0.1")).unwrap();
        assert_eq!(
            r,
            CacheRoute {
                prefix: p("10.0.0.1/32"),
                next_hop: B
            }
        );
    }
}
