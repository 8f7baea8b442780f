//! Linear-scan reference FIB.
//!
//! Shares no code with [`crate::trie`]: routes live in a flat vector and a
//! lookup tests every one of them. Used by the `validate` harness and by the
//! test suites as the ground truth for forwarding decisions.

use crate::engine::FibUpdate;
use crate::prefix::{IpAddr32, IpPrefix, NextHop};

#[derive(Debug, Clone, Default)]
pub struct LinearFib {
    /// Sorted by length, longest first, so the first match is the longest.
    routes: Vec<(IpPrefix, NextHop)>,
}

impl LinearFib {
    pub fn new<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (IpPrefix, NextHop)>,
    {
        let mut fib = LinearFib::default();
        for (p, nh) in entries {
            fib.insert(p, nh);
        }
        fib
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn routes(&self) -> &[(IpPrefix, NextHop)] {
        &self.routes
    }

    pub fn insert(&mut self, prefix: IpPrefix, nh: NextHop) {
        if let Some(slot) = self.routes.iter_mut().find(|(p, _)| *p == prefix) {
            slot.1 = nh;
            return;
        }
        let at = self
            .routes
            .partition_point(|(p, _)| p.len() >= prefix.len());
        self.routes.insert(at, (prefix, nh));
    }

    pub fn withdraw(&mut self, prefix: IpPrefix) -> bool {
        match self.routes.iter().position(|(p, _)| *p == prefix) {
            Some(i) => {
                self.routes.remove(i);
                true
            }
            None => false,
        }
    }

    pub fn apply(&mut self, update: &FibUpdate) -> bool {
        match *update {
            FibUpdate::Insert(p, nh) => {
                self.insert(p, nh);
                true
            }
            FibUpdate::Withdraw(p) => self.withdraw(p),
        }
    }

    pub fn lpm(&self, a: IpAddr32) -> Option<(IpPrefix, NextHop)> {
        self.routes.iter().find(|(p, _)| p.contains(a)).copied()
    }
}
