//! IPv4 addresses, canonical prefixes and next-hop identifiers.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Maximum prefix length for IPv4.
pub const MAX_LEN: u8 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrefixError {
    #[error("malformed prefix {text:?}: {reason}")]
    Malformed { text: String, reason: &'static str },
    #[error("non-canonical prefix {0:?}: host bits set below the prefix length")]
    NonCanonical(String),
    #[error("malformed address {0:?}")]
    MalformedAddress(String),
}

/// An IPv4 address held as a host-order `u32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct IpAddr32(pub u32);

impl IpAddr32 {
    pub const fn new(a: u8, b: u8, c: u8, d: u8) -> Self {
        IpAddr32(u32::from_be_bytes([a, b, c, d]))
    }

    #[inline]
    pub const fn bits(self) -> u32 {
        self.0
    }

    /// Bit at position `index`, counted from the most significant bit (0..32).
    #[inline]
    pub const fn bit(self, index: u8) -> usize {
        ((self.0 >> (31 - index as u32)) & 1) as usize
    }
}

impl fmt::Display for IpAddr32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0.to_be_bytes();
        write!(f, "{a}.{b}.{c}.{d}")
    }
}

impl From<u32> for IpAddr32 {
    fn from(v: u32) -> Self {
        IpAddr32(v)
    }
}

impl From<std::net::Ipv4Addr> for IpAddr32 {
    fn from(v: std::net::Ipv4Addr) -> Self {
        IpAddr32(u32::from(v))
    }
}

/// Strict dotted-quad parser: exactly four decimal octets, no signs, no
/// surrounding whitespace.
fn parse_dotted_quad(text: &str) -> Option<u32> {
    let mut value: u32 = 0;
    let mut parts = 0;
    for part in text.split('.') {
        if part.is_empty() || part.len() > 3 || !part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let octet: u32 = part.parse().ok()?;
        if octet > 255 {
            return None;
        }
        value = (value << 8) | octet;
        parts += 1;
    }
    (parts == 4).then_some(value)
}

impl FromStr for IpAddr32 {
    type Err = PrefixError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_dotted_quad(s)
            .map(IpAddr32)
            .ok_or_else(|| PrefixError::MalformedAddress(s.to_string()))
    }
}

/// Network mask with the top `len` bits set.
#[inline]
pub const fn mask(len: u8) -> u32 {
    if len == 0 {
        0
    } else {
        u32::MAX << (32 - len as u32)
    }
}

/// A canonical IPv4 prefix: no address bit below the prefix length is set.
///
/// Ordering is by address, then by length, which is also the order in which
/// pairwise-disjoint prefixes appear on the address line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IpPrefix {
    addr: IpAddr32,
    len: u8,
}

impl IpPrefix {
    /// The default route `0.0.0.0/0`.
    pub const DEFAULT: IpPrefix = IpPrefix {
        addr: IpAddr32(0),
        len: 0,
    };

    /// Builds a prefix, rejecting lengths above 32 and set host bits.
    pub fn new(addr: IpAddr32, len: u8) -> Result<Self, PrefixError> {
        if len > MAX_LEN {
            return Err(PrefixError::Malformed {
                text: format!("{addr}/{len}"),
                reason: "length exceeds 32",
            });
        }
        if addr.0 & !mask(len) != 0 {
            return Err(PrefixError::NonCanonical(format!("{addr}/{len}")));
        }
        Ok(IpPrefix { addr, len })
    }

    /// Keeps the top `len` bits of `addr`. Lengths above 32 are clamped.
    pub fn of(addr: IpAddr32, len: u8) -> Self {
        let len = len.min(MAX_LEN);
        IpPrefix {
            addr: IpAddr32(addr.0 & mask(len)),
            len,
        }
    }

    /// Smallest key in the address-then-length order among prefixes whose
    /// address is `addr`. Not canonical; only for ordered-map range bounds.
    pub(crate) const fn lower_bound(addr: IpAddr32) -> Self {
        IpPrefix { addr, len: 0 }
    }

    #[inline]
    pub const fn addr(&self) -> IpAddr32 {
        self.addr
    }

    #[inline]
    #[allow(clippy::len_without_is_empty)]
    pub const fn len(&self) -> u8 {
        self.len
    }

    /// True only for the zero-length default prefix.
    #[inline]
    pub const fn is_default(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains(&self, a: IpAddr32) -> bool {
        (a.0 ^ self.addr.0) & mask(self.len) == 0
    }

    /// `self` covers `other` when it is no longer and contains its address.
    #[inline]
    pub fn covers(&self, other: &IpPrefix) -> bool {
        self.len <= other.len && self.contains(other.addr)
    }

    /// Two prefixes share an address iff one covers the other.
    #[inline]
    pub fn overlaps(&self, other: &IpPrefix) -> bool {
        self.covers(other) || other.covers(self)
    }

    /// First address in the prefix.
    #[inline]
    pub fn first(&self) -> IpAddr32 {
        self.addr
    }

    /// Last address in the prefix.
    #[inline]
    pub fn last(&self) -> IpAddr32 {
        IpAddr32(self.addr.0 | !mask(self.len))
    }

    /// Number of addresses covered, as a `u64` so that `/0` fits.
    pub fn size(&self) -> u64 {
        1u64 << (32 - self.len as u32)
    }
}

impl fmt::Display for IpPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.addr, self.len)
    }
}

impl FromStr for IpPrefix {
    type Err = PrefixError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse_prefix(text)
    }
}

/// Parses `A.B.C.D/L`. Host bits below `L` must be zero; they are never
/// silently masked.
pub fn parse_prefix(text: &str) -> Result<IpPrefix, PrefixError> {
    let malformed = |reason| PrefixError::Malformed {
        text: text.to_string(),
        reason,
    };
    let (addr, len) = text
        .split_once('/')
        .ok_or_else(|| malformed("missing '/'"))?;
    let addr = parse_dotted_quad(addr).ok_or_else(|| malformed("bad dotted-quad address"))?;
    if len.is_empty() || len.len() > 2 || !len.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed("bad prefix length"));
    }
    let len: u8 = len.parse().map_err(|_| malformed("bad prefix length"))?;
    if len > MAX_LEN {
        return Err(malformed("length exceeds 32"));
    }
    IpPrefix::new(IpAddr32(addr), len).map_err(|_| PrefixError::NonCanonical(text.to_string()))
}

/// The canonical prefix made of the top `len` bits of `a`.
pub fn prefix_of(a: IpAddr32, len: u8) -> IpPrefix {
    IpPrefix::of(a, len)
}

/// Opaque next-hop label. Identifiers come straight from the RIB file, so
/// equality is identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NextHop(pub u32);

impl fmt::Display for NextHop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for NextHop {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(NextHop)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> IpPrefix {
        s.parse().unwrap()
    }

    fn a(s: &str) -> IpAddr32 {
        s.parse().unwrap()
    }

    #[test]
    fn parse_examples() {
        assert_eq!(p("0.0.0.0/0"), IpPrefix::DEFAULT);
        let ten = p("10.0.0.0/8");
        assert_eq!(ten.addr().0, 0x0A00_0000);
        assert_eq!(ten.len(), 8);
        assert!(matches!(
            parse_prefix("10.0.0.1/8"),
            Err(PrefixError::NonCanonical(_))
        ));
    }

    #[test]
    fn parse_rejects_garbage() {
        for bad in [
            "10.0.0.0",
            "10.0.0.0/33",
            "256.0.0.0/8",
            "10.0.0/8",
            "10.0.0.0.0/8",
            "10.0.0.0/",
            "/8",
            "10.0.0.0/-1",
            " 10.0.0.0/8",
            "10.0.0.0/8 ",
            "a.b.c.d/8",
            "10.0.0.0/+8",
        ] {
            assert!(
                matches!(parse_prefix(bad), Err(PrefixError::Malformed { .. })),
                "{bad} should be malformed"
            );
        }
    }

    #[test]
    fn contains_examples() {
        assert!(IpPrefix::DEFAULT.contains(a("203.0.113.7")));
        assert!(p("10.0.0.0/8").contains(a("10.255.0.1")));
        // 10.2.0.0/15 spans 10.2.0.0..=10.3.255.255.
        assert!(!p("10.2.0.0/15").contains(a("10.4.0.0")));
        assert!(p("10.2.0.0/15").contains(a("10.3.255.255")));
    }

    #[test]
    fn covers_examples() {
        assert!(p("10.0.0.0/8").covers(&p("10.1.0.0/16")));
        assert!(p("10.1.0.0/16").covers(&p("10.1.0.0/16")));
        assert!(!p("10.2.0.0/15").covers(&p("10.1.0.0/16")));
        assert!(!p("10.1.0.0/16").covers(&p("10.0.0.0/8")));
    }

    #[test]
    fn prefix_of_examples() {
        let x = a("10.2.3.4");
        assert_eq!(prefix_of(x, 32), p("10.2.3.4/32"));
        assert_eq!(prefix_of(x, 15), p("10.2.0.0/15"));
        assert_eq!(prefix_of(x, 15).addr().0, x.0 & 0xFFFE_0000);
        assert_eq!(prefix_of(a("255.255.255.255"), 0), IpPrefix::DEFAULT);
    }

    #[test]
    fn bounds_and_display() {
        let q = p("10.2.0.0/15");
        assert_eq!(q.first(), a("10.2.0.0"));
        assert_eq!(q.last(), a("10.3.255.255"));
        assert_eq!(q.size(), 1 << 17);
        assert_eq!(IpPrefix::DEFAULT.size(), 1 << 32);
        assert_eq!(q.to_string(), "10.2.0.0/15");
        assert_eq!(a("1.2.3.4").to_string(), "1.2.3.4");
    }

    fn arb_prefix() -> impl Strategy<Value = IpPrefix> {
        (any::<u32>(), 0u8..=32).prop_map(|(v, l)| IpPrefix::of(IpAddr32(v), l))
    }

    proptest! {
        #[test]
        fn mutual_cover_is_equality(x in arb_prefix(), y in arb_prefix()) {
            prop_assert_eq!(x.covers(&y) && y.covers(&x), x == y);
        }

        #[test]
        fn prefix_of_is_canonical_and_contains(v in any::<u32>(), l in 0u8..=32) {
            let q = prefix_of(IpAddr32(v), l);
            prop_assert!(IpPrefix::new(q.addr(), q.len()).is_ok());
            prop_assert!(q.contains(IpAddr32(v)));
        }

        // Interval oracle: two prefixes overlap iff their address ranges intersect.
        #[test]
        fn overlap_matches_interval_intersection(x in arb_prefix(), y in arb_prefix()) {
            let (xl, xh) = (x.first().0 as u64, x.last().0 as u64);
            let (yl, yh) = (y.first().0 as u64, y.last().0 as u64);
            let intersect = xl <= yh && yl <= xh;
            prop_assert_eq!(x.overlaps(&y), intersect);
        }

        #[test]
        fn text_round_trip(x in arb_prefix()) {
            prop_assert_eq!(parse_prefix(&x.to_string()).unwrap(), x);
        }
    }
}
