//! Plain-text RIB, trace and update-schedule files.
//!
//! * RIB: `<prefix> <next_hop_id>` per line.
//! * Trace: one dotted-quad destination per line.
//! * Updates: `<seq> I <prefix> <next_hop_id>` or `<seq> W <prefix>`, meaning
//!   "apply before packet `seq`".
//!
//! Blank lines and lines starting with `#` are skipped in every format.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::engine::{FibUpdate, ScheduledUpdate};
use crate::prefix::{IpAddr32, IpPrefix, NextHop, PrefixError};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: {source}")]
    Prefix {
        line: usize,
        #[source]
        source: PrefixError,
    },
    #[error("read error: {0}")]
    Io(#[from] io::Error),
}

impl ParseError {
    /// 1-based line number, when the error is tied to one.
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { line, .. } | ParseError::Prefix { line, .. } => Some(*line),
            ParseError::Io(_) => None,
        }
    }

    fn syntax(line: usize, reason: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            reason: reason.into(),
        }
    }
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn parse_prefix_at(line: usize, text: &str) -> Result<IpPrefix, ParseError> {
    text.parse()
        .map_err(|source| ParseError::Prefix { line, source })
}

fn parse_next_hop_at(line: usize, text: &str) -> Result<NextHop, ParseError> {
    text.parse()
        .map_err(|_| ParseError::syntax(line, format!("bad next hop {text:?}")))
}

/// Reads a RIB, preserving route order.
pub fn load_rib<R: BufRead>(reader: R) -> Result<Vec<(IpPrefix, NextHop)>, ParseError> {
    let mut routes = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(prefix), Some(nh), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(ParseError::syntax(
                line_no,
                "expected `<prefix> <next_hop>`",
            ));
        };
        routes.push((
            parse_prefix_at(line_no, prefix)?,
            parse_next_hop_at(line_no, nh)?,
        ));
    }
    Ok(routes)
}

pub fn write_rib<W: Write>(mut w: W, routes: &[(IpPrefix, NextHop)]) -> io::Result<()> {
    for (p, nh) in routes {
        writeln!(w, "{p} {nh}")?;
    }
    w.flush()
}

/// Streaming trace reader; yields destinations in file order.
pub struct TraceReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
    remaining: Option<u64>,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(reader: R, limit: Option<u64>) -> Self {
        TraceReader {
            lines: reader.lines(),
            line_no: 0,
            remaining: limit,
        }
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<IpAddr32, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == Some(0) {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if is_skippable(&line) {
                continue;
            }
            if let Some(n) = self.remaining.as_mut() {
                *n -= 1;
            }
            return Some(line.trim().parse::<IpAddr32>().map_err(|_| {
                ParseError::syntax(
                    self.line_no,
                    format!("bad destination address {:?}", line.trim()),
                )
            }));
        }
    }
}

/// Reads a whole trace (up to `limit` packets). Packet `i` of the result
/// gets sequence number `i + 1`.
pub fn load_trace<R: BufRead>(reader: R, limit: Option<u64>) -> Result<Vec<IpAddr32>, ParseError> {
    TraceReader::new(reader, limit).collect()
}

pub fn write_trace<W: Write>(mut w: W, destinations: &[IpAddr32]) -> io::Result<()> {
    for d in destinations {
        writeln!(w, "{d}")?;
    }
    w.flush()
}

/// Reads an update schedule. Sequence numbers must be non-decreasing.
pub fn load_updates<R: BufRead>(reader: R) -> Result<Vec<ScheduledUpdate>, ParseError> {
    let mut out: Vec<ScheduledUpdate> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let seq: u64 = fields
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ParseError::syntax(line_no, "expected a packet sequence number"))?;
        let update = match fields[1..] {
            ["I", prefix, nh] => FibUpdate::Insert(
                parse_prefix_at(line_no, prefix)?,
                parse_next_hop_at(line_no, nh)?,
            ),
            ["W", prefix] => FibUpdate::Withdraw(parse_prefix_at(line_no, prefix)?),
            _ => {
                return Err(ParseError::syntax(
                    line_no,
                    "expected `<seq> I <prefix> <next_hop>` or `<seq> W <prefix>`",
                ))
            }
        };
        if out.last().is_some_and(|u| u.before_seq > seq) {
            return Err(ParseError::syntax(
                line_no,
                "sequence numbers must not decrease",
            ));
        }
        out.push(ScheduledUpdate {
            before_seq: seq,
            update,
        });
    }
    Ok(out)
}

pub fn write_updates<W: Write>(mut w: W, updates: &[ScheduledUpdate]) -> io::Result<()> {
    for u in updates {
        writeln!(w, "{} {}", u.before_seq, u.update)?;
    }
    w.flush()
}
