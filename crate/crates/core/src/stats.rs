//! Windowed miss-ratio accounting and occupancy sampling, with CSV output.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::engine::{ServedBy, Snapshot};

pub const MISS_RATIOS_FILE: &str = "miss_ratios.csv";
pub const OCCUPANCY_FILE: &str = "occupancy.csv";
pub const MISS_RATIOS_HEADER: &str =
    "window,packets,tcam_misses,sram_misses,tcam_miss_ratio,sram_miss_ratio";
pub const OCCUPANCY_HEADER: &str = "packet_count,tcam_entries,sram_entries,generated_total";

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("no packets recorded since the last window was closed")]
    EmptyWindow,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStat {
    /// 1-based.
    pub window_index: u64,
    pub packets_in_window: u64,
    pub tcam_misses: u64,
    pub sram_misses: u64,
    pub tcam_miss_ratio: f64,
    pub sram_miss_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccupancySample {
    pub packet_count: u64,
    pub tcam_entries: usize,
    pub sram_entries: usize,
    pub generated_total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub total_packets: u64,
    pub tcam_misses: u64,
    pub sram_misses: u64,
    pub overall_tcam_miss_ratio: f64,
    pub overall_sram_miss_ratio: f64,
    pub final_tcam_entries: usize,
    pub final_sram_entries: usize,
    pub final_generated_total: usize,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total_packets:           {}", self.total_packets)?;
        writeln!(f, "tcam_misses:             {}", self.tcam_misses)?;
        writeln!(f, "sram_misses:             {}", self.sram_misses)?;
        writeln!(
            f,
            "overall_tcam_miss_ratio: {:.6}",
            self.overall_tcam_miss_ratio
        )?;
        writeln!(
            f,
            "overall_sram_miss_ratio: {:.6}",
            self.overall_sram_miss_ratio
        )?;
        writeln!(f, "final_tcam_entries:      {}", self.final_tcam_entries)?;
        writeln!(f, "final_sram_entries:      {}", self.final_sram_entries)?;
        write!(f, "final_generated_total:   {}", self.final_generated_total)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accumulates per-packet outcomes into fixed-size windows.
#[derive(Debug, Clone, Default)]
pub struct StatsSink {
    next_window: u64,
    window_packets: u64,
    window_tcam_misses: u64,
    window_sram_misses: u64,
    total_packets: u64,
    total_tcam_misses: u64,
    total_sram_misses: u64,
    windows: Vec<WindowStat>,
    occupancy: Vec<OccupancySample>,
}

impl StatsSink {
    pub fn new() -> Self {
        StatsSink {
            next_window: 1,
            ..Default::default()
        }
    }

    /// Anything not served by the TCAM is a TCAM miss; anything served by
    /// DRAM or dropped is also an SRAM miss.
    pub fn record(&mut self, served_by: Option<ServedBy>) {
        let (tcam_miss, sram_miss) = match served_by {
            Some(ServedBy::Tcam) => (false, false),
            Some(ServedBy::Sram) => (true, false),
            Some(ServedBy::Dram) | None => (true, true),
        };
        self.window_packets += 1;
        self.total_packets += 1;
        if tcam_miss {
            self.window_tcam_misses += 1;
            self.total_tcam_misses += 1;
        }
        if sram_miss {
            self.window_sram_misses += 1;
            self.total_sram_misses += 1;
        }
    }

    pub fn pending_packets(&self) -> u64 {
        self.window_packets
    }

    pub fn close_window(&mut self) -> Result<WindowStat, StatsError> {
        if self.window_packets == 0 {
            return Err(StatsError::EmptyWindow);
        }
        let stat = WindowStat {
            window_index: self.next_window,
            packets_in_window: self.window_packets,
            tcam_misses: self.window_tcam_misses,
            sram_misses: self.window_sram_misses,
            tcam_miss_ratio: ratio(self.window_tcam_misses, self.window_packets),
            sram_miss_ratio: ratio(self.window_sram_misses, self.window_packets),
        };
        self.next_window += 1;
        self.window_packets = 0;
        self.window_tcam_misses = 0;
        self.window_sram_misses = 0;
        self.windows.push(stat);
        Ok(stat)
    }

    pub fn sample_occupancy(&mut self, snapshot: &Snapshot) {
        self.occupancy.push(OccupancySample {
            packet_count: snapshot.packet_count,
            tcam_entries: snapshot.tcam_occupancy,
            sram_entries: snapshot.sram_occupancy,
            generated_total: snapshot.trie.generated_total,
        });
    }

    pub fn windows(&self) -> &[WindowStat] {
        &self.windows
    }

    pub fn occupancy_samples(&self) -> &[OccupancySample] {
        &self.occupancy
    }

    /// Totals over every recorded packet, including any still-open window.
    /// Ratios are computed in `f64` from exact integer counts.
    pub fn summary(&self, last: &Snapshot) -> Summary {
        Summary {
            total_packets: self.total_packets,
            tcam_misses: self.total_tcam_misses,
            sram_misses: self.total_sram_misses,
            overall_tcam_miss_ratio: ratio(self.total_tcam_misses, self.total_packets),
            overall_sram_miss_ratio: ratio(self.total_sram_misses, self.total_packets),
            final_tcam_entries: last.tcam_occupancy,
            final_sram_entries: last.sram_occupancy,
            final_generated_total: last.trie.generated_total,
        }
    }

    pub fn miss_ratios_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.windows.len() + 1));
        out.push_str(MISS_RATIOS_HEADER);
        out.push('\n');
        for w in &self.windows {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{:.6}\n",
                w.window_index,
                w.packets_in_window,
                w.tcam_misses,
                w.sram_misses,
                w.tcam_miss_ratio,
                w.sram_miss_ratio
            ));
        }
        out
    }

    pub fn occupancy_csv(&self) -> String {
        let mut out = String::with_capacity(40 * (self.occupancy.len() + 1));
        out.push_str(OCCUPANCY_HEADER);
        out.push('\n');
        for s in &self.occupancy {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.packet_count, s.tcam_entries, s.sram_entries, s.generated_total
            ));
        }
        out
    }

    /// Writes `miss_ratios.csv` and `occupancy.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<(), StatsError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(MISS_RATIOS_FILE), self.miss_ratios_csv())?;
        fs::write(dir.join(OCCUPANCY_FILE), self.occupancy_csv())?;
        Ok(())
    }
}
