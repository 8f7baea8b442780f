//! `pfcs`: replay traces through the three-tier FIB cache and report miss
//! ratios and cache occupancy.
//!
//! Exit codes: 0 success, 1 input error, 2 invariant or oracle violation.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pfcs_core::io::{load_rib, load_trace, load_updates, write_rib, write_trace, ParseError};
use pfcs_core::oracle::LinearFib;
use pfcs_core::workload::{generate_zipf, synthetic_rib};
use pfcs_core::{
    replay, EngineError, FibTrie, InvariantViolation, IpAddr32, IpPrefix, NextHop, PfcsEngine,
    PipelineConfig, Population, ReplayError, ReplayEvent, ScheduledUpdate, TrieError, ZipfSpec,
};

#[derive(Parser)]
#[command(name = "pfcs", version, about = "Three-tier FIB caching simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace and write miss_ratios.csv and occupancy.csv.
    Run(RunArgs),
    /// Write a seeded Zipf trace over a RIB.
    GenTrace(GenTraceArgs),
    /// Replay a trace, comparing every forwarding decision with a
    /// linear-scan lookup and checking all cache invariants.
    Validate(ValidateArgs),
    /// Write a synthetic RIB with a default route.
    GenRib(GenRibArgs),
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// TCAM capacity in entries.
    #[arg(long, default_value_t = PipelineConfig::default().tcam_capacity)]
    tcam: usize,
    /// SRAM capacity in entries.
    #[arg(long, default_value_t = PipelineConfig::default().sram_capacity)]
    sram: usize,
    /// Light hitters tracked per tier.
    #[arg(long, default_value_t = PipelineConfig::default().victim_set_size)]
    victims: usize,
    /// Promotion margin.
    #[arg(long, default_value_t = PipelineConfig::default().promotion_margin)]
    theta: u64,
    /// Packets between counter halvings.
    #[arg(long, default_value_t = PipelineConfig::default().aging_epoch)]
    epoch: u64,
    /// Packets per statistics window.
    #[arg(long, default_value_t = PipelineConfig::default().stats_window)]
    window: u64,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            tcam_capacity: self.tcam,
            sram_capacity: self.sram,
            victim_set_size: self.victims,
            promotion_margin: self.theta,
            aging_epoch: self.epoch,
            stats_window: self.window,
        }
    }
}

#[derive(Args, Clone)]
struct ZipfArgs {
    /// Zipf exponent.
    #[arg(long = "zipf-s", default_value_t = 1.0, allow_negative_numbers = true)]
    zipf_s: f64,
    /// Number of packets to generate.
    #[arg(long, default_value_t = 1_000_000)]
    packets: u64,
    /// Restrict traffic to this many routes, picked by the seed.
    #[arg(long)]
    population: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl ZipfArgs {
    fn spec(&self) -> ZipfSpec {
        ZipfSpec {
            packets: self.packets,
            skew: self.zipf_s,
            seed: self.seed,
            population: self
                .population
                .map_or(Population::AllRoutes, Population::ActiveRoutes),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    rib: PathBuf,
    /// Trace file; without it a Zipf trace is generated from --zipf-s.
    #[arg(long, conflicts_with_all = ["zipf_s", "population"])]
    trace: Option<PathBuf>,
    /// Zipf exponent for a generated trace.
    #[arg(long = "zipf-s", allow_negative_numbers = true)]
    zipf_s: Option<f64>,
    /// Packets to generate, or the maximum read from --trace.
    #[arg(long)]
    packets: Option<u64>,
    /// Restrict generated traffic to this many routes.
    #[arg(long)]
    population: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// FIB update schedule.
    #[arg(long)]
    updates: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Directory for the CSV files.
    #[arg(long)]
    out: PathBuf,
    /// Check cache invariants after every packet and update.
    #[arg(long)]
    check_invariants: bool,
}

#[derive(Args)]
struct GenTraceArgs {
    #[arg(long)]
    rib: PathBuf,
    #[command(flatten)]
    zipf: ZipfArgs,
    /// Output trace file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    rib: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    updates: Option<PathBuf>,
    #[arg(long)]
    packets: Option<u64>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Test hook: after this packet, corrupt the next hop of the cache
    /// entry that served it.
    #[arg(long, hide = true)]
    inject_fault: Option<u64>,
}

#[derive(Args)]
struct GenRibArgs {
    /// Number of routes, the default route included.
    #[arg(long, default_value_t = 100_000)]
    routes: usize,
    #[arg(long, default_value_t = 32)]
    next_hops: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// A failed command and the exit code it maps to.
#[derive(Debug)]
enum Failure {
    Input(String),
    Violation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Violation(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "error: {m}"),
            Failure::Violation(m) => write!(f, "violation: {m}"),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_failure(path: &Path, e: ParseError) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn read_rib(path: &Path) -> Result<Vec<(IpPrefix, NextHop)>, Failure> {
    load_rib(open(path)?).map_err(|e| parse_failure(path, e))
}

fn read_trace(path: &Path, limit: Option<u64>) -> Result<Vec<IpAddr32>, Failure> {
    load_trace(open(path)?, limit).map_err(|e| parse_failure(path, e))
}

fn read_updates(path: Option<&Path>) -> Result<Vec<ScheduledUpdate>, Failure> {
    match path {
        Some(p) => load_updates(open(p)?).map_err(|e| parse_failure(p, e)),
        None => Ok(Vec::new()),
    }
}

fn new_engine(rib: &[(IpPrefix, NextHop)], config: PipelineConfig) -> Result<PfcsEngine, Failure> {
    PfcsEngine::new(FibTrie::build(rib.iter().copied()), config)
        .map_err(|e| Failure::Input(e.to_string()))
}

fn replay_failure(e: ReplayError) -> Failure {
    match e {
        ReplayError::Update {
            source: EngineError::Trie(TrieError::UnknownRoute(_)),
            ..
        } => Failure::Input(format!("updates: {e}")),
        ReplayError::Violation { .. } => Failure::Violation(e.to_string()),
        other => Failure::Violation(format!("internal inconsistency: {other}")),
    }
}

fn write_file(
    path: &Path,
    write: impl FnOnce(BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), Failure> {
    File::create(path)
        .and_then(|f| write(BufWriter::new(f)))
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let config = args.pipeline.config();
    config
        .validate()
        .map_err(|e| Failure::Input(e.to_string()))?;
    let rib = read_rib(&args.rib)?;
    let destinations = match (&args.trace, args.zipf_s) {
        (Some(path), _) => read_trace(path, args.packets)?,
        (None, Some(skew)) => {
            let spec = ZipfArgs {
                zipf_s: skew,
                packets: args.packets.unwrap_or(1_000_000),
                population: args.population,
                seed: args.seed,
            }
            .spec();
            generate_zipf(&rib, &spec)
                .map_err(|e| Failure::Input(e.to_string()))?
                .destinations
        }
        (None, None) => {
            return Err(Failure::Input(
                "one of --trace or --zipf-s is required".into(),
            ))
        }
    };
    let updates = read_updates(args.updates.as_deref())?;
    let mut engine = new_engine(&rib, config)?;

    let check = args.check_invariants;
    replay(&mut engine, destinations, &updates, |e, ev| {
        if check {
            e.check_invariants()?;
            if matches!(ev, ReplayEvent::Update { .. }) {
                e.check_table_invariants()?;
            }
        }
        Ok(())
    })
    .map_err(replay_failure)?;
    if check {
        engine
            .check_table_invariants()
            .map_err(|v| Failure::Violation(format!("at end of run: {v}")))?;
    }

    let summary = engine.finish();
    engine
        .stats()
        .write_csv(&args.out)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.out.display())))?;
    println!("{summary}");
    Ok(())
}

fn cmd_gen_trace(args: GenTraceArgs) -> Result<(), Failure> {
    let rib = read_rib(&args.rib)?;
    let trace =
        generate_zipf(&rib, &args.zipf.spec()).map_err(|e| Failure::Input(e.to_string()))?;
    write_file(&args.out, |w| write_trace(w, &trace.destinations))
}

fn cmd_gen_rib(args: GenRibArgs) -> Result<(), Failure> {
    if args.routes == 0 || args.next_hops == 0 {
        return Err(Failure::Input(
            "--routes and --next-hops must be positive".into(),
        ));
    }
    let rib = synthetic_rib(args.routes, args.next_hops, args.seed);
    write_file(&args.out, |w| write_rib(w, &rib))
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let config = args.pipeline.config();
    config
        .validate()
        .map_err(|e| Failure::Input(e.to_string()))?;
    let rib = read_rib(&args.rib)?;
    let destinations = read_trace(&args.trace, args.packets)?;
    let updates = read_updates(args.updates.as_deref())?;
    let mut engine = new_engine(&rib, config)?;
    let mut oracle = LinearFib::new(rib.iter().copied());

    // With a fault to inject, the trace is replayed in two parts around it.
    let split = args.inject_fault.map_or(destinations.len(), |seq| {
        (seq as usize).min(destinations.len())
    });
    let cut = updates.partition_point(|u| u.before_seq <= split as u64);
    let parts = [
        (&destinations[..split], &updates[..cut]),
        (&destinations[split..], &updates[cut..]),
    ];
    let mut checked = 0u64;
    for (i, (dsts, ups)) in parts.into_iter().enumerate() {
        if i == 1 && args.inject_fault.is_some() && split > 0 {
            let dst = destinations[split - 1];
            let nh = oracle
                .lpm(dst)
                .map_or(NextHop(0), |(_, nh)| NextHop(nh.0.wrapping_add(1)));
            if engine.corrupt_cached_next_hop(dst, nh) {
                engine
                    .check_invariants()
                    .map_err(|v| Failure::Violation(format!("after packet {split}: {v}")))?;
            }
        }
        replay(&mut engine, dsts.iter().copied(), ups, |e, ev| {
            match ev {
                ReplayEvent::Update { update, .. } => {
                    oracle.apply(update);
                    e.check_table_invariants()?;
                }
                ReplayEvent::Packet { packet, outcome } => {
                    checked += 1;
                    let want = oracle.lpm(packet.dst).map(|(_, nh)| nh);
                    if outcome.next_hop != want {
                        return Err(InvariantViolation::WrongNextHop {
                            seq: packet.seq,
                            dst: packet.dst,
                            got: outcome.next_hop,
                            want,
                        });
                    }
                }
            }
            e.check_invariants()
        })
        .map_err(replay_failure)?;
    }
    engine
        .check_table_invariants()
        .map_err(|v| Failure::Violation(format!("at end of run: {v}")))?;
    println!(
        "validated {checked} packets and {} updates: no violations",
        updates.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::GenTrace(a) => cmd_gen_trace(a),
        Command::Validate(a) => cmd_validate(a),
        Command::GenRib(a) => cmd_gen_rib(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
