use std::net::SocketAddr;
use std::path::PathBuf;

use breakrisk_core::ingest::{OpMapping, SpanFormat};
use breakrisk_core::sim::FixtureId;
use breakrisk_core::RiskMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "breakrisk",
    version,
    about = "Score the risk of breaking changes in a microservice system"
)]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an MSP file from span exports.
    Ingest(IngestArgs),
    /// Score a set of breaking operations.
    Risk(RiskArgs),
    /// Score every operation on its own.
    Sweep(SweepArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Print a builtin fixture as an MSP file.
    Fixture(FixtureArgs),
    /// Generate synthetic span exports from a topology or fixture.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SnapshotArgs {
    /// MSP file to load.
    #[arg(long)]
    pub msp: Option<PathBuf>,
    /// Builtin fixture: mce0, mce1, mce2 or p3-sample.
    #[arg(long)]
    pub fixture: Option<FixtureId>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_parser = parse_span_format)]
    pub format: SpanFormat,
    /// Span export files; repeat or list several.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// How span (service, name) pairs become operation labels.
    #[arg(long, default_value = "qualified")]
    pub mapping: OpMapping,
    /// Prefix for callees named after an unpaired client span.
    #[arg(long, conflicts_with = "skip_unpaired")]
    pub unpaired_prefix: Option<String>,
    /// Count client spans without a server span as unmappable.
    #[arg(long)]
    pub skip_unpaired: bool,
    #[arg(long, default_value = breakrisk_core::msp::DEFAULT_ENTRY_LABEL)]
    pub entry_label: String,
    /// Keep traces whose root starts at or after this time.
    #[arg(long, requires = "window_end_ns")]
    pub window_start_ns: Option<u64>,
    /// Keep traces whose root starts before this time.
    #[arg(long, requires = "window_start_ns")]
    pub window_end_ns: Option<u64>,
    #[arg(long, value_enum, default_value_t = Orphans::Drop)]
    pub on_orphan: Orphans,
    /// Reuse the path ids of an existing MSP file.
    #[arg(long)]
    pub path_ids_from: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Orphans {
    Drop,
    Reject,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    #[command(flatten)]
    pub snapshot: SnapshotArgs,
    /// Comma-separated breaking operations.
    #[arg(long = "break", required = true)]
    pub breaking: String,
    #[arg(long, env = "BREAKRISK_MODE", default_value = "affected-paths")]
    pub mode: RiskMode,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    /// Exit with status 1 when the total exceeds this value.
    #[arg(long)]
    pub fail_above: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub snapshot: SnapshotArgs,
    #[arg(long, env = "BREAKRISK_MODE", default_value = "affected-paths")]
    pub mode: RiskMode,
    #[arg(long, value_enum, default_value_t = SweepFormat::Json)]
    pub format: SweepFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub snapshot: SnapshotArgs,
    /// Address to bind; overrides the config file.
    #[arg(long)]
    pub listen: Option<SocketAddr>,
    /// TOML file with listen, cors_origin and default_mode.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Default mode for requests that name none; overrides the config file.
    #[arg(long, env = "BREAKRISK_MODE")]
    pub mode: Option<RiskMode>,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    pub id: FixtureId,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Topology spec JSON file.
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    pub topology: Option<PathBuf>,
    /// Use a builtin fixture's counts as the topology.
    #[arg(long)]
    pub fixture: Option<FixtureId>,
    /// Seed used with --fixture.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of root requests; a multiple of one replay. Defaults to one replay.
    #[arg(long)]
    pub requests: Option<u64>,
    #[arg(long, value_parser = parse_span_format, default_value = "jsonl")]
    pub format: SpanFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_span_format(s: &str) -> Result<SpanFormat, String> {
    s.parse()
        .map_err(|e: breakrisk_core::ingest::IngestError| e.to_string())
}
