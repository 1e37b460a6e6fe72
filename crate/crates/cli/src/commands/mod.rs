use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod anchor_query;
mod lose;
mod record;
mod simulate;
mod tamper;
mod verify;

/// Exit code for verification failures.
pub const EXIT_VERIFY_FAILED: i32 = 1;
/// Exit code for usage, validation, and I/O errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser)]
#[command(name = "tevlog", version, about = "Tamper-evident sensor-data logging")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record a signed, chained log from data bodies.
    Record(RecordArgs),
    /// Remove records from a log to build loss fixtures.
    Lose(LoseArgs),
    /// Flip one byte of one record's segment body.
    Tamper(TamperArgs),
    /// Classify every index of a log against the anchor.
    Verify(VerifyArgs),
    /// Look a digest up in the anchor store.
    AnchorQuery(AnchorQueryArgs),
    /// Sweep the verifiable fraction over loss probability, checkpoint
    /// interval, and a-past offset.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

#[derive(Args)]
pub struct RecordArgs {
    /// Data bodies: a file with one body per line, or a directory whose
    /// files each become one readout.
    #[arg(long)]
    pub input: PathBuf,
    /// Key file; generated there if missing. Defaults to $TEVLOG_KEY.
    #[arg(long, env = "TEVLOG_KEY")]
    pub key: PathBuf,
    /// a-past link offset.
    #[arg(long, default_value_t = 3)]
    pub a: u64,
    /// Checkpoint interval in readouts.
    #[arg(long, default_value_t = 5)]
    pub s: u64,
    /// Log output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Anchor store path (created or updated).
    #[arg(long)]
    pub anchor: PathBuf,
    /// Receipts output path; defaults to the log path with a
    /// `.receipts.json` extension.
    #[arg(long)]
    pub receipts: Option<PathBuf>,
    /// Evidence batch size: digests per anchored Merkle root.
    #[arg(long, default_value_t = 1)]
    pub batch_size: usize,
    /// Probability that an anchor submission fails (fault injection).
    #[arg(long, default_value_t = 0.0)]
    pub fail_anchor_prob: f64,
    /// Seed for fault injection and blinding-pair generation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Timestamp of the first readout, microseconds since epoch.
    #[arg(long, default_value_t = 0)]
    pub t0: i64,
    /// Timestamp step between readouts, microseconds.
    #[arg(long, default_value_t = 1_000_000)]
    pub dt: i64,
    /// Fixed location applied to all readouts, as "lat,lon" degrees.
    #[arg(long)]
    pub location: Option<String>,
    /// Blinding pairs to attach per readout.
    #[arg(long, default_value_t = 0)]
    pub blinding: u32,
}

#[derive(Args)]
pub struct LoseArgs {
    /// Input log.
    #[arg(long)]
    pub log: PathBuf,
    /// Output log with the selected records removed.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated indices to remove.
    #[arg(long, conflicts_with = "random")]
    pub indices: Option<String>,
    /// Remove each record independently with this probability.
    #[arg(long)]
    pub random: Option<f64>,
    /// Seed for --random.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct TamperArgs {
    /// Input log.
    #[arg(long)]
    pub log: PathBuf,
    /// Output log with one byte flipped in one record.
    #[arg(long)]
    pub out: PathBuf,
    /// Record index to tamper; random if omitted.
    #[arg(long)]
    pub index: Option<u64>,
    /// Seed for random record/segment/byte selection.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Log to verify.
    #[arg(long)]
    pub log: PathBuf,
    /// Anchor store.
    #[arg(long)]
    pub anchor: PathBuf,
    /// Receipts file; defaults to the log path with a `.receipts.json`
    /// extension.
    #[arg(long)]
    pub receipts: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct AnchorQueryArgs {
    /// Anchor store.
    #[arg(long)]
    pub anchor: PathBuf,
    /// Digest to look up, hex.
    #[arg(long)]
    pub digest: String,
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Stream length.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Comma-separated loss probabilities in [0, 0.5].
    #[arg(long, default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5")]
    pub p: String,
    /// Comma-separated checkpoint intervals.
    #[arg(long, default_value = "1,10,100,1000")]
    pub s: String,
    /// Comma-separated a-past offsets.
    #[arg(long, default_value = "10")]
    pub a: String,
    /// Trials per grid point.
    #[arg(long, default_value_t = 1)]
    pub trials: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// fast: mask combinatorics only; full: real crypto pipeline.
    #[arg(long, value_enum, default_value = "fast")]
    pub mode: SimModeArg,
    /// Loss runs of this fixed length instead of independent losses.
    #[arg(long)]
    pub burst_len: Option<u32>,
    /// Probability that a checkpoint's anchoring action fails.
    #[arg(long, default_value_t = 0.0)]
    pub fail_anchor_prob: f64,
    /// CSV output path (stdout if omitted); a config sidecar is written
    /// next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SimModeArg {
    Fast,
    Full,
}

/// Runs the selected subcommand, mapping every error to an exit code and
/// a one-line diagnostic on stderr.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Record(args) => record::run(&args),
        Command::Lose(args) => lose::run(&args),
        Command::Tamper(args) => tamper::run(&args),
        Command::Verify(args) => verify::run(&args),
        Command::AnchorQuery(args) => anchor_query::run(&args),
        Command::Simulate(args) => simulate::run(&args),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            EXIT_USAGE
        }
    }
}

/// `<log stem>.receipts.json` next to the log file.
pub(crate) fn default_receipts_path(log: &std::path::Path) -> PathBuf {
    log.with_extension("receipts.json")
}

pub(crate) fn parse_u64_list(text: &str, what: &str) -> Result<Vec<u64>, String> {
    text.split(',')
        .filter(|part| !part.trim().is_empty())
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .map_err(|_| format!("invalid {what} value {part:?}"))
        })
        .collect()
}

pub(crate) fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .filter(|part| !part.trim().is_empty())
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid {what} value {part:?}"))
        })
        .collect()
}
