mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

/// Sum-of-bit-vector quantization: encode weights, run packed GEMV, and
/// reproduce the analysis tables as CSV.
#[derive(Debug, Parser)]
#[command(name = "sbvr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a raw little-endian f32 matrix into a container.
    Quantize(QuantizeArgs),
    /// Multiply a container by a raw f32 activation vector.
    Gemv(GemvArgs),
    /// Excess kurtosis of representation points over a sweep of ratios.
    Stats(StatsArgs),
    /// Rate-distortion measurements on synthetic sources.
    Rd(RdArgs),
    /// Time packed against dense GEMV and report operation counts.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Args)]
struct QuantizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long, default_value_t = 4)]
    bits: usize,
    #[arg(long, default_value_t = 128)]
    group: usize,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    hadamard: Switch,
    /// Seed for the Hadamard sign vector.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    deterministic: Switch,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    cache: Switch,
    #[arg(long)]
    out: PathBuf,
    /// Per-group MSE table.
    #[arg(long)]
    report_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GemvArgs {
    #[arg(long)]
    weights: PathBuf,
    /// Raw f32 vector with one value per weight column.
    #[arg(long)]
    activation: PathBuf,
    #[arg(long, default_value_t = 8)]
    abits: usize,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    check: Switch,
    /// Raw f32 output, one value per weight row.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-1,-0.75,-0.5"
    )]
    r: Vec<f64>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RdArgs {
    /// gaussian[:mean:std], laplace[:b], uniform[:lo:hi] or student_t[:df].
    #[arg(long, default_value = "gaussian")]
    source: String,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 4)]
    k_max: usize,
    #[arg(long, default_value_t = 128)]
    group: usize,
    #[arg(long, default_value_t = 100)]
    groups: usize,
    /// Master seed; run `i` uses a seed derived from it and `i`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of independent runs per bit width.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, value_delimiter = ',', default_value = "sbvr,rtn")]
    quantizer: Vec<String>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 256)]
    rows: usize,
    #[arg(long, default_value_t = 4096)]
    cols: usize,
    #[arg(long, default_value_t = 128)]
    group: usize,
    #[arg(long, default_value_t = 4)]
    bits: usize,
    #[arg(long, default_value_t = 8)]
    abits: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SBVR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("SBVR_THREADS={raw:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Quantize(a) => commands::quantize(a),
        Command::Gemv(a) => commands::gemv(a),
        Command::Stats(a) => commands::stats(a),
        Command::Rd(a) => commands::rd(a),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
