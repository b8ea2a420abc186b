//! `somfs`: train, label and evaluate self-organizing maps, run few-shot
//! episodes and time training throughput.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid data, 3 runtime failure.

mod commands;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use somfs_core::{FeatureFormat, InitMode, Metric};

#[derive(Debug, Parser)]
#[command(name = "somfs", version, about = "Self-organizing maps for few-shot classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an unlabeled map on a feature file.
    Train(TrainArgs),
    /// Label a trained map from annotated features.
    Label(LabelArgs),
    /// Report the accuracy of a labeled map.
    Eval(EvalArgs),
    /// Run the few-shot episode protocol.
    Episode(EpisodeArgs),
    /// Time training across map sizes and worker counts.
    Bench(BenchArgs),
    /// Write a synthetic Gaussian-blob feature file.
    Blobs(BlobsArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long)]
    features: PathBuf,
    /// Defaults to csv for `.csv` files and binary otherwise.
    #[arg(long)]
    format: Option<FeatureFormat>,
}

impl InputArgs {
    fn format(&self) -> FeatureFormat {
        self.format.unwrap_or_else(|| FeatureFormat::from_path(&self.features))
    }
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    #[arg(long, default_value_t = somfs_core::som::DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = somfs_core::som::DEFAULT_EPS_INITIAL)]
    eps_i: f64,
    #[arg(long, default_value_t = somfs_core::som::DEFAULT_EPS_FINAL)]
    eps_f: f64,
    #[arg(long, default_value_t = somfs_core::som::DEFAULT_SIGMA_INITIAL)]
    sigma_i: f64,
    #[arg(long, default_value_t = somfs_core::som::DEFAULT_SIGMA_FINAL)]
    sigma_f: f64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 10)]
    rows: usize,
    #[arg(long, default_value_t = 10)]
    cols: usize,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, default_value_t = somfs_core::som::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = Metric::Cosine)]
    metric: Metric,
    #[arg(long, default_value_t = SeedArg::default())]
    seed: SeedArg,
    #[arg(long, default_value_t = InitMode::Uniform)]
    init: InitMode,
    #[arg(long, env = "SOM_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LabelArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = somfs_core::som::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Debug, Args)]
struct EpisodeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = somfs_core::fewshot::DEFAULT_WAYS)]
    ways: usize,
    #[arg(long, default_value_t = 1)]
    shots: usize,
    #[arg(long, default_value_t = 15)]
    queries: usize,
    #[arg(long, default_value_t = somfs_core::fewshot::DEFAULT_RUNS)]
    runs: usize,
    #[arg(long, default_value_t = SeedArg::default())]
    seed: SeedArg,
    /// Defaults to 5 for one shot and 10 otherwise; give both or neither.
    #[arg(long, requires = "cols")]
    rows: Option<usize>,
    #[arg(long, requires = "rows")]
    cols: Option<usize>,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, default_value_t = Metric::Cosine)]
    metric: Metric,
    #[arg(long, default_value_t = somfs_core::som::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = InitMode::Uniform)]
    init: InitMode,
    #[arg(long, env = "SOM_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Per-episode accuracies and timings.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [100, 400, 1600, 2500])]
    neurons: Vec<usize>,
    #[arg(long, default_value_t = 784)]
    dim: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    /// Must include 1; defaults to 1 and every available CPU.
    #[arg(long, env = "SOM_WORKERS", value_delimiter = ',')]
    workers: Option<Vec<usize>>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = Metric::Euclidean)]
    metric: Metric,
    #[arg(long, default_value_t = SeedArg::default())]
    seed: SeedArg,
    /// Skip the untimed warm-up epoch.
    #[arg(long)]
    no_warmup: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BlobsArgs {
    #[arg(long, default_value_t = 5)]
    ways: usize,
    #[arg(long, default_value_t = 20)]
    per_class: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    /// Multiply each record by a log-uniform factor in `[min, max]`.
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
    scale: Option<Vec<f64>>,
    #[arg(long, default_value_t = SeedArg::default())]
    seed: SeedArg,
    #[arg(long)]
    format: Option<FeatureFormat>,
    #[arg(long)]
    out: PathBuf,
}

/// `--seed` accepts an integer or `random`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SeedArg {
    Fixed(u64),
    Random,
}

impl Default for SeedArg {
    fn default() -> Self {
        SeedArg::Fixed(somfs_core::rng::DEFAULT_SEED)
    }
}

impl std::str::FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("random") {
            return Ok(SeedArg::Random);
        }
        s.parse()
            .map(SeedArg::Fixed)
            .map_err(|_| format!("expected an unsigned integer or \"random\", got {s:?}"))
    }
}

impl fmt::Display for SeedArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedArg::Fixed(s) => write!(f, "{s}"),
            SeedArg::Random => f.write_str("random"),
        }
    }
}

impl SeedArg {
    fn resolve(self) -> u64 {
        match self {
            SeedArg::Fixed(s) => s,
            SeedArg::Random => {
                use std::hash::{BuildHasher, Hasher};
                let mut h = std::collections::hash_map::RandomState::new().build_hasher();
                h.write_u128(
                    std::time::SystemTime::now()
                        .duration_since(std::time::UNIX_EPOCH)
                        .map_or(0, |d| d.as_nanos()),
                );
                h.finish()
            }
        }
    }
}

/// How a command failed, which decides the exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(somfs_core::Error),
    Message { code: u8, text: String },
}

impl From<somfs_core::Error> for Failure {
    fn from(e: somfs_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(e) if e.is_data_error() => 2,
            Failure::Core(_) => 3,
            Failure::Message { code, .. } => *code,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Message { text, .. } => f.write_str(text),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Label(a) => commands::label(a),
        Command::Eval(a) => commands::eval(a),
        Command::Episode(a) => commands::episode(a),
        Command::Bench(a) => commands::bench(a),
        Command::Blobs(a) => commands::blobs(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
