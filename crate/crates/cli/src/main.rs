mod commands;
mod grid;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use otsclust::Metric;

/// Fuzzy clustering of ordinal time series.
#[derive(Debug, Parser)]
#[command(name = "otsclust", version, about)]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, env = "OTSCLUST_THREADS")]
    pub threads: Option<usize>,

    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a benchmark scenario into JSON lines plus a ground-truth sidecar.
    Simulate(SimulateArgs),
    /// Per-series marginal features, kappas and autocorrelations.
    Features(FeaturesArgs),
    /// Pairwise dissimilarity matrix.
    Distmat(DistmatArgs),
    /// Standard or weighted fuzzy C-medoids.
    Cluster(ClusterArgs),
    /// Data-driven lag set via serial independence tests.
    SelectLags(SelectLagsArgs),
    /// Choose the number of clusters and the fuzzifier by validity indices.
    SelectCm(SelectCmArgs),
    /// Compare a partition with ground truth (ARIF/JIF, correct classification).
    Evaluate(EvaluateArgs),
    /// Two-dimensional metric scaling of a distance matrix.
    Mds(MdsArgs),
    /// Monte-Carlo benchmark over trials, metrics and fuzzifiers.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: u32,
    /// Series length; omitted only for scenario 5 (random lengths).
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; receives series.jsonl and truth.json.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct LagArgs {
    /// `auto`, a comma list (`1,2`) or a range (`1:3`).
    #[arg(long, default_value = "1")]
    pub lags: String,
    /// Significance level for `--lags auto`.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Largest lag tested by `--lags auto`.
    #[arg(long, default_value_t = 5)]
    pub max_lag: usize,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub lags: LagArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MatrixFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct DistmatArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, default_value = "d1")]
    pub metric: Metric,
    #[command(flatten)]
    pub lags: LagArgs,
    /// `csv` writes the total matrix; `json` adds both components.
    #[arg(long, value_enum, default_value_t = MatrixFormat::Csv)]
    pub format: MatrixFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Learn a weight between the marginal and serial components.
    #[arg(long)]
    pub weighted: bool,
    #[arg(long, default_value_t = 0.5)]
    pub initial_beta: f64,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, default_value = "d1")]
    pub metric: Metric,
    #[arg(short = 'c', long)]
    pub clusters: usize,
    #[arg(short = 'm', long)]
    pub fuzziness: f64,
    #[command(flatten)]
    pub lags: LagArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CorrectionArg {
    Bonferroni,
    None,
}

#[derive(Debug, Args)]
pub struct SelectLagsArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5)]
    pub max_lag: usize,
    #[arg(long, value_enum, default_value_t = CorrectionArg::Bonferroni)]
    pub correction: CorrectionArg,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectCmArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, default_value = "d1")]
    pub metric: Metric,
    #[command(flatten)]
    pub lags: LagArgs,
    /// Cluster counts, e.g. `2:6` or `2,3,4`.
    #[arg(short = 'c', long, default_value = "2:6")]
    pub clusters: String,
    /// Fuzzifiers, e.g. `1.2:2:0.2`.
    #[arg(short = 'm', long, default_value = "1.2:2:0.2")]
    pub fuzziness: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Partition JSON written by `cluster`.
    #[arg(short, long)]
    pub partition: PathBuf,
    /// Ground-truth JSON written by `simulate`.
    #[arg(short, long)]
    pub truth: PathBuf,
    /// Membership cutoff for the correct-classification criterion.
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MdsArgs {
    /// Distance matrix CSV written by `distmat`.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Points as CSV `id,x,y`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Stress, R² and iteration count as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub scenario: u32,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma list of metrics.
    #[arg(long, value_delimiter = ',', default_value = "d1,d2")]
    pub metrics: Vec<Metric>,
    #[arg(short = 'm', long, default_value = "1.2:2:0.2")]
    pub fuzziness: String,
    /// Lag set; defaults to the scenario's own.
    #[arg(long)]
    pub lags: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long)]
    pub weighted: bool,
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Report JSON (standard output when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Trial-level CSV.
    #[arg(long)]
    pub trials_csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // a closed downstream pipe (`| head`) is not a failure
        Err(e)
            if e.chain().any(|c| {
                c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            }) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
