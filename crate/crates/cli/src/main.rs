mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaussify::classic::GridRange;
use gaussify::distributions::Marginal;
use gaussify::reliability::{Averaging, Pairing, SessionWindow, StudyTransform};

#[derive(Parser)]
#[command(
    name = "gaussify",
    version,
    about = "Rank-based normalization, normality tests and test-retest reliability",
    after_help = "\
Data files are long-format CSV with header `subject,session,measure,value`,
or one value per line with --plain. Input defaults to stdin, output to stdout.

Examples:
  gaussify synth --subjects 193 --sessions 6 --marginal lognormal:0,1 > data.csv
  gaussify transform --method rank-normal --spec-out spec.txt data.csv > normal.csv
  gaussify test-normality --test both normal.csv
  gaussify reliability --window first:6 --transforms log,boxcox,rank-normal data.csv"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// Input file (stdin when absent or `-`)
    input: Option<PathBuf>,

    /// Output file (stdout when absent)
    #[arg(short, long)]
    output: Option<PathBuf>,

    /// Input is one value per line instead of long CSV
    #[arg(long)]
    plain: bool,

    /// Restrict to one measure
    #[arg(long)]
    measure: Option<String>,
}

#[derive(Args)]
struct ReportFormat {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    /// Tab-separated table with p-values rounded to two significant figures
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Normal scores of midranks, fitted per measure on all sessions
    RankNormal,
    Log,
    Logit,
    /// Scaled Box-Cox; parameters are fitted per measure unless both lambdas are given
    Boxcox,
    /// Φ⁻¹ of the CDF of a known distribution (--dist)
    Analytic,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TestChoice {
    /// Anderson–Darling
    Ad,
    /// Kolmogorov–Smirnov with a Monte Carlo null
    Ks,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Transform values toward normality and write them back out
    Transform {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum)]
        method: Method,
        /// Mean of the target normal (rank-normal, analytic)
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu: f64,
        /// Standard deviation of the target normal (rank-normal, analytic)
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, allow_hyphen_values = true, requires = "lambda2")]
        lambda1: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "lambda1")]
        lambda2: Option<f64>,
        /// Source distribution for --method analytic, e.g. weibull:9,1
        #[arg(long)]
        dist: Option<Marginal>,
        /// Write the fitted rank-normal transforms here
        #[arg(long)]
        spec_out: Option<PathBuf>,
        /// Apply previously fitted rank-normal transforms instead of fitting
        #[arg(long, conflicts_with = "spec_out")]
        spec_in: Option<PathBuf>,
    },
    /// Fit Box-Cox parameters per measure by maximizing the Anderson–Darling p-value
    FitBoxcox {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        format: ReportFormat,
        /// λ1 grid as min:step:max
        #[arg(long, default_value = "-2:0.05:3", allow_hyphen_values = true)]
        grid_l1: GridRange,
        /// Number of data-relative λ2 values
        #[arg(long, default_value_t = 41)]
        grid_l2: usize,
    },
    /// Test each measure for normality
    TestNormality {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        format: ReportFormat,
        #[arg(long, value_enum, default_value_t = TestChoice::Both)]
        test: TestChoice,
        /// Monte Carlo replicates for the KS null distribution
        #[arg(long, default_value_t = gaussify::normality::DEFAULT_KS_REPLICATES)]
        ks_replicates: usize,
        /// Seed for the KS null distribution
        #[arg(long, default_value_t = gaussify::normality::DEFAULT_KS_SEED)]
        seed: u64,
    },
    /// Average test-retest correlations, raw and after transforms
    Reliability {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        format: ReportFormat,
        /// Session pairs to average: all or consecutive
        #[arg(long, default_value = "all")]
        pairing: Pairing,
        /// Sessions to use: all or first:k
        #[arg(long, default_value = "all")]
        window: SessionWindow,
        /// Comma-separated transforms: log, logit, boxcox, rank-normal
        #[arg(long, value_delimiter = ',', default_value = "log,logit,boxcox,rank-normal")]
        transforms: Vec<StudyTransform>,
        /// arithmetic or fisher-z
        #[arg(long, default_value = "arithmetic")]
        averaging: Averaging,
        /// Fit transforms per session instead of on the pooled sessions (inflates r)
        #[arg(long)]
        per_session_fit: bool,
    },
    /// Bivariate normal ↔ unit square map on two-column input
    Rosenblatt {
        /// Input file (stdin when absent or `-`)
        input: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu2: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma1: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        rho: f64,
        /// Map probabilities back to normal values
        #[arg(long)]
        inverse: bool,
    },
    /// Generate a synthetic longitudinal dataset
    Synth {
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        subjects: usize,
        #[arg(long, default_value_t = 6)]
        sessions: usize,
        /// Latent correlation between sessions, in [0, 1]
        #[arg(long, default_value_t = 0.7)]
        rho: f64,
        /// Marginal law, e.g. lognormal:0,1, weibull:9,1, uniform:0,1, normal:0,1
        #[arg(long, default_value = "lognormal:0,1")]
        marginal: Marginal,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Measure name written to the CSV
        #[arg(long = "name", default_value = "value")]
        name: String,
    },
    /// Histogram counts per measure as CSV
    Hist {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = gaussify::hist::DEFAULT_BINS)]
        bins: usize,
    },
}

/// Failures split by exit status.
enum Failure {
    /// Bad arguments (exit 2).
    Usage(String),
    /// Bad or unsuitable data (exit 1).
    Data(gaussify::Error),
}

impl From<gaussify::Error> for Failure {
    fn from(e: gaussify::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
