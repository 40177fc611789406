mod commands;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

/// Vertex expansion toolkit. Every command prints one JSON report on stdout.
#[derive(Debug, Parser)]
#[command(name = "vexp", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact minimum expansion by enumeration.
    Exact {
        graph: PathBuf,
        /// Minimize the symmetric functional instead.
        #[arg(long)]
        symmetric: bool,
        /// Require w(S)·w(S̄) ≥ b·w(V)².
        #[arg(long)]
        balance: Option<f64>,
        #[arg(long, default_value_t = vertex_expansion::exact::DEFAULT_CAP)]
        cap: usize,
    },
    /// Relaxation plus Gaussian rounding.
    Approx {
        graph: PathBuf,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
    },
    /// The λ∞ relaxation.
    Sdp {
        #[command(subcommand)]
        command: SdpCommand,
    },
    /// Graph transformations.
    Transform {
        #[command(subcommand)]
        command: TransformCommand,
    },
    /// Balanced analytic vertex expansion instances.
    Bave {
        #[command(subcommand)]
        command: BaveCommand,
    },
    /// The four-state dictatorship gadget.
    Gadget {
        #[command(subcommand)]
        command: GadgetCommand,
    },
    /// Monte Carlo checks on the Gaussian graph.
    Gauss {
        #[command(subcommand)]
        command: GaussCommand,
    },
    /// Build the folded instance of a regular graph.
    Reduce {
        graph: PathBuf,
        #[arg(long = "R", default_value_t = 2)]
        r: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 5)]
        d: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the smoothing parameter (default ε / (100 d)).
        #[arg(long)]
        eta: Option<f64>,
        /// Write the instance JSON here instead of embedding it in the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a corpus graph.
    Corpus {
        generator: Generator,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        dim: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, Subcommand)]
pub enum SdpCommand {
    Solve {
        graph: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the Gram matrix as whitespace-separated rows.
        #[arg(long)]
        dump_gram: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TransformCommand {
    SquareUnion {
        graph: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    Subdivide {
        graph: PathBuf,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, Subcommand)]
pub enum BaveCommand {
    Value {
        instance: PathBuf,
        /// JSON array with one value in [0, 1] per variable.
        #[arg(long)]
        assignment: PathBuf,
    },
    Optimum {
        instance: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        balance: f64,
    },
    Threshold {
        instance: PathBuf,
        #[arg(long)]
        assignment: PathBuf,
    },
    Uniformize {
        instance: PathBuf,
        /// Cloud resolution (default 2n²).
        #[arg(long)]
        t: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    SampleGraph {
        instance: PathBuf,
        /// Target degree D.
        #[arg(long = "D")]
        big_d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, Subcommand)]
pub enum GadgetCommand {
    Chain {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    Dictator {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long = "R", default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
    Estimate {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long = "R", default_value_t = 3)]
        r: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = TestFunction::Dictator)]
        function: TestFunction,
    },
    Spectrum {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum GaussCommand {
    /// Isoperimetric ratio of a halfspace in the first coordinate.
    Iso {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 8)]
        d: usize,
        #[arg(long, default_value_t = 0.0)]
        offset: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Total variation between N(0, ε) and N(δ, ε).
    Tv {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Moments of the maximum of d Gaussians.
    Maxstat {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Probability that ‖g‖² ≥ 1/2 for a trace-one covariance.
    Pz {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Covariance::Iid)]
        covariance: Covariance,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Cycle,
    Clique,
    Star,
    Hypercube,
    RandomRegular,
    Barbell,
    TwoCliques,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestFunction {
    Dictator,
    Majority,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Covariance {
    /// I/n
    Iid,
    /// Random PSD matrix scaled to trace one.
    Random,
    /// All mass on one coordinate.
    Rank1,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the produced file here instead of embedding it in the report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.report).expect("reports serialize");
            // a closed pipe downstream is not our failure
            let _ = writeln!(io::stdout().lock(), "{text}");
            ExitCode::from(outcome.code)
        }
        Err(CliError { code, msg }) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
