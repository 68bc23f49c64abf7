//! `ptwell` command-line front end.
//!
//! Exit codes: 0 success, 2 usage (bad flags or values), 3 computation.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_USAGE: u8 = 2;
const EXIT_COMPUTATION: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "ptwell",
    version,
    about = "Spectra of a box with a PT-symmetric pair of delta interactions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Real eigenvalues on a κ window.
    Spectrum(SpectrumArgs),
    /// Samples of F(κ), or of H(κ) = κ² F(κ) with --entire.
    Scan(ScanArgs),
    /// Argument-principle search for eigenvalues off the real axis.
    Breaking(BreakingArgs),
    /// Eigenfunction of one level on a grid.
    Wavefunction(WavefunctionArgs),
    /// Dataset behind one of the seven reference figures.
    Figure(FigureArgs),
    /// Shooting on a Gaussian-regularized potential.
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct ModelArgs {
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true)]
    omega: f64,
    #[arg(long, allow_negative_numbers = true)]
    eta: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    kappa_max: f64,
    #[arg(long, default_value_t = 0.0)]
    kappa_min: f64,
    /// Samples per unit κ (default grows with ω).
    #[arg(long)]
    density: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Also search for negative energies.
    #[arg(long)]
    negative: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    kappa_max: f64,
    #[arg(long, default_value_t = 0.0)]
    kappa_min: f64,
    #[arg(long)]
    density: Option<usize>,
    #[arg(long)]
    entire: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BreakingArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    kappa_max: f64,
    #[arg(long, default_value_t = 0.5)]
    strip_height: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WavefunctionArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    level: usize,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct FigureArgs {
    #[arg(long)]
    id: u32,
    /// Directory for the CSV files and manifest.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    kappa_min: Option<f64>,
    #[arg(long)]
    kappa_max: Option<f64>,
    #[arg(long)]
    density: Option<usize>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    level: usize,
    /// Decreasing Gaussian widths.
    #[arg(long, value_delimiter = ',', default_values_t = [4e-3, 2e-3, 1e-3])]
    sigmas: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Failure of a command, mapped onto an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Computation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Computation(_) => EXIT_COMPUTATION,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Computation(m) => m,
        }
    }
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var("PTWELL_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Failure::Usage(format!("PTWELL_THREADS: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Usage(format!(
                "PTWELL_THREADS must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let threads = threads_from_env()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::Computation(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::Scan(a) => commands::scan(&a),
        Command::Breaking(a) => commands::breaking(&a),
        Command::Wavefunction(a) => commands::wavefunction(&a),
        Command::Figure(a) => commands::figure(&a),
        Command::Oracle(a) => commands::oracle(&a),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
