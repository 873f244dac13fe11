mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Malliavin-Watanabe-Sobolev regularity of Gaussian functionals.
#[derive(Debug, Parser)]
#[command(name = "mws", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a chaos profile: critical order and per-order membership (JSON).
    Classify {
        #[command(flatten)]
        io: Io,
        /// Comma-separated orders to decide.
        #[arg(long, default_value = "-3,-2,-1.5,-1,-0.5,0,0.5,1,1.5,2,3", allow_hyphen_values = true)]
        alphas: String,
    },
    /// Tabulate B(lambda) and λ-domain criteria of a chaos profile (CSV).
    Curve {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value = "0.1:0.9:9")]
        grid: String,
        /// Comma-separated operator orders, one column each.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Monte Carlo checks under the complex Gaussian measure (CSV).
    McVerify {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        mc: Mc,
        #[arg(long, value_enum, default_value_t = Evaluator::Monomials)]
        evaluator: Evaluator,
        /// Largest monomial order for `monomials`.
        #[arg(long, default_value_t = 4)]
        max_order: u32,
        /// λ grid for norm evaluators.
        #[arg(long, default_value = "0.25:0.75:3")]
        grid: String,
        /// Accepted |z| score.
        #[arg(long, default_value_t = 5.0)]
        tol: f64,
    },
    /// Donsker's delta: critical order and norm curve (CSV).
    Donsker {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value = "0:0.9:10")]
        grid: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Chaos truncation of the derived profile.
        #[arg(long, default_value_t = 2000)]
        terms: usize,
        /// Also write the derived chaos profile as JSON.
        #[arg(long)]
        profile_out: Option<PathBuf>,
    },
    /// Self-intersection local time criteria for fractional Brownian motion (CSV).
    Silt {
        #[command(flatten)]
        io: Io,
        /// Simplex mesh `outer:inner:order`.
        #[arg(long, default_value = "3:3:6")]
        mesh: String,
        /// Accepted relative change across mesh levels.
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
    /// Gauss kernel: determinant identity and regularity (CSV).
    GaussKernel {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value = "0.5,1", allow_hyphen_values = true)]
        alphas: String,
        #[arg(long, default_value = "0.5:1:3")]
        grid: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Quadrature against closed forms for fractional integrals and derivatives of monomials (CSV).
    Oracle {
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
struct Io {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Mc {
    #[arg(long, default_value_t = 20240601)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Evaluator {
    /// E[z^n conj(z)^m] for n, m up to --max-order.
    Monomials,
    /// Polynomial realizing a finite chaos profile (--input).
    Polynomial,
    /// Donsker's delta (--input spec).
    Donsker,
    /// Gauss kernel (--input spec).
    GaussKernel,
}

/// Why a run did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or input files: exit 2.
    Input(String),
    /// An internal cross-check failed: exit 3.
    Consistency(String),
}

/// Output body plus any failed cross-checks.
pub struct Report {
    pub body: String,
    pub failures: Vec<String>,
}

impl Report {
    pub fn ok(body: String) -> Self {
        Self { body, failures: Vec::new() }
    }
}

fn run(cli: Cli) -> Result<(Report, Option<PathBuf>), Failure> {
    use commands::*;
    Ok(match cli.command {
        Command::Classify { io, alphas } => (classify(io.input.as_deref(), &alphas)?, io.output),
        Command::Curve { io, grid, beta, tol } => (curve(io.input.as_deref(), &grid, beta.as_deref(), tol)?, io.output),
        Command::McVerify { io, mc, evaluator, max_order, grid, tol } => {
            let cfg = McConfig { seed: mc.seed, samples: mc.samples, max_order, grid, z_max: tol };
            (mc_verify(io.input.as_deref(), evaluator, &cfg)?, io.output)
        }
        Command::Donsker { io, grid, tol, terms, profile_out } => {
            (donsker(io.input.as_deref(), &grid, tol, terms, profile_out.as_deref())?, io.output)
        }
        Command::Silt { io, mesh, tol } => (silt(io.input.as_deref(), &mesh, tol)?, io.output),
        Command::GaussKernel { io, alphas, grid, tol } => {
            (gauss_kernel(io.input.as_deref(), &alphas, &grid, tol)?, io.output)
        }
        Command::Oracle { output, tol } => (oracle(tol)?, output),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (report, output) = match run(cli) {
        Ok(r) => r,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Consistency(msg)) => {
            eprintln!("consistency failure: {msg}");
            return ExitCode::from(3);
        }
    };
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &report.body) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{}", report.body),
    }
    if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in &report.failures {
            eprintln!("consistency failure: {f}");
        }
        ExitCode::from(3)
    }
}
