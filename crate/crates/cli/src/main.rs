//! `shrira`: ground states, diagnostics and time evolution for the
//! generalized 2D Shrira equation.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use shrira_core::Error;

#[derive(Parser)]
#[command(name = "shrira", version, about = "Solitary waves of the generalized 2D Shrira equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a ground state; writes phi.field, solve_report.json, functionals.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to output.dir from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute residuals, identities and decay diagnostics for a stored field.
    Verify {
        #[arg(long)]
        field: PathBuf,
        /// Physics and decay settings; the field header's c and m otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (defaults to the field's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the evolution equation from a stored field.
    Evolve {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Track the distance to the initial profile translated at this speed.
        #[arg(long)]
        reference_speed: Option<f64>,
    },
    /// Evaluate kernels at the points of a CSV file (columns x, y).
    Kernel {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        nu: f64,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = KernelKind::HNu)]
        kind: KernelKind,
        #[arg(long, value_enum, default_value_t = NormalizationArg::IntegralForm)]
        normalization: NormalizationArg,
        #[arg(long, default_value_t = 1e-10)]
        quad_tol: f64,
        /// Skip the spectral cross-check columns.
        #[arg(long)]
        no_oracle: bool,
        /// Samples per side of the smaller oracle box.
        #[arg(long, default_value_t = 2048)]
        oracle_n: usize,
        /// Side of the smaller oracle box.
        #[arg(long, default_value_t = 128.0)]
        oracle_l: f64,
    },
    /// Continuation in c or m; writes sweep.csv.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepArg,
        /// Comma-separated values, in continuation order.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the Lizorkin conditions of the three regularity multipliers.
    Lizorkin {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 121)]
        n_samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        lo: f64,
        #[arg(long, default_value_t = 1e6)]
        hi: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelKind {
    /// `h_nu`
    HNu,
    /// The x-Hilbert transform of `h_0`.
    Hk,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizationArg {
    IntegralForm,
    Fourier,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    C,
    M,
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("SHRIRA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::config("SHRIRA_THREADS", format!("expected a thread count, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_validation() => 2,
        Some(Error::Io(io)) if io.kind() == std::io::ErrorKind::NotFound => 2,
        Some(Error::NonConvergence { .. } | Error::Collapse { .. }) => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Solve { config, out } => commands::solve(&config, out),
        Command::Verify { field, config, out } => commands::verify(&field, config.as_deref(), out),
        Command::Evolve { field, config, out, reference_speed } => {
            commands::evolve(&field, &config, out, reference_speed)
        }
        Command::Kernel { nu, points, out, kind, normalization, quad_tol, no_oracle, oracle_n, oracle_l } => {
            commands::kernel(&commands::KernelArgs {
                nu,
                points,
                out,
                hk: matches!(kind, KernelKind::Hk),
                fourier: matches!(normalization, NormalizationArg::Fourier),
                quad_tol,
                oracle: (!no_oracle).then_some((oracle_n, oracle_l)),
            })
        }
        Command::Sweep { param, values, config, out } => {
            let p = match param {
                SweepArg::C => shrira_core::solver::SweepParam::C,
                SweepArg::M => shrira_core::solver::SweepParam::M,
            };
            commands::sweep(p, &values, &config, out)
        }
        Command::Lizorkin { out, n_samples, lo, hi } => commands::lizorkin(&out, n_samples, (lo, hi)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
