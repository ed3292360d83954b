//! `hnspec`: direct and inverse spectral computations for Schrödinger
//! problems with rational Herglotz-Nevanlinna boundary conditions.

mod commands;
mod error;
mod output;
mod selfcheck;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hn_spectral::{Missing, MissingSlot};

use crate::output::Format;

#[derive(Parser)]
#[command(name = "hnspec", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute eigenvalues, norming constants, β and χ′.
    Spectrum {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        io: SpectrumIo,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check a spectrum against the identity system of the left coefficient.
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        io: SpectrumIo,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        sums: SumArgs,
        /// Largest acceptable residual (max-norm).
        #[arg(long, default_value_t = 1e-4)]
        threshold: f64,
    },
    /// Recover the left boundary coefficient from a spectrum.
    RecoverBc {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        io: SpectrumIo,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        sums: SumArgs,
        /// Index of the coefficient to recover; defaults to the one recorded
        /// in the spectrum.
        #[arg(long)]
        ind_f: Option<usize>,
    },
    /// Fill in missing eigenvalues and norming constants.
    RecoverMissing {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        io: SpectrumIo,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        sums: SumArgs,
        /// Partial spectrum: {"known": [...], "missing": [...]}.
        #[arg(long, conflicts_with = "spectrum_in")]
        partial_in: Option<PathBuf>,
        /// With --spectrum-in: slot to delete, as N:lambda, N:gamma or N:both.
        #[arg(long = "missing", value_parser = parse_slot, requires = "spectrum_in")]
        missing: Vec<MissingSlot>,
    },
    /// Run the built-in closed-form oracle checks.
    Selfcheck,
}

#[derive(Args)]
pub struct ProblemArgs {
    /// Problem file: {"potential": ..., "f": ..., "F": ..., "solver": ...}.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of eigenvalues to compute.
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub ode_rel_tol: Option<f64>,
    #[arg(long)]
    pub ode_abs_tol: Option<f64>,
    #[arg(long)]
    pub eigen_tol: Option<f64>,
    /// Run the direct solver on the calling thread only.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args)]
pub struct SpectrumIo {
    /// Read the spectrum from this file instead of solving.
    #[arg(long)]
    pub spectrum_in: Option<PathBuf>,
    /// Also write the spectrum used (JSON) to this file.
    #[arg(long)]
    pub spectrum_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the result here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct SumArgs {
    /// Use bare partial sums without the modelled tail.
    #[arg(long)]
    pub no_tail: bool,
}

fn parse_slot(s: &str) -> Result<MissingSlot, String> {
    let (n, which) = s
        .split_once(':')
        .ok_or("expected N:lambda, N:gamma or N:both")?;
    let n = n.parse().map_err(|e| format!("bad index {n:?}: {e}"))?;
    let which = match which {
        "lambda" => Missing::Lambda,
        "gamma" => Missing::Gamma,
        "both" => Missing::Both,
        other => return Err(format!("unknown quantity {other:?}")),
    };
    Ok(MissingSlot::new(n, which))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum { problem, io, out } => commands::spectrum(&problem, &io, &out),
        Command::Verify {
            problem,
            io,
            out,
            sums,
            threshold,
        } => commands::verify(&problem, &io, &out, &sums, threshold),
        Command::RecoverBc {
            problem,
            io,
            out,
            sums,
            ind_f,
        } => commands::recover_bc(&problem, &io, &out, &sums, ind_f),
        Command::RecoverMissing {
            problem,
            io,
            out,
            sums,
            partial_in,
            missing,
        } => commands::recover_missing(&problem, &io, &out, &sums, partial_in.as_deref(), missing),
        Command::Selfcheck => selfcheck::run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hnspec: {e}");
            e.exit_code()
        }
    }
}
