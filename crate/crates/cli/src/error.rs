use std::fmt;
use std::process::ExitCode;

use hn_spectral::Error;

/// A failure together with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Verification ran but a residual exceeded the threshold (exit 1).
    Verification(String),
    /// Unreadable or invalid configuration and input files (exit 2).
    Config(String),
    /// The direct solver failed (exit 3).
    Solver(String),
    /// Data of the wrong shape for the identity system (exit 4).
    Shape(String),
    /// Nonlinear recovery did not converge or is underdetermined (exit 5).
    Convergence(String),
    /// Writing results failed; reported like a config error.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Shape(_) => 4,
            CliError::Convergence(_) => 5,
        })
    }

    /// Classifies an error from the algebraic stages; `op` names the failing
    /// operation in the message.
    pub fn recovery(op: &str, e: Error) -> Self {
        let msg = format!("{op}: {e}");
        match e {
            Error::NoConvergence { .. } | Error::UnderdeterminedProblem { .. } => {
                CliError::Convergence(msg)
            }
            Error::InvalidInput(_) => CliError::Config(msg),
            _ => CliError::Shape(msg),
        }
    }

    pub fn solver(op: &str, e: Error) -> Self {
        match e {
            Error::InvalidInput(_) => CliError::Config(format!("{op}: {e}")),
            _ => CliError::Solver(format!("{op}: {e}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verification(m)
            | CliError::Config(m)
            | CliError::Solver(m)
            | CliError::Shape(m)
            | CliError::Convergence(m)
            | CliError::Io(m) => f.write_str(m),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
