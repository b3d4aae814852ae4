mod commands;
mod context;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl From<betheforge::Error> for CliError {
    fn from(e: betheforge::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "betheforge", version, about = "Spectra, Bethe states, counting, thermodynamics, RSOS paths and S-matrices of L0-regular gl(2) chains")]
struct Cli {
    /// Chain description (JSON: {"motif": ["1/2", "1"], "repeats": 2}).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Excitation description (JSON with holes, strings, twice_q).
    #[arg(long, global = true)]
    context: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 4096)]
    grid_n: usize,
    /// Half-width of the density grid.
    #[arg(long, global = true, default_value_t = 24.0)]
    window: f64,
    /// Overrides the command's match tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Largest Hilbert-space dimension that may be built.
    #[arg(long, global = true, default_value_t = betheforge::chain::DEFAULT_CAP)]
    cap: u128,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Hamiltonian spectra and the Bethe-state oracle.
    Diag,
    /// Bethe states with M roots.
    Bethe {
        #[arg(long)]
        m: usize,
    },
    /// State counting against the Hilbert-space dimension.
    Count,
    /// Vacuum energy, momentum and densities.
    Vacuum,
    /// Bookkeeping and dispersion of an excitation.
    Excite,
    /// RSOS path counts against the closed formula.
    Rsos {
        /// Largest D + D'.
        #[arg(long, default_value_t = 12)]
        max_sum: usize,
    },
    /// Phase shifts, factorized S-matrix and conjectured spectra.
    Smatrix,
    /// Central charge.
    CentralCharge,
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("BETHEFORGE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Validation(format!("BETHEFORGE_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Numeric(e.to_string()))?;
    }
    Ok(())
}

fn validate(cli: &Cli) -> Result<(), CliError> {
    if cli.grid_n < 2 {
        return Err(CliError::Validation("--grid-n must be at least 2".into()));
    }
    if !(cli.window > 0.0 && cli.window.is_finite()) {
        return Err(CliError::Validation("--window must be positive".into()));
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Validation("--tol must be positive".into()));
        }
    }
    if let Command::Rsos { max_sum } = cli.command {
        if max_sum % 2 != 0 || max_sum > 40 {
            return Err(CliError::Validation("--max-sum must be even and at most 40".into()));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    validate(&cli)?;
    configure_threads()?;
    let cfg = RunConfig {
        spec: cli.spec,
        context: cli.context,
        out: cli.out,
        grid_n: cli.grid_n,
        window: cli.window,
        tol: cli.tol,
        cap: cli.cap,
    };
    match cli.command {
        Command::Diag => commands::cmd_diag(&cfg),
        Command::Bethe { m } => commands::cmd_bethe(&cfg, m),
        Command::Count => commands::cmd_count(&cfg),
        Command::Vacuum => commands::cmd_vacuum(&cfg),
        Command::Excite => commands::cmd_excite(&cfg),
        Command::Rsos { max_sum } => commands::cmd_rsos(&cfg, max_sum),
        Command::Smatrix => commands::cmd_smatrix(&cfg),
        Command::CentralCharge => commands::cmd_central_charge(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Validation(_) | CliError::Io(_) => ExitCode::from(2),
                CliError::Numeric(_) => ExitCode::from(3),
            }
        }
    }
}
