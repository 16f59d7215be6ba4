//! Command-line driver: simulation runs, identity-verification suites,
//! the surface-flux balance check, and snapshot diagnostics.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 config/domain error,
//! 3 blow-up, 4 surface invalidation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bfield::error::Error;

mod run;
mod suites;
mod table;

#[derive(Parser)]
#[command(
    name = "ghbf",
    about = "Pseudo-spectral verification toolkit for potential-vorticity transport identities",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured flow and write snapshots plus series.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an identity-verification suite and print the residual table.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// ideal | boussinesq | compressible-q1 | compressible-q2
        #[arg(long)]
        suite: String,
        /// Optional directory for residuals.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override every per-row tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Co-integrate a marker surface and report the flux balance.
    SurfaceFlux {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read a snapshot and write a derived-field snapshot.
    Diagnose {
        /// Input snapshot path.
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out } => run::simulate(&config, &out),
        Command::Verify {
            config,
            suite,
            out,
            tolerance,
        } => suites::verify(&config, &suite, out.as_deref(), tolerance),
        Command::SurfaceFlux { config, out } => run::surface_flux(&config, &out),
        Command::Diagnose { snapshot, out } => run::diagnose(&snapshot, &out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// GHBF_THREADS caps the rayon pool; unset or invalid keeps the default.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("GHBF_THREADS") {
        if let Ok(threads) = v.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn exit_code_for(e: &Error) -> ExitCode {
    match e {
        Error::BlowUp { .. } => ExitCode::from(3),
        Error::MarkerMasked { .. } => ExitCode::from(4),
        _ => ExitCode::from(2),
    }
}
