//! Batch experiments for the harmonic quantum Fokker-Planck solver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 model-validation error,
//! 4 numerical-guard error. QFP_THREADS caps internal parallelism.

mod config;
mod io;
mod scenarios;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use config::{load_config, resolve_model, CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "qfp",
    about = "Phase-space experiments for a dissipative quantum kinetic model",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML configuration; omitted means the built-in confined defaults.
    #[arg(long)]
    config: Option<String>,
    /// Output directory for CSV artifacts and the manifest.
    #[arg(long, default_value = "qfp-out")]
    out: PathBuf,
    /// Also emit companion gnuplot scripts referencing the CSVs.
    #[arg(long)]
    gnuplot_stub: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Characteristic-flow coefficient time series.
    Flow(RunArgs),
    /// Kernel covariance series and kernel slices.
    Kernel(RunArgs),
    /// Propagate initial data through the exact kernel.
    Propagate(RunArgs),
    /// Steady state, its moments and diagnostics.
    Steady(RunArgs),
    /// Relative-entropy decay report.
    Entropy(RunArgs),
    /// Dispersion rates, envelopes and measured norms.
    Dispersion(RunArgs),
    /// Finite-difference reference solve (same output schema as propagate).
    Oracle(RunArgs),
    /// Run the invariant battery and print a pass/fail table.
    Verify(RunArgs),
    /// Diff the snapshots of two runs sharing a grid and time list.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        #[arg(long, default_value = "qfp-compare")]
        out: PathBuf,
    },
}

fn apply_thread_cap() {
    if let Ok(v) = std::env::var("QFP_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if !qfp_core::exec::set_thread_cap(n) {
                    eprintln!("note: thread cap ignored (pool already initialized or sequential build)");
                }
            }
            _ => eprintln!("note: ignoring unparseable QFP_THREADS = {v:?}"),
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Compare { run_a, run_b, out } => scenarios::run_compare(&run_a, &run_b, &out),
        Command::Flow(a) | Command::Kernel(a) | Command::Propagate(a) | Command::Steady(a)
        | Command::Entropy(a) | Command::Dispersion(a) | Command::Oracle(a) | Command::Verify(a) => {
            unreachable!("handled in main: {:?}", a.out)
        }
    }
}

fn run() -> CliResult<()> {
    apply_thread_cap();
    let cli = Cli::parse();
    let scenario = |a: &RunArgs, f: &dyn Fn(&config::RunConfig, &config::ResolvedModel, &std::path::Path, bool) -> CliResult<()>| {
        let cfg = load_config(a.config.as_deref())?;
        let model = resolve_model(&cfg.model)?;
        f(&cfg, &model, &a.out, a.gnuplot_stub)
    };
    match &cli.command {
        Command::Flow(a) => scenario(a, &scenarios::run_flow),
        Command::Kernel(a) => scenario(a, &scenarios::run_kernel),
        Command::Propagate(a) => scenario(a, &scenarios::run_propagate),
        Command::Steady(a) => scenario(a, &scenarios::run_steady),
        Command::Entropy(a) => scenario(a, &scenarios::run_entropy),
        Command::Dispersion(a) => scenario(a, &scenarios::run_dispersion),
        Command::Oracle(a) => scenario(a, &scenarios::run_oracle),
        Command::Verify(a) => {
            let cfg = load_config(a.config.as_deref())?;
            let model = resolve_model(&cfg.model)?;
            let ok = scenarios::run_verify(&cfg, &model, &a.out)?;
            if !ok {
                return Err(CliError::Numerical(qfp_core::QfpError::InvalidInput(
                    "verification battery reported failures".into(),
                )));
            }
            Ok(())
        }
        Command::Compare { .. } => dispatch(cli),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qfp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
