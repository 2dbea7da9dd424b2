//! Batch driver: reads a JSON run config, executes one command, writes
//! results.csv / results.json / plots/*.svg under the output directory.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical non-convergence in a
//! fail-fast command.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use effburn::cli;
use effburn::config::RunConfig;
use effburn::error::Error;

#[derive(Parser, Debug)]
#[command(
    name = "effburn",
    about = "Effective Hamiltonians, burning velocities and flame fronts for |p|^2 + A V(x).p on the 2-torus",
    version
)]
struct Args {
    /// Path to the JSON run configuration.
    #[arg(long, global = true, default_value = "effburn.json")]
    config: PathBuf,

    /// Output directory (overrides the config's output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed recorded in outputs for any randomized sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Batch effective-Hamiltonian values over the configured p_list.
    Hbar,
    /// Batch burning velocities over the configured p_list.
    Alpha,
    /// Trace a level curve of alpha (or Hbar, per level_kind) and detect
    /// flat pieces.
    LevelCurve,
    /// Trace {alpha = 1} and report flat arcs against the resonance scan.
    FlatPieces,
    /// Weak-flow expansion coefficients and residual tables.
    Perturb,
    /// Trace effective flame fronts via the Hopf-Lax formula.
    Front,
    /// Canned experiment suites.
    Experiment {
        /// weak-flow | strong-flow | shear | cellular (defaults to the
        /// config's experiment.kind)
        variant: Option<String>,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("effburn: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&args) {
        Ok(summary) => {
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            if summary.failed_rows > 0 {
                eprintln!(
                    "effburn: {} row(s) recorded solver errors (see the error column)",
                    summary.failed_rows
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("effburn: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(args: &Args) -> effburn::Result<cli::RunSummary> {
    let mut cfg = RunConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    let out = args.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    match &args.command {
        Command::Hbar => cli::cmd_hbar(&cfg, &out),
        Command::Alpha => cli::cmd_alpha(&cfg, &out),
        Command::LevelCurve => cli::cmd_level_curve(&cfg, &out),
        Command::FlatPieces => cli::cmd_flat_pieces(&cfg, &out),
        Command::Perturb => cli::cmd_perturb(&cfg, &out),
        Command::Front => cli::cmd_front(&cfg, &out),
        Command::Experiment { variant } => {
            let kind = variant
                .clone()
                .or_else(|| cfg.experiment.kind.clone())
                .ok_or_else(|| {
                    Error::InvalidConfig(
                        "experiment needs a variant (weak-flow | strong-flow | shear | cellular) \
                         on the command line or in experiment.kind"
                            .into(),
                    )
                })?;
            match kind.as_str() {
                "weak-flow" => cli::cmd_experiment_weak_flow(&cfg, &out),
                "strong-flow" => cli::cmd_experiment_strong_flow(&cfg, &out),
                "shear" => cli::cmd_experiment_shear(&cfg, &out),
                "cellular" => cli::cmd_experiment_cellular(&cfg, &out),
                other => Err(Error::InvalidConfig(format!(
                    "unknown experiment variant '{other}'"
                ))),
            }
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::InvalidFlow(_) | Error::InvalidArgument(_) => 2,
        Error::NonConvergence { .. } | Error::BracketFailure(_) => 3,
        Error::Json(_) => 2,
        Error::ResonantDirection { .. } => 2,
        Error::Io(_) => 1,
    }
}
