use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpv::experiment::{emit_plot_data, run, Command, ExperimentConfig};
use gpv::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "gpv", version, about = "Rotating condensate experiments: profiles, trial lattices, minimisation, vortex audits")]
struct Cli {
    /// JSON experiment configuration; defaults apply to missing fields.
    #[arg(long, global = true, env = "GPV_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "GPV_OUT", default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 lets rayon decide).
    #[arg(long, global = true, env = "GPV_THREADS", default_value_t = 0)]
    threads: usize,
    /// Seed for random initial states.
    #[arg(long, global = true, env = "GPV_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Derived constants and bulk ellipse axes.
    Derive,
    /// Thomas-Fermi profile on a grid.
    Profile,
    /// Periodic unit-cell function and its metrics.
    Cell,
    /// Vortex-lattice trial state and its energy.
    Trial,
    /// Constrained minimisation of the reduced energy.
    Minimize,
    /// Vortex table of a dumped field (config `input`).
    Vortices,
    /// Per-square lower-bound audit.
    Audit,
    /// Trial (and optionally minimizer) sweep over epsilon.
    Sweep,
    /// Tidy CSV tables from JSON reports.
    Plot {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.minimize.seed = seed;
    }
    let command = match cli.cmd {
        Cmd::Derive => Command::Derive,
        Cmd::Profile => Command::Profile,
        Cmd::Cell => Command::Cell,
        Cmd::Trial => Command::Trial,
        Cmd::Minimize => Command::Minimize,
        Cmd::Vortices => Command::Vortices,
        Cmd::Audit => Command::Audit,
        Cmd::Sweep => Command::Sweep,
        Cmd::Plot { reports } => {
            for f in emit_plot_data(&reports, &cli.out)? {
                println!("{}", f.display());
            }
            return Ok(());
        }
    };
    let summary = run(command, &cfg, &cli.out)?;
    for f in &summary.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GPV_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
