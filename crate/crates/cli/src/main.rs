//! `fluxlab` command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fluxlab_cli::report::convergence_file;
use fluxlab_cli::{load_config, run, CliError, ExperimentKind, Result, RunOptions};

#[derive(Parser)]
#[command(name = "fluxlab", version, about = "Flux-across-surfaces experiments for free Gaussian wave packets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrated flux through caps of growing radius vs the momentum cone probability.
    FasScan(RunArgs),
    /// Position cone probability over time vs the momentum cone probability.
    Sict(RunArgs),
    /// First-crossing statistics of Bohmian trajectories.
    Bohm {
        #[command(flatten)]
        args: RunArgs,
        /// Also write crossings.csv with one row per crossing.
        #[arg(long)]
        dump_crossings: bool,
    },
    /// Remainder bounds and the distance between true and asymptotic flux.
    Remainder(RunArgs),
    /// Absolute flux through whole spheres during a finite time window.
    Window(RunArgs),
    /// Convergence tables with log-log slopes from experiment CSVs.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Abscissa column (default: the first column).
        #[arg(long)]
        x: Option<String>,
        /// Columns to tabulate (default: every non-constant numeric column).
        #[arg(long = "column")]
        columns: Vec<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides ensemble.seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(kind: ExperimentKind, args: &RunArgs, dump_crossings: bool) -> Result<()> {
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set up {w} workers: {e}")))?;
    }
    let config = load_config(&args.config)?;
    if config.experiment != kind {
        return Err(CliError::Usage(format!(
            "config describes a {} experiment but the {kind} subcommand was used",
            config.experiment
        )));
    }
    let artifacts = run(
        &config,
        &RunOptions {
            seed: args.seed,
            dump_crossings,
        },
    )?;
    for t in &artifacts.tables {
        if t.name != "crossings" {
            println!("{}", t.render());
        }
    }
    for p in artifacts.write(&args.out)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::FasScan(a) => execute(ExperimentKind::FasScan, a, false),
        Command::Sict(a) => execute(ExperimentKind::Sict, a, false),
        Command::Bohm { args, dump_crossings } => execute(ExperimentKind::Bohm, args, *dump_crossings),
        Command::Remainder(a) => execute(ExperimentKind::Remainder, a, false),
        Command::Window(a) => execute(ExperimentKind::Window, a, false),
        Command::Report { files, x, columns } => files
            .iter()
            .try_for_each(|f| convergence_file(f, x.as_deref(), columns).map(|c| println!("{}", c.render()))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.to_json()).expect("error report serializes"));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
