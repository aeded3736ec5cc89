use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sense_cli::{fit, prepare, run, FitOptions, RunOptions};

/// Exit code when some tasks of a run failed.
const PARTIAL_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "sense", version, about = "Driven-Ising sensing experiments in batch")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config's `output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every grid point and realization of a config.
    Run { config: PathBuf },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Power-law fit of two columns of a results table.
    Fit {
        table: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Fit all rows rather than the mean at each x.
        #[arg(long)]
        raw: bool,
        /// Analysis file to append to.
        #[arg(long)]
        analysis: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SENSE_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { config } => {
            if cli.jobs == Some(0) {
                anyhow::bail!("--jobs must be >= 1");
            }
            let opts = RunOptions {
                jobs: cli.jobs,
                seed: cli.seed,
                out: cli.out,
            };
            let s = run(&config, &opts)?;
            println!("{} rows from {} tasks -> {}", s.rows, s.tasks, s.results.display());
            println!("manifest: {}", s.manifest.display());
            if !s.failed.is_empty() {
                eprintln!("{} task(s) failed: {:?}", s.failed.len(), s.failed);
                return Ok(ExitCode::from(PARTIAL_FAILURE));
            }
        }
        Command::Validate { config } => {
            let p = prepare(&config)?;
            println!(
                "{}: {} experiment, {} grid point(s) x {} realization(s) = {} tasks",
                config.display(),
                p.loaded.config.kind.as_str(),
                p.grid.len(),
                p.loaded.config.realizations,
                p.tasks()
            );
        }
        Command::Fit {
            table,
            x,
            y,
            raw,
            analysis,
        } => {
            let (f, path) = fit(&table, &FitOptions { x, y, raw, analysis })?;
            println!(
                "slope {:.6} ± {:.6}, prefactor {:.6e} ({} points) -> {}",
                f.exponent,
                f.exponent_stderr,
                f.prefactor,
                f.points,
                path.display()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}
