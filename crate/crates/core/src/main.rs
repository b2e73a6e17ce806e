use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use soar_sim::harness::{self, HarnessError, OutputFormat, DEFAULT_TRIALS};
use soar_sim::Mode;

#[derive(Parser)]
#[command(name = "soar-sim", version, about = "Semantic obstacle-avoidance navigation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and report the first problem found.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run a single trial.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "soar")]
        mode: Mode,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Directory for the trajectory file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "table")]
        format: OutputFormat,
    },
    /// Run one mode over consecutive seeds.
    Batch {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "soar")]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "table")]
        format: OutputFormat,
        /// Worker threads (SOAR_SIM_JOBS takes precedence).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run both modes on the same seeds and report the travel-time gap.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "table")]
        format: OutputFormat,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Draw trajectories over the scenario world as SVG.
    Plot {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long = "trajectory", required = true)]
        trajectories: Vec<PathBuf>,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Validate { scenario } => {
            harness::cmd_validate(&scenario)?;
            println!("OK");
        }
        Command::Run {
            scenario,
            mode,
            seed,
            out,
            format,
        } => {
            let result = harness::cmd_run(&scenario, mode, seed, out.as_deref())?;
            print!("{}", harness::render_trial(&result, format));
        }
        Command::Batch {
            scenario,
            mode,
            trials,
            seed,
            out,
            format,
            jobs,
        } => {
            let jobs = harness::resolve_jobs(jobs);
            let spec = harness::cmd_validate(&scenario)?;
            let summary = harness::cmd_batch(&scenario, mode, trials, seed, jobs, out.as_deref())?;
            print!("{}", harness::render_batch(&spec.name, &summary, format));
        }
        Command::Compare {
            scenario,
            trials,
            seed,
            out,
            format,
            jobs,
        } => {
            let jobs = harness::resolve_jobs(jobs);
            let report = harness::cmd_compare(&scenario, trials, seed, jobs, out.as_deref())?;
            print!("{}", harness::render_comparison(&report, format));
        }
        Command::Plot {
            scenario,
            trajectories,
            out,
        } => {
            harness::cmd_plot(&scenario, &trajectories, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
