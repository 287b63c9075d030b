use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dualiscope::cli::{exit_code, run_config_file, run_suite, RunOptions};

#[derive(Parser)]
#[command(
    name = "dualiscope",
    version,
    about = "Duality and correlation checks for inclusion and exclusion processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for report.json and cases.csv.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (falls back to DUALISCOPE_JOBS).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Also print the report to stdout.
    #[arg(long, global = true)]
    dump: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a preset of the verification battery: paper-exact, paper-stochastic or all.
    Suite { preset: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut options = RunOptions {
        seed: None,
        out: cli.out,
        jobs: cli.jobs,
        dump: cli.dump,
    };
    let result = match cli.command {
        Command::Run { config, seed } => {
            options.seed = seed;
            run_config_file(&config, &options)
        }
        Command::Suite { preset } => run_suite(&preset, &options),
    };
    match &result {
        Ok(r) if r.passed => eprintln!("{}: pass ({} cases)", r.experiment, r.cases),
        Ok(r) => eprintln!(
            "{}: FAIL; worst case: {}",
            r.experiment,
            r.worst_case.as_deref().unwrap_or("unknown")
        ),
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
