use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geomech::verify::{self, Suite};
use geomech_cli::{execute, load, CliError, Overrides};

#[derive(Parser)]
#[command(
    name = "geomech",
    version,
    about = "Higher-order reduced dynamics on Lie groups and principal bundles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON scenario; prints the summary and writes CSV/JSON outputs.
    Run {
        file: PathBuf,
        /// Output directory for trajectory.csv and summary.json.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Integration step override.
        #[arg(long)]
        dt: Option<f64>,
        /// Horizon override.
        #[arg(long = "T", value_name = "T")]
        t_end: Option<f64>,
        /// Seed override for verify scenarios.
        #[arg(long)]
        seed: Option<u64>,
        /// Print the normalized scenario (defaults and overrides applied) and exit.
        #[arg(long)]
        dump_config: bool,
    },
    /// Run a property suite: algebra, ep, olp, bundle, solvers or all.
    Verify {
        suite: Suite,
        #[arg(long, default_value_t = verify::DEFAULT_SEED)]
        seed: u64,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            file,
            output,
            dt,
            t_end,
            seed,
            dump_config,
        } => run(
            file,
            Overrides {
                dt,
                t_end,
                output,
                seed,
            },
            dump_config,
        ),
        Command::Verify { suite, seed, json } => verify_suite(suite, seed, json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("geomech: {e}");
            e.exit_code()
        }
    }
}

fn run(file: PathBuf, overrides: Overrides, dump_config: bool) -> Result<(), CliError> {
    let scenario = load(&file, &overrides)?;
    if dump_config {
        println!("{}", scenario.to_json());
        return Ok(());
    }
    let outcome = execute(&scenario)?;
    println!("{}", outcome.summary.to_json());
    match &outcome.summary.verify {
        Some(report) if !report.passed() => Err(CliError::ChecksFailed {
            failed: report.failures().count(),
            total: report.checks.len(),
        }),
        _ => Ok(()),
    }
}

fn verify_suite(suite: Suite, seed: u64, json: bool) -> Result<(), CliError> {
    let report = verify::run(suite, seed);
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        println!("{report}");
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed {
            failed: report.failures().count(),
            total: report.checks.len(),
        })
    }
}
