//! `localregret` command-line harness.
//!
//! Exit status: 0 when every enforced bound holds, 1 when one fails, 2 for
//! unusable configs, malformed summaries or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use localregret::harness::{self, ConfigFile, RunOptions};
use localregret::parallel::Execution;

#[derive(Parser)]
#[command(name = "localregret", version, about = "Run and verify local-regret experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a TOML config.
    Run {
        config: PathBuf,
        /// Comma-separated seeds replacing every experiment's seed list.
        #[arg(long, value_delimiter = ',')]
        seed_override: Option<Vec<u64>>,
        /// Worker threads for the seed sweep.
        #[arg(long, value_name = "N")]
        parallelism: Option<usize>,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run seeds one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Recheck the bounds in summary files and replay their traces.
    Verify { summaries: Vec<PathBuf> },
    /// List the builtin loss functions.
    ListBuiltins,
}

const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            seed_override,
            parallelism,
            out,
            sequential,
        } => {
            if parallelism == Some(0) {
                eprintln!("error: --parallelism must be at least 1");
                return ExitCode::from(EXIT_ERROR);
            }
            let options = RunOptions {
                seed_override,
                threads: parallelism,
                out_dir: out,
                execution: if sequential {
                    Execution::Sequential
                } else {
                    Execution::default()
                },
            };
            let report = match ConfigFile::load(&config).and_then(|c| harness::run_config(&c, &options)) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_ERROR);
                }
            };
            for path in &report.summaries {
                println!("wrote {}", path.display());
            }
            for (exp, row) in &report.failures {
                eprintln!(
                    "FAIL {exp}: {}: measured {:e}, theoretical {:e}",
                    row.name, row.measured, row.theoretical
                );
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
        Command::Verify { summaries } => match harness::verify(&summaries) {
            Ok(report) => {
                print!("{report}");
                if report.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_FAIL)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_ERROR)
            }
        },
        Command::ListBuiltins => {
            print!("{}", harness::list_builtins());
            ExitCode::SUCCESS
        }
    }
}
