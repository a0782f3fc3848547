use std::process::ExitCode;

use clap::Parser;
use heavyball_cli::artifacts::sweep_summary;
use heavyball_cli::{run_experiment, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = cli.into_config().and_then(|cfg| run_experiment(&cfg));
    match outcome {
        Ok(outcome) => {
            if outcome.cells.len() == 1 {
                for v in outcome.verdicts() {
                    println!("{v}");
                }
            } else {
                print!("{}", sweep_summary(&outcome));
            }
            println!("artifacts written to {}", outcome.config.out.display());
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("heavyball: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
