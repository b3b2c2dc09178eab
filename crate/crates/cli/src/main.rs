use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use mirrorcert_cli::{run, Cli, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::from(Cli::parse().command);
    match run(&config) {
        Ok(outcome) => {
            if config.output_path.is_none() {
                let mut out = std::io::stdout().lock();
                if out.write_all(outcome.output.as_bytes()).is_err() {
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
