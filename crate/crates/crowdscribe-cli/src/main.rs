mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use commands::Cli;

/// Exit codes: 0 success, 2 unreadable or malformed input, 3 contract
/// violation (missing ground truth, mismatched ids, invalid config).
fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let input = err
                .downcast_ref::<crowdscribe::Error>()
                .is_some_and(crowdscribe::Error::is_input_error);
            ExitCode::from(if input { 2 } else { 3 })
        }
    }
}
