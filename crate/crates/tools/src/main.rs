use std::process::ExitCode;

use clap::Parser;

use penrose_tools::commands::{run_cli, Cli};

fn main() -> ExitCode {
    ExitCode::from(run_cli(Cli::parse()))
}
