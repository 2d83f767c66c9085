mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Ctx;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx { cli: &cli };
    let result = match &cli.command {
        Command::SimulateBeam(a) => commands::simulate_beam(&ctx, a),
        Command::Identify(a) => commands::identify_cmd(&ctx, a),
        Command::Stabilize(a) => commands::stabilize(&ctx, a),
        Command::NoiseSweep(a) => commands::noise_sweep(&ctx, a),
        Command::Compare(a) => commands::compare(&ctx, a),
        Command::Anpsd(a) => commands::anpsd_cmd(&ctx, a),
        Command::Stack(a) => commands::stack(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
