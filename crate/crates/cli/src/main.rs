//! `rwdre`: one JSON summary object on stdout, logs on stderr.
//!
//! Exit codes: 0 success, 1 invariant violation or failed statistical check,
//! 2 configuration or I/O error.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command, FileConfig};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    match run(cli) {
        Ok(out) => {
            println!("{}", out.summary);
            if out.violation {
                eprintln!("rwdre {name}: check failed");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("rwdre {name}: {e}");
            let code = if e.is_config() || matches!(e, rwdre_core::Error::Io(_)) { 2 } else { 1 };
            println!("{}", json!({ "command": name, "status": "error", "error": e.to_string() }));
            ExitCode::from(code)
        }
    }
}

pub struct Outcome {
    pub summary: serde_json::Value,
    pub violation: bool,
}

fn run(cli: Cli) -> rwdre_core::Result<Outcome> {
    // The sweep reads its own config schema.
    let file = match (&cli.command, &cli.config) {
        (Command::Sweep(_), _) | (_, None) => FileConfig::default(),
        (_, Some(path)) => FileConfig::load(path)?,
    };
    let workers = cli
        .workers
        .or(file.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(rwdre_core::Error::Config("--workers must be at least 1".into()));
    }
    // Fails only if a pool already exists, which is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    eprintln!("rwdre {}: {workers} worker(s)", cli.command.name());
    match cli.command {
        Command::Simulate(a) => commands::simulate(&file, a),
        Command::Ghost(a) => commands::ghost(&file, a),
        Command::Infection(a) => commands::infection(&file, a),
        Command::Regen(a) => commands::regen(&file, a),
        Command::Oracle(a) => commands::oracle(&file, a),
        Command::Sweep(a) => commands::sweep(cli.config.as_deref(), a),
        Command::Verify(a) => commands::verify(&file, a),
    }
}
