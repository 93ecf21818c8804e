use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use domino_cli::{rerun, run, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Experiment(exp) => run(&exp),
        Command::Rerun(a) => rerun(&a.manifest, a.out),
    };
    match result {
        Ok(outcome) => {
            // A closed stdout is not an error; the artifacts are on disk.
            let mut out = std::io::stdout().lock();
            for line in &outcome.lines {
                let _ = writeln!(out, "{line}");
            }
            for a in &outcome.manifest.artifacts {
                let _ = writeln!(out, "wrote {} ({} bytes)", a.file, a.bytes);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
