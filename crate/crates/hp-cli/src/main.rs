use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use hp_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) if !out.text.is_empty() => std::fs::write(path, &out.text),
                _ => std::io::stdout().write_all(out.text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("hp: {e}");
                return ExitCode::from(1);
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            match e {
                CliError::Usage(_) => eprintln!("hp: usage: {e}"),
                _ => eprintln!("hp: {e}"),
            }
            ExitCode::from(1)
        }
    }
}
