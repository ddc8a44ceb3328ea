use std::process::ExitCode;

use clap::Parser;
use padic_walk_harness::config::{Cli, RunConfig};
use padic_walk_harness::{run, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = RunConfig::from_flags(&cli.flags).and_then(|cfg| {
        for w in &cfg.warnings {
            eprintln!("warning: {w}");
        }
        run(cli.command, &cfg, &mut std::io::stdout().lock())
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(CliError::exit_code(&e))
        }
    }
}
