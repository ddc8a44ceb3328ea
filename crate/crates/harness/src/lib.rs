//! Command-line front end: configuration, dispatch and CSV/JSON emission.

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;

use std::io::Write;

use config::{Command, RunConfig};
use padic_walk::walk::phi_closed_at;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] padic_walk::Error),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for failed checks and numerical failures, 2 for bad input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Assertion(_) | CliError::Library(padic_walk::Error::Numerical(_)) => 1,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Library(padic_walk::Error::Domain(_)) => "domain",
            CliError::Library(padic_walk::Error::Precondition(_)) => "precondition",
            CliError::Library(padic_walk::Error::LevelMismatch(_)) => "levelMismatch",
            CliError::Library(padic_walk::Error::Numerical(_)) => "numerical",
            CliError::Assertion(_) => "assertion",
            CliError::Io(_) => "io",
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind(), "message": self.to_string() } }).to_string()
    }
}

fn flipped_phi(k: u32, params: &padic_walk::Params) -> f64 {
    -phi_closed_at(k, params)
}

/// Runs one subcommand, writing results to `out`. Returns the exit code.
pub fn run(command: Command, cfg: &RunConfig, out: &mut dyn Write) -> Result<u8, CliError> {
    let (emission, ok) = match command {
        Command::StepLaw => (commands::step_law(cfg)?, true),
        Command::Walk => (commands::walk(cfg)?, true),
        Command::Pmf => (commands::pmf(cfg)?, true),
        Command::Kernel => (commands::kernel(cfg)?, true),
        Command::Moments => commands::moments(cfg)?,
        Command::Converge => {
            let (e, report) = commands::converge(cfg)?;
            for a in report.failures() {
                eprintln!("FAIL {}: {}", a.name, a.detail);
            }
            (e, report.all_pass())
        }
        Command::Selftest => {
            let phi = if cfg.inject_sign_flip { flipped_phi } else { phi_closed_at };
            let outcomes = selftest::run_suite(phi);
            for o in &outcomes {
                let status = if o.pass { "ok" } else { "FAIL" };
                writeln!(out, "{status} {} ({:.2} s): {}", o.name, o.elapsed.as_secs_f64(), o.detail)?;
            }
            let ok = outcomes.iter().all(|o| o.pass);
            writeln!(out, "{}", if ok { "selftest passed" } else { "selftest failed" })?;
            return Ok(if ok { 0 } else { 1 });
        }
    };
    match &cfg.out {
        Some(dir) => {
            for path in emission.write_to(dir, cfg.format)? {
                writeln!(out, "{}", path.display())?;
            }
        }
        None => out.write_all(emission.render(cfg.format).as_bytes())?,
    }
    Ok(if ok { 0 } else { 1 })
}
