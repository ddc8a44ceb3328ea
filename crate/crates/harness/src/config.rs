use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use num_traits::ToPrimitive;
use padic_walk::rng::DEFAULT_SEED;
use padic_walk::{Params, SymbolConvention};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "padic-walk", version, about = "Random walks on Z_p/p^m Z_p and their Brownian limit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Step law: circle probabilities, density, pmf and the characteristic function.
    StepLaw,
    /// Sample embedded paths up to the first --time.
    Walk,
    /// Law of S_n for each n in --steps.
    Pmf,
    /// Radial heat kernel of the limit for each --time, rows j = 0..=m.
    Kernel,
    /// Exact moments against the moment bound over --steps and --r.
    Moments,
    /// Full convergence report over --m-range and --time.
    Converge,
    /// Oracle and invariant suite at desk scale.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Prime p.
    #[arg(long, global = true, default_value_t = 2)]
    pub p: u64,
    /// Level m of the finite group Z_p/p^m Z_p.
    #[arg(long, global = true, default_value_t = 2)]
    pub m: u32,
    /// Inclusive level range A..B.
    #[arg(long = "m-range", global = true)]
    pub m_range: Option<String>,
    /// Exponent b > 0 (rational or decimal).
    #[arg(long, global = true, default_value = "1")]
    pub b: String,
    /// Diffusion constant D > 0 (rational or decimal).
    #[arg(long, global = true, default_value = "1")]
    pub diffusion: String,
    /// Comma-separated times as "num/den".
    #[arg(long, global = true)]
    pub time: Option<String>,
    /// Step counts: a comma-separated list or a range A..B.
    #[arg(long, global = true)]
    pub steps: Option<String>,
    /// Comma-separated moment orders in (0, b).
    #[arg(long, global = true)]
    pub r: Option<String>,
    /// Comma-separated Hölder exponents in (0, 1).
    #[arg(long, global = true)]
    pub s: Option<String>,
    /// Base seed of the random streams.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Monte Carlo sample count (paths for `walk`, step draws per level for `converge`).
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Numerical slack for inequality checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Use symbol(0) = -1/beta instead of 0.
    #[arg(long = "literal-symbol", global = true)]
    pub literal_symbol: bool,
    /// Negate the closed-form characteristic function (mutation check for `selftest`).
    #[arg(long = "inject-sign-flip", global = true, hide = true)]
    pub inject_sign_flip: bool,
}

/// Parsed and validated settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub p: u64,
    pub m: u32,
    pub m_range: Option<RangeInclusive<u32>>,
    pub b: f64,
    pub diffusion: f64,
    pub times: Option<Vec<Rational64>>,
    pub steps: Option<Vec<u64>>,
    pub r: Option<Vec<f64>>,
    pub s: Option<Vec<f64>>,
    pub seed: u64,
    pub samples: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub convention: SymbolConvention,
    pub inject_sign_flip: bool,
    /// Notes about lossy inputs, printed to stderr by the binary.
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn from_flags(f: &Flags) -> Result<Self, CliError> {
        let mut warnings = Vec::new();
        let b = parse_real(&f.b, "--b", &mut warnings)?;
        let diffusion = parse_real(&f.diffusion, "--diffusion", &mut warnings)?;
        Params::new(f.p, f.m, b, diffusion)?;
        let m_range = f.m_range.as_deref().map(parse_range).transpose()?;
        let times = f
            .time
            .as_deref()
            .map(|s| split(s, "--time")?.into_iter().map(|t| parse_time(t, &mut warnings)).collect())
            .transpose()?;
        let steps = f.steps.as_deref().map(parse_steps).transpose()?;
        let list = |s: &Option<String>, flag: &str, w: &mut Vec<String>| -> Result<Option<Vec<f64>>, CliError> {
            s.as_deref().map(|s| split(s, flag)?.into_iter().map(|x| parse_real(x, flag, w)).collect()).transpose()
        };
        let r = list(&f.r, "--r", &mut warnings)?;
        let s = list(&f.s, "--s", &mut warnings)?;
        if let Some(tol) = f.tol {
            if !(tol >= 0.0 && tol.is_finite()) {
                return Err(CliError::Config(format!("--tol must be a nonnegative number, got {tol}")));
            }
        }
        Ok(RunConfig {
            p: f.p,
            m: f.m,
            m_range,
            b,
            diffusion,
            times,
            steps,
            r,
            s,
            seed: f.seed,
            samples: f.samples,
            tol: f.tol,
            out: f.out.clone(),
            format: f.format,
            convention: if f.literal_symbol { SymbolConvention::Literal } else { SymbolConvention::Conservative },
            inject_sign_flip: f.inject_sign_flip,
            warnings,
        })
    }

    pub fn params(&self) -> Result<Params, CliError> {
        Ok(Params::new(self.p, self.m, self.b, self.diffusion)?)
    }
}

fn split<'a>(s: &'a str, flag: &str) -> Result<Vec<&'a str>, CliError> {
    let items: Vec<&str> = s.split(',').map(str::trim).collect();
    if items.iter().any(|x| x.is_empty()) {
        return Err(CliError::Config(format!("{flag}: empty entry in \"{s}\"")));
    }
    Ok(items)
}

/// `"num/den"` or an integer exactly; a decimal is converted digit by digit with a warning.
pub fn parse_time(s: &str, warnings: &mut Vec<String>) -> Result<Rational64, CliError> {
    let t = parse_rational(s, warnings)?;
    if *t.numer() < 0 {
        return Err(CliError::Config(format!("--time: negative time {s}")));
    }
    Ok(t)
}

pub fn parse_rational(s: &str, warnings: &mut Vec<String>) -> Result<Rational64, CliError> {
    if let Ok(r) = Rational64::from_str(s) {
        return Ok(r);
    }
    let bad = || CliError::Config(format!("cannot parse \"{s}\" as a rational \"num/den\" or decimal"));
    let (int, frac) = s.split_once('.').ok_or_else(bad)?;
    let digits = frac.len() as u32;
    if digits > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let negative = int.starts_with('-');
    let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
    let den = 10i64.checked_pow(digits).ok_or_else(bad)?;
    let part: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let num = whole.abs().checked_mul(den).and_then(|w| w.checked_add(part)).ok_or_else(bad)?;
    let r = Rational64::new(if negative { -num } else { num }, den);
    warnings.push(format!(
        "decimal \"{s}\" read as {r}; step counts floor(t lambda) are sensitive to this at jump boundaries, prefer \"num/den\""
    ));
    Ok(r)
}

pub fn parse_real(s: &str, flag: &str, warnings: &mut Vec<String>) -> Result<f64, CliError> {
    if s.contains('/') {
        let r = parse_rational(s, warnings).map_err(|e| CliError::Config(format!("{flag}: {e}")))?;
        return r.to_f64().ok_or_else(|| CliError::Config(format!("{flag}: {s} out of range")));
    }
    s.parse::<f64>().map_err(|_| CliError::Config(format!("{flag}: cannot parse \"{s}\" as a number")))
}

pub fn parse_range(s: &str) -> Result<RangeInclusive<u32>, CliError> {
    let bad = || CliError::Config(format!("--m-range expects A..B with A <= B, got \"{s}\""));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a > b || a == 0 {
        return Err(bad());
    }
    Ok(a..=b)
}

pub fn parse_steps(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Config(format!("--steps expects n1,n2,... or A..B, got \"{s}\""));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    split(s, "--steps")?.into_iter().map(|x| x.parse().map_err(|_| bad())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_are_exact() {
        let mut w = Vec::new();
        assert_eq!(parse_time("3/8", &mut w).unwrap(), Rational64::new(3, 8));
        assert_eq!(parse_time("2", &mut w).unwrap(), Rational64::from_integer(2));
        assert!(w.is_empty());
        assert_eq!(parse_time("0.375", &mut w).unwrap(), Rational64::new(3, 8));
        assert_eq!(w.len(), 1);
        assert!(parse_time("-1/2", &mut w).is_err());
        assert!(parse_time("x", &mut w).is_err());
        assert_eq!(parse_rational("-1.5", &mut w).unwrap(), Rational64::new(-3, 2));
    }

    #[test]
    fn ranges_and_lists() {
        assert_eq!(parse_range("3..8").unwrap(), 3..=8);
        assert!(parse_range("8..3").is_err());
        assert!(parse_range("0..3").is_err());
        assert!(parse_range("3").is_err());
        assert_eq!(parse_steps("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_steps("5, 7").unwrap(), vec![5, 7]);
        assert!(parse_steps("5,,7").is_err());
        let mut w = Vec::new();
        assert_eq!(parse_real("1/2", "--r", &mut w).unwrap(), 0.5);
        assert_eq!(parse_real("0.25", "--r", &mut w).unwrap(), 0.25);
    }

    #[test]
    fn flags_are_validated() {
        let cli = Cli::try_parse_from(["padic-walk", "pmf", "--p", "4"]).unwrap();
        assert!(matches!(RunConfig::from_flags(&cli.flags), Err(CliError::Library(_))));
        let cli = Cli::try_parse_from(["padic-walk", "kernel", "--time", "1/2,1", "--m", "5"]).unwrap();
        let cfg = RunConfig::from_flags(&cli.flags).unwrap();
        assert_eq!(cfg.times.unwrap(), vec![Rational64::new(1, 2), Rational64::from_integer(1)]);
        assert_eq!(cfg.seed, DEFAULT_SEED);
    }
}
