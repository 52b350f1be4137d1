//! `hecke`: coefficient tables, sign statistics, Voronoi residuals and
//! short-interval reports for Hecke eigenforms.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use config::{Format, RawConfig, RunConfig};

/// A bad flag, range, config file or form spec. Exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "hecke", version, about = "Sign changes of Hecke eigenvalues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the coefficient table a(1..bound) in the canonical text format.
    Coeffs {
        #[command(flatten)]
        common: Common,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Direct sign counts, B-free lower bounds and densities on a grid of x.
    Signs(Common),
    /// B-free membership and coefficient signs for n up to the bound.
    Bfree(Common),
    /// Truncated Voronoi main term against the coprime partial sum.
    Voronoi(Common),
    /// Same-sign counts in short windows (x, x + C_N sqrt(x)].
    Intervals {
        #[command(flatten)]
        common: Common,
        /// Windows starting below this x are flagged instead of failed.
        #[arg(long, default_value_t = 0.0)]
        x_floor: f64,
    },
    /// Run the acceptance checks.
    Verify {
        /// Comma-separated check ids (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// level1:k | curve:a1,a2,a3,a4,a6,N | file:path
    #[arg(long)]
    form: Option<String>,
    /// Coefficient bound (>= 10); derived from the request when omitted.
    #[arg(long)]
    bound: Option<String>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Truncation length: x | x/k | x^A | integer.
    #[arg(long = "M")]
    m: Option<String>,
    /// Constant C in C_N = C sqrt(N) Psi(N)^3.
    #[arg(long = "C")]
    c: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    /// Prime limit for squared primes in the exclusion set (default: sqrt of the sieve limit).
    #[arg(long = "P")]
    p: Option<String>,
    /// double | extended
    #[arg(long)]
    precision: Option<String>,
    /// lo:hi:count (log-spaced) or a single value.
    #[arg(long)]
    x: Option<String>,
    /// key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut raw = RawConfig {
            form: self.form.clone(),
            bound: self.bound.clone(),
            format: self.format.clone(),
            m: self.m.clone(),
            c: self.c.clone(),
            eps: self.eps.clone(),
            p: self.p.clone(),
            precision: self.precision.clone(),
            x: self.x.clone(),
        };
        if let Some(path) = &self.config {
            raw.merge_file(path)?;
        }
        RunConfig::resolve(&raw)
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("HECKE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError(format!("HECKE_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Coeffs { common, out } => commands::coeffs(&common.resolve()?, out.as_deref()),
        Command::Signs(common) => commands::signs(&common.resolve()?),
        Command::Bfree(common) => commands::bfree(&common.resolve()?),
        Command::Voronoi(common) => commands::voronoi(&common.resolve()?),
        Command::Intervals { common, x_floor } => commands::intervals(&common.resolve()?, x_floor),
        Command::Verify { only, format } => {
            let format: Format = format.parse().map_err(UsageError)?;
            commands::verify(&only, format)
        }
    }
}

/// Exit status for a failed run: 2 for anything the caller can fix by
/// changing the invocation, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    use hecke_core::Error;
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Invariant { .. } => 1,
                Error::Usage(_)
                | Error::UnsupportedWeight(_)
                | Error::InvalidLevel(_)
                | Error::OutOfRange { .. }
                | Error::SearchExhausted { .. }
                | Error::Load { .. }
                | Error::Io(_) => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("hecke: verification failed");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("hecke: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
