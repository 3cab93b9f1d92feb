//! Batch driver for the Riemann-Hilbert toolkit.
//!
//! Usage: `rh [--config FILE] <delta|solve|deform|sweep|verify> [overrides]`.
//! Values resolve as defaults < config file < flags. Exit codes:
//! 0 success, 1 invariant failure, 2 configuration error, 3 numerical
//! failure.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::{KeyValues, RunConfig};
use rh_core::RhError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rh", version, about = "Riemann-Hilbert problem toolkit driver")]
struct Cli {
    /// Flat `key = value` configuration file applied before flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Flag overrides shared by every subcommand; unset flags leave the
/// config-file (or default) value in place.
#[derive(Args)]
struct Overrides {
    /// Reflection coefficient: `model:<r0>` or `step:<rho>,<a>,<b>`.
    #[arg(long)]
    r: Option<String>,
    /// Space variable of the phase.
    #[arg(long)]
    x: Option<f64>,
    /// Time variable of the phase.
    #[arg(long)]
    t: Option<f64>,
    /// Comma-separated x values for sweeps.
    #[arg(long)]
    x_list: Option<String>,
    /// Comma-separated t values for sweeps.
    #[arg(long)]
    t_list: Option<String>,
    /// Comma-separated norm indices for sweeps.
    #[arg(long)]
    p_list: Option<String>,
    /// Nodes per contour piece.
    #[arg(long)]
    n: Option<usize>,
    /// Contour truncation radius.
    #[arg(long)]
    truncation: Option<f64>,
    /// Sector half-opening of deformed contours, in (0, 1/2).
    #[arg(long)]
    beta: Option<f64>,
    /// Exponent margin of the closed-form bounds.
    #[arg(long)]
    beta_prime: Option<f64>,
    /// Seed for randomized probes.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot-data file (line-delimited JSON series).
    #[arg(long)]
    plot: Option<PathBuf>,
}

impl Overrides {
    fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.insert(k.to_string(), v);
            }
        };
        put("r", self.r.clone());
        put("x", self.x.map(|v| v.to_string()));
        put("t", self.t.map(|v| v.to_string()));
        put("x_list", self.x_list.clone());
        put("t_list", self.t_list.clone());
        put("p_list", self.p_list.clone());
        put("n", self.n.map(|v| v.to_string()));
        put("truncation", self.truncation.map(|v| v.to_string()));
        put("beta", self.beta.map(|v| v.to_string()));
        put("beta_prime", self.beta_prime.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("plot", self.plot.as_ref().map(|p| p.display().to_string()));
        kv
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the scalar factor's boundary values and property residuals.
    Delta(Overrides),
    /// Solve the normalized problem for the oscillatory jump at (x, t).
    Solve(Overrides),
    /// Emit the deformation plan for (x, t) as JSON.
    Deform(Overrides),
    /// Estimate resolvent norms over an (x, t, p) grid.
    Sweep(Overrides),
    /// Run the invariant suite and report a JSON summary.
    Verify(Overrides),
}

impl Command {
    fn overrides(&self) -> &Overrides {
        match self {
            Command::Delta(o)
            | Command::Solve(o)
            | Command::Deform(o)
            | Command::Sweep(o)
            | Command::Verify(o) => o,
        }
    }
}

fn build_config(cli: &Cli) -> rh_core::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply(&config::parse_config_file(&text)?)?;
    }
    cfg.apply(&cli.command.overrides().to_key_values())?;
    Ok(cfg)
}

/// Map an error to the declared exit codes: configuration problems
/// exit 2, numerical failures exit 3.
fn exit_code_for(e: &RhError) -> u8 {
    match e {
        RhError::InvalidParameter(_) | RhError::Io(_) | RhError::Json(_) => 2,
        RhError::InvariantViolation(_) => 1,
        RhError::Proximity(_)
        | RhError::IllConditioned(_)
        | RhError::QuadratureFailure(_)
        | RhError::ContinuationUnavailable(_)
        | RhError::ShapeMismatch(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Delta(_) => commands::delta(&cfg),
        Command::Solve(_) => commands::solve(&cfg),
        Command::Deform(_) => commands::deform(&cfg),
        Command::Sweep(_) => commands::sweep(&cfg),
        Command::Verify(_) => match commands::verify(&cfg) {
            Ok(0) => Ok(()),
            Ok(failed) => {
                eprintln!("{failed} invariant(s) failed");
                return ExitCode::from(1);
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
