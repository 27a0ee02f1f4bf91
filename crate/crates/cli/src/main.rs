//! `laguerre`: seeds and solves Blaschke potentials, runs spectral
//! deformations over a list of parameters and re-checks finished runs.
//!
//! Exit codes: 0 pass, 1 gate failure, 2 usage or config error, 3 I/O.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Settings;

#[derive(Debug)]
pub enum Failure {
    Gate(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Gate(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Gate(m) | Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<laguerre::Error> for Failure {
    fn from(e: laguerre::Error) -> Self {
        use laguerre::Error as E;
        match e {
            E::Io(_) => Failure::Io(e.to_string()),
            E::Parse { .. }
            | E::InvalidGrid(_)
            | E::GridTooSmall { .. }
            | E::ShapeMismatch { .. }
            | E::Domain(_)
            | E::MissingCharacter => Failure::Usage(e.to_string()),
            _ => Failure::Gate(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "laguerre", version, about = "Spectral deformations of L-isothermic surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an analytic potential into <out>/potential.csv and report its
    /// Liouville residual.
    Seed(Opts),
    /// Solve the Liouville equation by Newton's method with Dirichlet data.
    Solve(Opts),
    /// Run the pipeline for every m and write frames, meshes, reports and
    /// the Lawson table.
    Deform(Opts),
    /// Re-check a deform run directory; exit 0 iff every gate passes.
    Verify(Opts),
    /// Rewrite meshes from frame CSVs.
    Export(Opts),
}

/// Every flag maps to the config key of the same name.
#[derive(Args, Debug, Default)]
struct Opts {
    /// `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// radial, cosh1d or harmonic.
    #[arg(long)]
    kind: Option<String>,
    /// Character of the potential.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    /// Base spectral constant.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<String>,
    /// Harmonic slopes.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// Potential CSV instead of an analytic kind.
    #[arg(long)]
    potential: Option<String>,
    /// x0:x1:y0:y1:n or x0:x1:y0:y1:nx:ny.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Comma-separated spectral parameters.
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
    /// euler or midpoint_exp.
    #[arg(long)]
    scheme: Option<String>,
    /// Output (or run) directory.
    #[arg(long, alias = "dir")]
    out: Option<String>,
    /// Newton initial guess: zero, boundary, a constant or a CSV path.
    #[arg(long, allow_hyphen_values = true)]
    init: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    newton_tol: Option<String>,
    /// Frame CSV to export.
    #[arg(long)]
    frames: Option<String>,
    #[arg(long)]
    tol_order: Option<String>,
    #[arg(long)]
    tol_value: Option<String>,
    #[arg(long)]
    tol_mean_curvature: Option<String>,
    #[arg(long)]
    tol_h_floor: Option<String>,
    #[arg(long)]
    tol_drift: Option<String>,
    #[arg(long)]
    parabolic_eps: Option<String>,
}

impl Opts {
    fn settings(&self) -> Result<Settings, Failure> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let flags = [
            ("kind", &self.kind),
            ("c", &self.c),
            ("k", &self.k),
            ("a", &self.a),
            ("b", &self.b),
            ("potential", &self.potential),
            ("grid", &self.grid),
            ("m", &self.m),
            ("scheme", &self.scheme),
            ("out", &self.out),
            ("init", &self.init),
            ("max_iter", &self.max_iter),
            ("newton_tol", &self.newton_tol),
            ("frames", &self.frames),
            ("tol_order", &self.tol_order),
            ("tol_value", &self.tol_value),
            ("tol_mean_curvature", &self.tol_mean_curvature),
            ("tol_h_floor", &self.tol_h_floor),
            ("tol_drift", &self.tol_drift),
            ("parabolic_eps", &self.parabolic_eps),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                s.set(key, v.clone())?;
            }
        }
        Ok(s)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Seed(o) => commands::seed(&o.settings()?),
        Command::Solve(o) => commands::solve(&o.settings()?),
        Command::Deform(o) => commands::deform(&o.settings()?),
        Command::Verify(o) => commands::verify(&o.settings()?),
        Command::Export(o) => commands::export(&o.settings()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
