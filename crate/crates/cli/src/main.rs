//! `spintomo` command-line front end. Every command reads JSON files and
//! writes one JSON document; failures go to standard error as
//! `{code, message, context}`.

mod commands;
mod failure;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use failure::{CliResult, Failure};

/// Environment variable overriding the density-matrix validity tolerance.
pub const TOLERANCE_ENV: &str = "SPINTOMO_VALIDITY_TOL";

#[derive(Debug, Parser)]
#[command(name = "spintomo", version, about = "Polarization-tensor tomography of spin systems")]
struct Cli {
    /// Output file, or `-` for standard output.
    #[arg(long, short, global = true, default_value = "-")]
    output: String,

    /// Evaluate grid points on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Export the polarization-tensor basis of one spin.
    Basis {
        /// Spin value, e.g. `1/2`, `1`, `3/2`.
        #[arg(long)]
        spin: String,
    },
    /// Check a state file against the density-matrix invariants.
    Validate { state: PathBuf },
    /// Decompose a state into tensor coefficients.
    Decompose {
        state: PathBuf,
        /// `single`, `product` or `coupled`; defaults to `single` for one
        /// spin and `product` otherwise.
        #[arg(long)]
        basis: Option<String>,
    },
    /// Rebuild the operator from a coefficient file.
    Reconstruct { coeffs: PathBuf },
    /// Rotate every spin of a state by the same Euler angles (z-y-z).
    Rotate {
        state: PathBuf,
        #[command(flatten)]
        angles: AngleArgs,
    },
    /// Kronecker product of several states, left to right.
    Kron {
        #[arg(required = true, num_args = 2..)]
        states: Vec<PathBuf>,
    },
    /// Spectrum of a spin-chain Hamiltonian.
    Spectrum {
        chain: PathBuf,
        /// Overrides the coupling model of the file (`xy_plane` or `heisenberg`).
        #[arg(long)]
        model: Option<String>,
    },
    /// Simulate a rotation tomogram of a state.
    TomoSimulate {
        state: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Standard deviation of Gaussian noise added to every record.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Record only labels with total rank up to this cap.
        #[arg(long)]
        cap: Option<u32>,
    },
    /// Recover coefficients from a tomogram.
    TomoInvert { tomogram: PathBuf },
    /// Apply a Pauli error to a state.
    Inject {
        state: PathBuf,
        /// Error label such as `X0`, `Z1`, or `X0+Y2`.
        #[arg(long)]
        error: String,
    },
    /// Match observed coefficients (or a state) against error signatures.
    Detect {
        reference: PathBuf,
        observed: PathBuf,
        #[arg(long, default_value_t = 2)]
        cap: u32,
    },
    /// Undo a detected error on an observed state.
    Correct {
        observed: PathBuf,
        /// Error label, or a detection report via `--report`.
        #[arg(long, conflicts_with = "report", required_unless_present = "report")]
        error: Option<String>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Reference state; adds the Uhlmann fidelity to the output.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Multipole expansion of a point-source distribution.
    Multipole {
        sources: PathBuf,
        #[arg(long)]
        lmax: u32,
        #[arg(long)]
        r0: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        phi: f64,
        /// Angles are given in degrees.
        #[arg(long)]
        degrees: bool,
    },
    /// Observable and unobservable ranks of a register.
    Access {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1/2")]
        spin: String,
        #[arg(long, default_value_t = 2)]
        cap: u32,
    },
}

#[derive(Debug, Args)]
struct AngleArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    gamma: f64,
    /// Angles are given in degrees.
    #[arg(long)]
    degrees: bool,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Gauss-Legendre nodes in cos(beta); defaults to the minimal exact grid.
    #[arg(long)]
    grid_beta: Option<usize>,
    /// Trapezoid nodes in alpha; defaults to the minimal exact grid.
    #[arg(long)]
    grid_alpha: Option<usize>,
}

fn tolerance_from_env() -> CliResult<f64> {
    match std::env::var(TOLERANCE_ENV) {
        Err(_) => Ok(spintomo::density::VALIDITY_TOL),
        Ok(raw) => match raw.trim().parse::<f64>() {
            Ok(t) if t.is_finite() && t > 0.0 => Ok(t),
            _ => Err(Failure::usage(format!("{TOLERANCE_ENV} must be a positive number, got {raw:?}"))
                .with_context("variable", TOLERANCE_ENV)),
        },
    }
}

fn write_output(target: &str, body: &str) -> CliResult<()> {
    if target == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(body.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::io("-", e))
    } else {
        std::fs::write(target, body).map_err(|e| Failure::io(target, e))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let ctx = commands::Context {
        tol: tolerance_from_env()?,
        exec: if cli.sequential { spintomo::Exec::Sequential } else { spintomo::Exec::Parallel },
    };
    let value = commands::dispatch(&ctx, cli.command)?;
    let mut body = serde_json::to_string_pretty(&value).map_err(|e| Failure::new("internal", e.to_string(), serde_json::Value::Null))?;
    body.push('\n');
    write_output(&cli.output, &body)
}

fn fail(f: &Failure) -> ExitCode {
    eprintln!("{}", f.to_json());
    ExitCode::from(f.exit_code as u8)
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|info| {
        let f = Failure::new("internal", info.to_string(), serde_json::Value::Null);
        eprintln!("{}", f.to_json());
    }));
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return fail(&Failure::usage(e.to_string().trim_end()));
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => fail(&f),
        Err(_) => ExitCode::from(3),
    }
}
