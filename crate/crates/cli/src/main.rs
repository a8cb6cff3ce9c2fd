use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hpl_cli::config::{FileConfig, Overrides};
use hpl_cli::{commands, configure_threads, load_config};

/// Batch front-end for the flat-torus Hodge period laboratory.
///
/// All runs are driven by a JSON config (see the repository README for the
/// schema); flags override individual fields. Outputs are a `report.json`
/// plus one CSV per command, written with 17-significant-digit floats in a
/// fixed row order so identical configs produce byte-identical files.
/// `HPL_THREADS` caps the worker pool.
#[derive(Parser)]
#[command(name = "hpl", version, about, max_term_width = 100)]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default from config, else `out`).
    #[arg(long, global = true)]
    out: Option<String>,

    /// Parameter grid override: points separated by `;`, complex components
    /// by `,` (e.g. `0.1,0.2;0.3+0.1i,-0.2`).
    #[arg(long, global = true)]
    grid: Option<String>,

    /// Fourier band override.
    #[arg(long, global = true)]
    band: Option<u32>,

    /// Solver tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Accept grid points outside the certified admissible radius.
    #[arg(long, global = true)]
    allow_boundary: bool,

    /// Deliberately perturb one adjoint application inside `verify`
    /// (failure-injection test hook).
    #[arg(long, global = true)]
    break_adjoint: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hodge–Riemann relation checks on the fixture polarization.
    Check,
    /// Extension solver residuals over the parameter grid.
    Extend,
    /// Period matrices in the unipotent chart over the grid.
    Periods,
    /// Section-table coincidence and block derivative relations.
    Compare,
    /// Affine map values and Jacobian ranks.
    Affine,
    /// Full property battery; exit status 1 on any failure.
    Verify,
}

fn run(cli: &Cli) -> Result<bool, String> {
    let file = load_config(cli.config.as_deref())?;
    let file = match (&cli.command, &file.preset, &file.geometry) {
        // `verify` runs fixture-independent suites; default its fixture.
        (Command::Verify, None, None) => {
            FileConfig { preset: Some("elliptic".into()), ..file }
        }
        _ => file,
    };
    let overrides = Overrides {
        out: cli.out.clone(),
        grid: cli.grid.clone(),
        band: cli.band,
        tolerance: cli.tol,
        allow_boundary: cli.allow_boundary,
        break_adjoint: cli.break_adjoint,
    };
    let ctx = file.resolve(&overrides)?;
    match cli.command {
        Command::Check => commands::cmd_check(&ctx),
        Command::Extend => commands::cmd_extend(&ctx),
        Command::Periods => commands::cmd_periods(&ctx),
        Command::Compare => commands::cmd_compare(&ctx),
        Command::Affine => commands::cmd_affine(&ctx),
        Command::Verify => hpl_cli::cmd_verify(&ctx),
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
