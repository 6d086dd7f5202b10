use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spline_llt::harness::{self, ExperimentConfig, HarnessError, Overrides};

/// Experiments on the Gaussian local limit of B-splines with arbitrary knots.
#[derive(Parser)]
#[command(name = "spline-llt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full invariant suite.
    Validate(Flags),
    /// Sup-norm error of B(t/n) (or the reduced sums when r > 0) against n.
    Scaling(Flags),
    /// Laguerre, 2F0, power-series and quadrature forms of the Fourier identity.
    Identity(Flags),
    /// Sup-norm error of the Laguerre sum against He_r(xi) exp(-xi^2/2).
    Corollary3(Flags),
    /// Monte Carlo E cos / E sin of simplex projections against exp(-xi^2/2).
    Corollary4(Flags),
    /// Fourier-inverted density of Q against a Monte Carlo histogram.
    Inversion(Flags),
}

#[derive(Args)]
struct Flags {
    /// Flat key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated knot families: equispaced, chebyshev, uniform_random, clustered.
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated list of n.
    #[arg(long)]
    n: Option<String>,
    /// Polynomial weight |t|^p in the seminorm
    #[arg(long)]
    p: Option<usize>,
    /// Derivative order q in the seminorm
    #[arg(long)]
    q: Option<usize>,
    /// Exponent reduction / Hermite order r
    #[arg(long)]
    r: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long = "N")]
    n_mc: Option<usize>,
    /// Master seed (overrides SPLINE_LLT_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Grid truncation T (default max(8, n)).
    #[arg(long = "grid-T")]
    grid_t: Option<f64>,
    /// Grid step h.
    #[arg(long = "grid-h")]
    grid_h: Option<f64>,
    /// CSV output path; the JSON summary goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(experiment: &str, flags: Flags) -> Result<i32, HarnessError> {
    let base = match &flags.config {
        Some(path) => harness::load_config_file(path)?,
        None => Overrides::default(),
    };
    let from_flags = Overrides {
        experiment: Some(experiment.to_string()),
        family: flags.family,
        n: flags.n,
        p: flags.p,
        q: flags.q,
        r: flags.r,
        n_mc: flags.n_mc,
        seed: flags.seed,
        grid_t: flags.grid_t,
        grid_h: flags.grid_h,
        out: flags.out,
    };
    let cfg = ExperimentConfig::resolve(base.overlay(from_flags))?;
    let out = harness::run(&cfg)?;
    harness::emit(&cfg, &out)?;
    for c in out.summary.checks.iter().filter(|c| !c.passed) {
        eprintln!("FAILED {}: {}", c.name, c.detail);
    }
    Ok(out.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags) = match cli.command {
        Command::Validate(f) => ("validate", f),
        Command::Scaling(f) => ("scaling", f),
        Command::Identity(f) => ("identity", f),
        Command::Corollary3(f) => ("corollary3", f),
        Command::Corollary4(f) => ("corollary4", f),
        Command::Inversion(f) => ("inversion", f),
    };
    match run(name, flags) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("spline-llt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
