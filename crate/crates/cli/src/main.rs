//! Sweep driver: writes the bounds CSV and prints the report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use seqbound::sweep::{report, run_sweep, write_csv, SweepConfig};

/// Certified bounds on two-step sequential discrimination of 3-PSK coherent states.
///
/// Options can also come from a key=value file (--config) using the same names
/// as the long flags; flags given on the command line win.
#[derive(Parser, Debug)]
#[command(name = "seqbound", version)]
struct Cli {
    /// Smallest mean photon number
    #[arg(long)]
    nbar_min: Option<f64>,
    /// Largest mean photon number
    #[arg(long)]
    nbar_max: Option<f64>,
    /// Grid spacing in photons
    #[arg(long)]
    nbar_step: Option<f64>,
    /// Prior samples per simplex edge used to build the outer polytope
    #[arg(long)]
    planes: Option<usize>,
    /// Dual formulation: symmetric, general or both
    #[arg(long)]
    mode: Option<String>,
    /// Also compute explicit-strategy lower bounds
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    primal: Option<bool>,
    /// Seed for the random soundness checks
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for cached halfspaces
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Sweep points solved concurrently (0 = all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
}

fn build_config(cli: &Cli) -> seqbound::Result<SweepConfig> {
    let mut cfg = SweepConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_kv_file(path)?;
    }
    let flags: [(&str, Option<String>); 10] = [
        ("nbar-min", cli.nbar_min.map(|v| v.to_string())),
        ("nbar-max", cli.nbar_max.map(|v| v.to_string())),
        ("nbar-step", cli.nbar_step.map(|v| v.to_string())),
        ("planes", cli.planes.map(|v| v.to_string())),
        ("mode", cli.mode.clone()),
        ("primal", cli.primal.map(|v| v.to_string())),
        ("seed", cli.seed.map(|v| v.to_string())),
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
        ("cache-dir", cli.cache_dir.as_ref().map(|p| p.display().to_string())),
        ("workers", cli.workers.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("seqbound: {e}");
            return ExitCode::from(1);
        }
    };
    let records = match run_sweep(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("seqbound: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = write_csv(&cfg.output_path, &records) {
        eprintln!("seqbound: writing {}: {e}", cfg.output_path.display());
        return ExitCode::from(1);
    }
    print!("{}", report(&records));
    if records.iter().all(|r| r.is_ok()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
