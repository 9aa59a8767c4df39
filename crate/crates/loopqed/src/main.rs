//! Command-line entry point: run one named experiment from a TOML config
//! and emit CSV + JSON artifacts.
//!
//! Exit codes: 0 success, 1 numeric failure (quadrature, domain, I/O while
//! writing artifacts), 2 usage or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use loopqed::harness::{parse_config, run_experiment, EXPERIMENTS};
use loopqed::Error;

#[derive(Parser, Debug)]
#[command(
    name = "loopqed",
    version,
    about = "Brownian-loop experiments for thermal QED pair potentials",
    after_help = "Experiments: kernels-suite, bridge-suite, wc2, wm2, \
                  cancellation-scan, constant-A, normal-order.\n\
                  Worker count is read from the LOOPQED_WORKERS environment \
                  variable (default: all cores)."
)]
struct Cli {
    /// Experiment to run (also selects the matching config section).
    experiment: String,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the config's slices per unit of imaginary time.
    #[arg(long)]
    slices: Option<usize>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Error> {
    if !EXPERIMENTS.contains(&cli.experiment.as_str()) {
        return Err(Error::UnknownExperiment(cli.experiment));
    }
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg = parse_config(&text, Some(&cli.experiment))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(samples) = cli.samples {
        cfg.samples = samples;
    }
    if let Some(slices) = cli.slices {
        cfg.slices = slices;
    }
    if let Some(out) = cli.out {
        cfg.out_dir = Some(out);
    }
    cfg.validate()?;
    let paths = run_experiment(&cfg)?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap itself exits with code 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::UnknownExperiment(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
