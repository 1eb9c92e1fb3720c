use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use milac_core::harness::{self, ExperimentConfig, ExperimentKind, RunOptions, OUT_DIR_ENV};
use milac_core::Error;

/// Runs one experiment from a JSON configuration and writes CSV tables plus
/// a run manifest.
#[derive(Debug, Parser)]
#[command(name = "milac-radar", version)]
struct Cli {
    /// convergence | beampattern | crb_sweep | doa_spectrum | mse_sweep | complexity
    experiment: String,
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Apply the configuration's full-scale overrides.
    #[arg(long)]
    full: bool,
    /// Base seed for Monte-Carlo trials and noise draws.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
}

fn execute(cli: &Cli) -> Result<harness::RunReport, Error> {
    let Some(kind) = ExperimentKind::parse(&cli.experiment) else {
        return Err(Error::Config {
            path: "<experiment>".into(),
            message: format!("unknown experiment `{}`", cli.experiment),
        });
    };
    let config = ExperimentConfig::load(&cli.config)?;
    if config.experiment != kind {
        return Err(Error::Config {
            path: "experiment".into(),
            message: format!(
                "command asks for `{}` but the configuration describes `{}`",
                kind.name(),
                config.experiment.name()
            ),
        });
    }
    let options = RunOptions { full: cli.full, seed: cli.seed, out_dir: cli.out.clone() };
    harness::run(config, &options)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            println!("{}", report.manifest.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("milac-radar: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(harness::exit_code(&err) as u8)
        }
    }
}
