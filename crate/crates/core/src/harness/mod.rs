//! Configuration-driven experiment runner writing CSV tables and a JSON
//! manifest per run.

mod config;
mod experiments;
mod monte_carlo;
mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use config::{
    ComplexityConfig, DesignConfig, EstimatorChoice, ExperimentConfig, ExperimentKind, FullScale, GeometryConfig,
    GridConfig, MonteCarloConfig, OutputConfig, ReceiverConfig, SceneConfig, WeightSpec,
};
pub use monte_carlo::{mse_monte_carlo, trial_seed, Estimator, MseStats};
pub use table::{num, Provenance, ResultTable};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "MILAC_RADAR_OUT";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Command-line adjustments applied on top of a configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub full: bool,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub tables: Vec<ResultTable>,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub provenance: Provenance,
}

/// Process exit status for an error: 2 for configuration problems, 3 for
/// numerical or I/O failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => 2,
        _ => 3,
    }
}

/// Applies `options`, returning the configuration that actually runs.
pub fn resolve(config: ExperimentConfig, options: &RunOptions) -> ExperimentConfig {
    let mut cfg = if options.full { config.at_full_scale() } else { ExperimentConfig { full: None, ..config } };
    if let Some(seed) = options.seed {
        cfg.monte_carlo.base_seed = seed;
    }
    if let Some(dir) = &options.out_dir {
        cfg.output.directory = dir.clone();
    }
    cfg
}

/// SHA-256 of the canonical JSON form of `cfg`. The output directory is
/// left out so that identical runs written to different places match.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let mut canonical = cfg.clone();
    canonical.output.directory = PathBuf::new();
    let text = serde_json::to_string(&canonical)?;
    let digest = Sha256::digest(text.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Validates and runs one experiment, writing its tables and manifest.
pub fn run(config: ExperimentConfig, options: &RunOptions) -> Result<RunReport> {
    let cfg = resolve(config, options);
    cfg.validate()?;
    let out_dir = cfg.output.directory.clone();
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| config::config_err("output.directory", format!("cannot create {}: {e}", out_dir.display())))?;

    let provenance = Provenance {
        config_sha256: config_hash(&cfg)?,
        seed: cfg.monte_carlo.base_seed,
        version: VERSION.into(),
    };
    let start = Instant::now();
    log::info!("running {} into {}", cfg.experiment.name(), out_dir.display());
    let tables = dispatch(&cfg, &out_dir)?;
    let elapsed = start.elapsed().as_secs_f64();

    let files = tables
        .iter()
        .map(|t| t.write_csv(&out_dir, &provenance))
        .collect::<Result<Vec<_>>>()?;
    let manifest = out_dir.join("manifest.json");
    let body = json!({
        "tool": "milac-radar",
        "version": provenance.version,
        "experiment": cfg.experiment.name(),
        "config_sha256": provenance.config_sha256,
        "seed": provenance.seed,
        "full_scale": options.full,
        "runtime_s": elapsed,
        "config": cfg,
        "tables": tables.iter().zip(&files).map(|(t, f)| json!({
            "name": t.name,
            "file": file_name(f),
            "columns": t.columns,
            "rows": t.rows.len(),
        })).collect::<Vec<_>>(),
    });
    std::fs::write(&manifest, serde_json::to_string_pretty(&body)?)?;
    Ok(RunReport { out_dir, tables, files, manifest, provenance })
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn dispatch(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<ResultTable>> {
    match cfg.experiment {
        ExperimentKind::Convergence => experiments::convergence(cfg, dir),
        ExperimentKind::Beampattern => experiments::beampattern_tables(cfg, dir),
        ExperimentKind::CrbSweep => experiments::crb_sweep(cfg, dir),
        ExperimentKind::DoaSpectrum => experiments::doa_spectrum(cfg, dir),
        ExperimentKind::MseSweep => experiments::mse_sweep(cfg, dir, cfg.monte_carlo.base_seed),
        ExperimentKind::Complexity => experiments::complexity(cfg),
    }
}
