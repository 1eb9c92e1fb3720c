use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::array::UpaGeometry;
use crate::error::{Error, Result};
use crate::fim::ParameterLayout;
use crate::scene::{snr_to_scene, TargetScene};
use crate::tx::{Architecture, PddParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    Beampattern,
    CrbSweep,
    DoaSpectrum,
    MseSweep,
    Complexity,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Convergence => "convergence",
            Self::Beampattern => "beampattern",
            Self::CrbSweep => "crb_sweep",
            Self::DoaSpectrum => "doa_spectrum",
            Self::MseSweep => "mse_sweep",
            Self::Complexity => "complexity",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            Self::Convergence,
            Self::Beampattern,
            Self::CrbSweep,
            Self::DoaSpectrum,
            Self::MseSweep,
            Self::Complexity,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "half")]
    pub dx: f64,
    #[serde(default = "half")]
    pub dy: f64,
}

fn half() -> f64 {
    0.5
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { nx: 4, ny: 4, dx: 0.5, dy: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    /// `[elevation, azimuth]` pairs in degrees.
    #[serde(default)]
    pub targets_deg: Vec<[f64; 2]>,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default = "one")]
    pub p_t: f64,
    #[serde(default = "one")]
    pub noise_power: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self { targets_deg: Vec::new(), snr_db: Vec::new(), p_t: 1.0, noise_power: 1.0 }
    }
}

/// Which CRB entries the design minimizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    /// `"all"` (every parameter) or `"angles"` (angles only).
    Named(String),
    Explicit(Vec<f64>),
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self::Named("all".into())
    }
}

impl WeightSpec {
    pub fn resolve(&self, num_targets: usize) -> Result<Vec<f64>> {
        let layout = ParameterLayout { num_targets };
        match self {
            Self::Named(n) if n == "all" => Ok(layout.uniform_weights()),
            Self::Named(n) if n == "angles" => Ok(layout.angle_weights()),
            Self::Named(n) => Err(config_err("design.weights", format!("unknown weighting `{n}`, use \"all\" or \"angles\""))),
            Self::Explicit(w) => {
                if w.len() != layout.len() {
                    return Err(config_err(
                        "design.weights",
                        format!("{} weights given, {} targets need {}", w.len(), num_targets, layout.len()),
                    ));
                }
                if let Some(i) = w.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(config_err(&format!("design.weights[{i}]"), "weights must be finite and nonnegative"));
                }
                Ok(w.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default = "default_architectures")]
    pub architectures: Vec<Architecture>,
    #[serde(default)]
    pub weights: WeightSpec,
    /// Snapshot count used in the FIM; defaults to the receiver's `lx * ly`.
    #[serde(default)]
    pub snapshots: Option<usize>,
    #[serde(default)]
    pub pdd: PddParams,
}

fn default_architectures() -> Vec<Architecture> {
    vec![Architecture::Milac, Architecture::Digital]
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            architectures: default_architectures(),
            weights: WeightSpec::default(),
            snapshots: None,
            pdd: PddParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    Dft,
    Ml,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub lx: usize,
    pub ly: usize,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorChoice,
    #[serde(default = "default_ml_resolution")]
    pub ml_resolution_deg: f64,
}

fn default_estimator() -> EstimatorChoice {
    EstimatorChoice::Both
}

fn default_ml_resolution() -> f64 {
    0.25
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self { lx: 16, ly: 16, estimator: default_estimator(), ml_resolution_deg: default_ml_resolution() }
    }
}

impl ReceiverConfig {
    pub fn snapshots(&self) -> usize {
        self.lx * self.ly
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { trials: 500, base_seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "ninety")]
    pub theta_max_deg: f64,
    #[serde(default = "full_turn")]
    pub phi_max_deg: f64,
    #[serde(default = "one")]
    pub step_deg: f64,
}

fn ninety() -> f64 {
    90.0
}

fn full_turn() -> f64 {
    359.0
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { theta_max_deg: 90.0, phi_max_deg: full_turn(), step_deg: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityConfig {
    pub antennas: Vec<usize>,
    pub snapshots: usize,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        Self { antennas: vec![16, 64, 256, 1024], snapshots: 2500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    /// Any of `"csv"` (always written) and `"json"` (design dumps).
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_dir(), formats: default_formats() }
    }
}

/// Full-scale overrides applied by `--full`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullScale {
    #[serde(default)]
    pub geometry: Option<GeometryConfig>,
    #[serde(default)]
    pub receiver: Option<ReceiverConfig>,
    #[serde(default)]
    pub monte_carlo: Option<MonteCarloConfig>,
    #[serde(default)]
    pub snr_db: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub scene: SceneConfig,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub receiver: ReceiverConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub complexity: ComplexityConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub full: Option<FullScale>,
}

pub(crate) fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

impl ExperimentConfig {
    /// Parses a JSON document; syntax and schema errors carry the field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(if path == "." { "<document>" } else { &path }, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies the full-scale overrides, if any.
    pub fn at_full_scale(mut self) -> Self {
        if let Some(full) = self.full.take() {
            if let Some(g) = full.geometry {
                self.geometry = g;
            }
            if let Some(r) = full.receiver {
                self.receiver = r;
            }
            if let Some(m) = full.monte_carlo {
                self.monte_carlo = m;
            }
            if let Some(s) = full.snr_db {
                self.scene.snr_db = s;
            }
        }
        self
    }

    pub fn geom(&self) -> Result<UpaGeometry> {
        let g = &self.geometry;
        UpaGeometry::new(g.nx, g.ny, g.dx, g.dy).map_err(|e| config_err("geometry", e.to_string()))
    }

    /// Target directions in radians, `(theta, phi)`.
    pub fn target_angles(&self) -> Vec<(f64, f64)> {
        self.scene
            .targets_deg
            .iter()
            .map(|&[t, p]| (t.to_radians(), p.to_radians()))
            .collect()
    }

    pub fn weights(&self) -> Result<Vec<f64>> {
        self.design.weights.resolve(self.scene.targets_deg.len())
    }

    /// Snapshot count entering the FIM.
    pub fn fim_snapshots(&self) -> usize {
        self.design.snapshots.unwrap_or_else(|| self.receiver.snapshots())
    }

    pub fn scene_at(&self, snr_db: f64) -> Result<TargetScene> {
        snr_to_scene(
            snr_db,
            self.scene.p_t,
            &self.target_angles(),
            self.geom()?,
            self.scene.noise_power,
        )
    }

    /// Checks every field the chosen experiment reads before anything runs.
    pub fn validate(&self) -> Result<()> {
        let kind = self.experiment;
        if kind == ExperimentKind::Complexity {
            let c = &self.complexity;
            if c.antennas.is_empty() {
                return Err(config_err("complexity.antennas", "list is empty"));
            }
            if let Some(i) = c.antennas.iter().position(|&n| n == 0) {
                return Err(config_err(&format!("complexity.antennas[{i}]"), "antenna count must be positive"));
            }
            if c.snapshots == 0 {
                return Err(config_err("complexity.snapshots", "must be positive"));
            }
            return self.validate_output();
        }

        let geom = self.geom()?;
        let scene = &self.scene;
        if scene.targets_deg.is_empty() {
            return Err(config_err("scene.targets_deg", "at least one target is required"));
        }
        for (i, &[t, p]) in scene.targets_deg.iter().enumerate() {
            if !(0.0..=90.0).contains(&t) {
                return Err(config_err(&format!("scene.targets_deg[{i}][0]"), format!("elevation {t} outside [0, 90]")));
            }
            if !(0.0..360.0).contains(&p) {
                return Err(config_err(&format!("scene.targets_deg[{i}][1]"), format!("azimuth {p} outside [0, 360)")));
            }
        }
        if scene.targets_deg.len() > geom.num_elements() {
            return Err(config_err("scene.targets_deg", "more targets than antennas"));
        }
        if scene.snr_db.is_empty() {
            return Err(config_err("scene.snr_db", "at least one SNR point is required"));
        }
        if let Some(i) = scene.snr_db.iter().position(|s| !s.is_finite()) {
            return Err(config_err(&format!("scene.snr_db[{i}]"), "SNR must be finite"));
        }
        if !(scene.p_t > 0.0 && scene.p_t.is_finite()) {
            return Err(config_err("scene.p_t", "transmit power must be positive"));
        }
        if !(scene.noise_power > 0.0 && scene.noise_power.is_finite()) {
            return Err(config_err("scene.noise_power", "noise power must be positive"));
        }
        self.weights()?;
        if self.design.architectures.is_empty() {
            return Err(config_err("design.architectures", "at least one architecture is required"));
        }
        if self.fim_snapshots() == 0 {
            return Err(config_err("design.snapshots", "must be positive"));
        }
        let pdd = &self.design.pdd;
        if !(pdd.rho0 > 0.0) {
            return Err(config_err("design.pdd.rho0", "must be positive"));
        }
        if !(pdd.c > 0.0 && pdd.c < 1.0) {
            return Err(config_err("design.pdd.c", "must lie in (0, 1)"));
        }
        if !(pdd.eps > 0.0) {
            return Err(config_err("design.pdd.eps", "must be positive"));
        }
        if !(pdd.inner_tol > 0.0) {
            return Err(config_err("design.pdd.inner_tol", "must be positive"));
        }
        if pdd.inner_max == 0 || pdd.outer_max == 0 {
            return Err(config_err("design.pdd", "iteration caps must be positive"));
        }

        if matches!(kind, ExperimentKind::DoaSpectrum | ExperimentKind::MseSweep) {
            let r = &self.receiver;
            if r.lx == 0 || r.ly == 0 {
                return Err(config_err("receiver", "lx and ly must be positive"));
            }
            if r.snapshots() < geom.num_elements() {
                return Err(config_err(
                    "receiver",
                    format!("{} snapshots cannot carry {} orthogonal waveforms", r.snapshots(), geom.num_elements()),
                ));
            }
            if !(r.ml_resolution_deg > 0.0 && r.ml_resolution_deg <= 2.0) {
                return Err(config_err("receiver.ml_resolution_deg", "must lie in (0, 2]"));
            }
        }
        if kind == ExperimentKind::MseSweep {
            if self.monte_carlo.trials == 0 {
                return Err(config_err("monte_carlo.trials", "at least one trial is required"));
            }
            if self.scene.targets_deg.len() != 1 && self.receiver.estimator != EstimatorChoice::Dft {
                return Err(config_err("receiver.estimator", "the ML baseline handles a single target only"));
            }
        }
        if kind == ExperimentKind::Beampattern {
            let g = &self.grid;
            if !(g.step_deg > 0.0) || !(g.theta_max_deg > 0.0 && g.theta_max_deg <= 90.0) || !(g.phi_max_deg > 0.0 && g.phi_max_deg < 360.0) {
                return Err(config_err("grid", "need 0 < theta_max <= 90, 0 < phi_max < 360, step > 0"));
            }
        }
        self.validate_output()
    }

    fn validate_output(&self) -> Result<()> {
        for (i, f) in self.output.formats.iter().enumerate() {
            if f != "csv" && f != "json" {
                return Err(config_err(&format!("output.formats[{i}]"), format!("unknown format `{f}`")));
            }
        }
        Ok(())
    }

    pub fn wants_json(&self) -> bool {
        self.output.formats.iter().any(|f| f == "json")
    }
}
