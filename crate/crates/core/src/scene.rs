//! Target scenes, orthogonal waveforms and received-signal synthesis.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{check_direction, steering_vector, electrical_angles, UpaGeometry};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

/// A point target: elevation, azimuth (radians) and reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub theta: f64,
    pub phi: f64,
    pub alpha: num_complex::Complex64,
}

impl Target {
    pub fn new(theta: f64, phi: f64, alpha: num_complex::Complex64) -> Result<Self> {
        check_direction(theta, phi)?;
        Ok(Self { theta, phi, alpha })
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64, alpha: num_complex::Complex64) -> Result<Self> {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians(), alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetScene {
    pub targets: Vec<Target>,
    pub noise_power: f64,
    pub geom: UpaGeometry,
}

impl TargetScene {
    pub fn new(targets: Vec<Target>, noise_power: f64, geom: UpaGeometry) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::arg("scene needs at least one target"));
        }
        if !(noise_power > 0.0) {
            return Err(Error::arg(format!("noise power must be positive, got {noise_power}")));
        }
        for t in &targets {
            check_direction(t.theta, t.phi)?;
        }
        Ok(Self {
            targets,
            noise_power,
            geom,
        })
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    /// Same scene with every reflection coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: num_complex::Complex64) -> Self {
        let mut out = self.clone();
        for t in &mut out.targets {
            t.alpha *= factor;
        }
        out
    }

    /// Same scene with uniformly random reflection phases.
    pub fn with_random_phases<R: Rng>(&self, rng: &mut R) -> Self {
        let mut out = self.clone();
        for t in &mut out.targets {
            let phase = rng.random_range(0.0..2.0 * PI);
            t.alpha = num_complex::Complex64::from_polar(t.alpha.norm(), phase);
        }
        out
    }

    /// Short human-readable description used in error messages.
    pub fn describe(&self) -> String {
        let targets: Vec<String> = self
            .targets
            .iter()
            .map(|t| format!("({:.2}°, {:.2}°)", t.theta.to_degrees(), t.phi.to_degrees()))
            .collect();
        format!(
            "{}x{} array, targets {}",
            self.geom.nx(),
            self.geom.ny(),
            targets.join(", ")
        )
    }
}

/// Received data for one coherent processing interval.
#[derive(Debug, Clone)]
pub struct SnapshotBlock {
    /// Unit-modulus code matrix (M x L).
    pub s: CMat,
    /// Source signal at the RF chains, `diag(p)^{1/2} S` with `p_m = ||w_m||²`.
    pub c: CMat,
    /// Received signal (N x L).
    pub r: CMat,
    /// Noise-free part of `r`.
    pub noiseless: CMat,
    pub l: usize,
    pub seed: u64,
}

/// Fourier code matrix `S[m, l] = exp(j 2π m l / L)`; rows are mutually
/// orthogonal with `S Sᴴ = L I`.
pub fn make_waveforms(m: usize, l: usize) -> Result<CMat> {
    if l < m {
        return Err(Error::arg(format!(
            "{m} orthogonal waveforms need at least {m} snapshots, got {l}"
        )));
    }
    Ok(CMat::from_fn(m, l, |r, k| {
        let ang = 2.0 * PI * ((r * k) % l) as f64 / l as f64;
        c(ang.cos(), ang.sin())
    }))
}

/// First `m` rows of the Sylvester Hadamard matrix of order `l` (a power of two).
pub fn hadamard_waveforms(m: usize, l: usize) -> Result<CMat> {
    if !l.is_power_of_two() {
        return Err(Error::arg(format!("Hadamard codes need a power-of-two length, got {l}")));
    }
    if l < m {
        return Err(Error::arg(format!("{m} Hadamard rows need length >= {m}, got {l}")));
    }
    Ok(CMat::from_fn(m, l, |r, k| {
        let sign = if (r & k).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        c(sign, 0.0)
    }))
}

/// Noise-free echo `Σ_k α_k b_k a_kᵀ (W/2) S`.
pub fn noiseless_echo(scene: &TargetScene, w: &CMat, s: &CMat) -> Result<CMat> {
    let n = scene.geom.num_elements();
    if w.nrows() != n {
        return Err(Error::arg(format!("beamformer has {} rows, array has {n} elements", w.nrows())));
    }
    if w.ncols() != s.nrows() {
        return Err(Error::arg(format!(
            "beamformer has {} columns but {} waveforms were supplied",
            w.ncols(),
            s.nrows()
        )));
    }
    let radiated = w * s * c(0.5, 0.0);
    let mut out = CMat::zeros(n, s.ncols());
    for t in &scene.targets {
        let v = steering_vector(electrical_angles(t.theta, t.phi, &scene.geom)?, &scene.geom);
        // a_kᵀ X is a 1 x L row; b_k = a_k.
        let row = v.transpose() * &radiated;
        out += (&v * t.alpha) * row;
    }
    Ok(out)
}

/// Adds i.i.d. circular complex Gaussian noise with per-entry variance `power`.
pub fn add_noise<R: Rng>(m: &mut CMat, power: f64, rng: &mut R) {
    let sd = (power / 2.0).sqrt();
    for z in m.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z += c(sd * re, sd * im);
    }
}

pub fn synthesize_rx(scene: &TargetScene, w: &CMat, s: &CMat, seed: u64) -> Result<SnapshotBlock> {
    let noiseless = noiseless_echo(scene, w, s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = noiseless.clone();
    add_noise(&mut r, scene.noise_power, &mut rng);
    let c_src = CMat::from_fn(s.nrows(), s.ncols(), |m, l| s[(m, l)] * w.column(m).norm());
    Ok(SnapshotBlock {
        s: s.clone(),
        c: c_src,
        r,
        noiseless,
        l: s.ncols(),
        seed,
    })
}

/// Builds a scene with equal per-target reflection power such that
/// `10 log10(Σ_k |α_k|² P_T / σ²) = snr_db`. Angles are `(theta, phi)` in radians.
pub fn snr_to_scene(
    snr_db: f64,
    p_t: f64,
    angles: &[(f64, f64)],
    geom: UpaGeometry,
    noise_power: f64,
) -> Result<TargetScene> {
    if !(p_t > 0.0) {
        return Err(Error::arg(format!("transmit power must be positive, got {p_t}")));
    }
    if angles.is_empty() {
        return Err(Error::arg("scene needs at least one target"));
    }
    let k = angles.len() as f64;
    let per_target = 10f64.powf(snr_db / 10.0) * noise_power / (k * p_t);
    let targets = angles
        .iter()
        .map(|&(theta, phi)| Target::new(theta, phi, c(per_target.sqrt(), 0.0)))
        .collect::<Result<Vec<_>>>()?;
    TargetScene::new(targets, noise_power, geom)
}

/// Total receive SNR in dB, `10 log10(Σ |α_k|² P_T / σ²)`.
pub fn scene_snr_db(scene: &TargetScene, p_t: f64) -> f64 {
    let total: f64 = scene.targets.iter().map(|t| t.alpha.norm_sqr()).sum();
    10.0 * (total * p_t / scene.noise_power).log10()
}
