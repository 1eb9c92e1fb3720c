use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::array::{electrical_angles_unchecked, steering_vector, UpaGeometry};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

/// Concentrated single-target likelihood for a known transmit signal.
///
/// With `X = (W/2) S` and `G(θ, φ) = a aᵀ X`, the least-squares residual after
/// fitting the reflection coefficient is `‖R‖² - |aᴴ R Xᴴ a*|² / (N aᵀ X Xᴴ a*)`.
#[derive(Debug, Clone)]
pub struct MlSurface {
    geom: UpaGeometry,
    cross: CMat,
    gram: CMat,
    energy: f64,
}

/// Search schedule: a coarse grid, a fine grid around the coarse winner and
/// one golden-section pass per axis. Steps in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlSearch {
    pub coarse_step: f64,
    pub fine_step: f64,
    pub golden_iters: usize,
}

impl Default for MlSearch {
    fn default() -> Self {
        Self { coarse_step: 2.0, fine_step: 0.25, golden_iters: 30 }
    }
}

impl MlSurface {
    pub fn new(r: &CMat, s: &CMat, w: &CMat, geom: &UpaGeometry) -> Result<Self> {
        let n = geom.num_elements();
        if r.nrows() != n || w.nrows() != n {
            return Err(Error::arg(format!(
                "received block has {} rows and beamformer {}, array has {n} elements",
                r.nrows(),
                w.nrows()
            )));
        }
        if w.ncols() != s.nrows() || s.ncols() != r.ncols() {
            return Err(Error::arg(format!(
                "shapes do not chain: W {:?}, S {:?}, R {:?}",
                w.shape(),
                s.shape(),
                r.shape()
            )));
        }
        let x = w * s * c(0.5, 0.0);
        let xh = x.adjoint();
        Ok(Self {
            geom: *geom,
            cross: r * &xh,
            gram: &x * xh,
            energy: r.iter().map(|z| z.norm_sqr()).sum(),
        })
    }

    /// Residual energy after the best single-target fit at `(theta, phi)`.
    pub fn residual(&self, theta: f64, phi: f64) -> f64 {
        let a = steering_vector(electrical_angles_unchecked(theta, phi, &self.geom), &self.geom);
        let a_conj = a.map(|z| z.conj());
        let fit: Complex64 = a.dotc(&(&self.cross * &a_conj));
        let illum = (a.transpose() * (&self.gram * &a_conj))[(0, 0)].re * self.geom.num_elements() as f64;
        if illum <= 0.0 {
            return self.energy;
        }
        self.energy - fit.norm_sqr() / illum
    }

    /// Minimizes the residual over `θ ∈ [0, π/2]`, `φ ∈ [0, 2π)`.
    pub fn search(&self, plan: &MlSearch) -> Result<(f64, f64)> {
        if !(plan.coarse_step > 0.0 && plan.fine_step > 0.0 && plan.fine_step <= plan.coarse_step) {
            return Err(Error::arg(format!(
                "search steps must satisfy 0 < fine ({}) <= coarse ({})",
                plan.fine_step, plan.coarse_step
            )));
        }
        let mut best = Best::new();
        let coarse = plan.coarse_step.to_radians();
        let theta_cells = (FRAC_PI_2 / coarse).round() as usize;
        let phi_cells = (2.0 * PI / coarse).round() as usize;
        for i in 0..=theta_cells {
            let theta = (i as f64 * coarse).min(FRAC_PI_2);
            for k in 0..phi_cells {
                let phi = k as f64 * 2.0 * PI / phi_cells as f64;
                best.offer(theta, phi, self.residual(theta, phi));
            }
        }

        let fine = plan.fine_step.to_radians();
        let span = (plan.coarse_step / plan.fine_step).round() as i64;
        let (tc, pc) = (best.theta, best.phi);
        for i in -span..=span {
            let theta = tc + i as f64 * fine;
            if !(0.0..=FRAC_PI_2 + 1e-12).contains(&theta) {
                continue;
            }
            let theta = theta.min(FRAC_PI_2);
            for k in -span..=span {
                let phi = (pc + k as f64 * fine).rem_euclid(2.0 * PI);
                best.offer(theta, phi, self.residual(theta, phi));
            }
        }

        let (tf, pf) = (best.theta, best.phi);
        let lo = (tf - fine).max(0.0);
        let hi = (tf + fine).min(FRAC_PI_2);
        golden(lo, hi, plan.golden_iters, |t| {
            let v = self.residual(t, pf);
            best.offer(t, pf, v);
            v
        });
        let tb = best.theta;
        golden(pf - fine, pf + fine, plan.golden_iters, |p| {
            let p = p.rem_euclid(2.0 * PI);
            let v = self.residual(tb, p);
            best.offer(tb, p, v);
            v
        });
        Ok((best.theta, best.phi))
    }
}

struct Best {
    theta: f64,
    phi: f64,
    value: f64,
}

impl Best {
    fn new() -> Self {
        Self { theta: 0.0, phi: 0.0, value: f64::INFINITY }
    }

    fn offer(&mut self, theta: f64, phi: f64, value: f64) {
        if value < self.value {
            *self = Self { theta, phi, value };
        }
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
fn golden(mut lo: f64, mut hi: f64, iters: usize, mut f: impl FnMut(f64) -> f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
}

/// Single-target ML direction estimate with a `resolution_deg` fine grid.
pub fn ml_estimate(r: &CMat, s: &CMat, w: &CMat, geom: &UpaGeometry, resolution_deg: f64) -> Result<(f64, f64)> {
    let plan = MlSearch {
        fine_step: resolution_deg,
        coarse_step: MlSearch::default().coarse_step.max(resolution_deg),
        ..MlSearch::default()
    };
    MlSurface::new(r, s, w, geom)?.search(&plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rx::angle_errors;
    use crate::scene::{make_waveforms, noiseless_echo, snr_to_scene, synthesize_rx};
    use crate::tx::matched_filter_design;

    fn setup(theta_deg: f64, phi_deg: f64) -> (crate::scene::TargetScene, CMat, CMat, UpaGeometry) {
        let g = UpaGeometry::half_wavelength(4, 4).unwrap();
        let scene = snr_to_scene(20.0, 1.0, &[(theta_deg.to_radians(), phi_deg.to_radians())], g, 1.0).unwrap();
        let w = matched_filter_design(&scene, 1.0).unwrap().w;
        let s = make_waveforms(16, 64).unwrap();
        (scene, w, s, g)
    }

    #[test]
    fn noiseless_on_grid_target_is_recovered() {
        for (t, p) in [(45.0, 30.0), (20.25, 301.5), (60.0, 0.0)] {
            let (scene, w, s, g) = setup(t, p);
            let r = noiseless_echo(&scene, &w, &s).unwrap();
            let (th, ph) = ml_estimate(&r, &s, &w, &g, 0.25).unwrap();
            let (dt, dp) = angle_errors((th, ph), (t.to_radians(), p.to_radians()));
            assert!(dt < 1e-6 && dp < 1e-6, "({t}, {p}) -> ({}, {})", th.to_degrees(), ph.to_degrees());
        }
    }

    #[test]
    fn returned_point_beats_truth_on_noisy_data() {
        let (scene, w, s, g) = setup(45.0, 30.0);
        let surface_data = synthesize_rx(&scene, &w, &s, 11).unwrap();
        let surface = MlSurface::new(&surface_data.r, &s, &w, &g).unwrap();
        let (th, ph) = surface.search(&MlSearch::default()).unwrap();
        let at_truth = surface.residual(45f64.to_radians(), 30f64.to_radians());
        assert!(surface.residual(th, ph) <= at_truth + 1e-12 * surface.energy);
    }

    #[test]
    fn residual_vanishes_at_truth_without_noise() {
        let (scene, w, s, g) = setup(33.0, 123.0);
        let r = noiseless_echo(&scene, &w, &s).unwrap();
        let surface = MlSurface::new(&r, &s, &w, &g).unwrap();
        let at_truth = surface.residual(33f64.to_radians(), 123f64.to_radians());
        assert!(at_truth.abs() <= 1e-10 * surface.energy);
        assert!(surface.residual(40f64.to_radians(), 123f64.to_radians()) > 1e-3 * surface.energy);
    }

    #[test]
    fn shape_errors() {
        let (_, w, s, g) = setup(45.0, 30.0);
        assert!(MlSurface::new(&CMat::zeros(16, 63), &s, &w, &g).is_err());
        assert!(MlSurface::new(&CMat::zeros(15, 64), &s, &w, &g).is_err());
        let surface = MlSurface::new(&CMat::zeros(16, 64), &s, &w, &g).unwrap();
        let bad = MlSearch { fine_step: 3.0, ..MlSearch::default() };
        assert!(surface.search(&bad).is_err());
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let mut seen = f64::INFINITY;
        let mut arg = 0.0;
        golden(-1.0, 2.0, 60, |x| {
            let v = (x - 0.3).powi(2);
            if v < seen {
                seen = v;
                arg = x;
            }
            v
        });
        assert!((arg - 0.3).abs() < 1e-8);
    }
}
