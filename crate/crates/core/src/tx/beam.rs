//! Matched-filter baseline and transmit beampatterns.

use crate::array::{electrical_angles, steering_vector, UpaGeometry};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scene::TargetScene;

use super::{Architecture, BeamformerDesign};

/// Columns `conj(a_k) √(P_T / (K N))` for the K targets, zero elsewhere.
pub fn matched_filter_design(scene: &TargetScene, p_t: f64) -> Result<BeamformerDesign> {
    let n = scene.geom.num_elements();
    let k = scene.num_targets();
    if k > n {
        return Err(Error::arg(format!("{k} targets exceed {n} transmit chains")));
    }
    let amp = (p_t / (k * n) as f64).sqrt();
    let mut w = CMat::zeros(n, n);
    for (col, t) in scene.targets.iter().enumerate() {
        let a = steering_vector(electrical_angles(t.theta, t.phi, &scene.geom)?, &scene.geom);
        for r in 0..n {
            w[(r, col)] = a[r].conj() * amp;
        }
    }
    let p = (0..n).map(|i| if i < k { p_t / k as f64 } else { 0.0 }).collect();
    Ok(BeamformerDesign::from_parts(w, p, p_t, Architecture::MatchedFilter))
}

/// Radiated power `aᵀ(θ, φ) R_x a*(θ, φ)` at each grid direction; angles in
/// radians.
pub fn beampattern(r_x: &CMat, grid: &[(f64, f64)], geom: &UpaGeometry) -> Result<Vec<f64>> {
    let n = geom.num_elements();
    if r_x.shape() != (n, n) {
        return Err(Error::arg(format!("covariance is {:?}, expected {n}x{n}", r_x.shape())));
    }
    grid.iter()
        .map(|&(theta, phi)| {
            let a = steering_vector(electrical_angles(theta, phi, geom)?, geom);
            let ra = r_x * a.map(|z| z.conj());
            Ok(a.iter().zip(ra.iter()).map(|(x, y)| x * y).sum::<num_complex::Complex64>().re.max(0.0))
        })
        .collect()
}

/// Regular grid in degrees: `θ ∈ [0, θ_max]`, `φ ∈ [0, φ_max]` at `step`,
/// returned θ-major in radians together with the degree pairs.
pub fn angle_grid(theta_max_deg: f64, phi_max_deg: f64, step_deg: f64) -> Result<Vec<(f64, f64)>> {
    if !(step_deg > 0.0) || !(0.0..=90.0).contains(&theta_max_deg) || !(0.0..360.0).contains(&phi_max_deg) {
        return Err(Error::arg("invalid beampattern grid"));
    }
    let nt = (theta_max_deg / step_deg).round() as usize + 1;
    let np = (phi_max_deg / step_deg).round() as usize + 1;
    let mut out = Vec::with_capacity(nt * np);
    for i in 0..nt {
        for j in 0..np {
            out.push(((i as f64 * step_deg).to_radians(), (j as f64 * step_deg).to_radians()));
        }
    }
    Ok(out)
}

/// Indices of the `count` largest local maxima of `values` over a θ-major
/// grid with `np` azimuth points (8-neighbourhood, no wrap).
pub fn top_peaks(values: &[f64], np: usize, count: usize) -> Vec<usize> {
    let nt = values.len() / np;
    let mut peaks: Vec<usize> = (0..values.len())
        .filter(|&idx| {
            let (i, j) = ((idx / np) as isize, (idx % np) as isize);
            let v = values[idx];
            (-1..=1).all(|di| {
                (-1..=1).all(|dj| {
                    let (a, b) = (i + di, j + dj);
                    (di == 0 && dj == 0)
                        || a < 0
                        || b < 0
                        || a >= nt as isize
                        || b >= np as isize
                        || values[a as usize * np + b as usize] <= v
                })
            })
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    peaks.truncate(count);
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::linalg::frob;
    use crate::scene::snr_to_scene;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_like(n: usize, v: f64) -> CMat {
        CMat::identity(n, n) * c(v, 0.0)
    }

    fn deg(t: f64, p: f64) -> (f64, f64) {
        (t.to_radians(), p.to_radians())
    }

    #[test]
    fn isotropic_beampattern_is_flat() {
        let g = UpaGeometry::half_wavelength(3, 2).unwrap();
        let grid = angle_grid(90.0, 350.0, 10.0).unwrap();
        let bp = beampattern(&identity_like(6, 1.0), &grid, &g).unwrap();
        assert!(bp.iter().all(|&v| (v - 6.0).abs() < 1e-12));
    }

    #[test]
    fn rank_one_cauchy_schwarz() {
        let g = UpaGeometry::half_wavelength(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = nalgebra::DVector::from_fn(4, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let r = &v * v.adjoint();
        let grid = angle_grid(90.0, 180.0, 15.0).unwrap();
        let bp = beampattern(&r, &grid, &g).unwrap();
        for (&(t, p), val) in grid.iter().zip(&bp) {
            let a = steering_vector(electrical_angles(t, p, &g).unwrap(), &g);
            let want = (a.transpose() * &v)[(0, 0)].norm_sqr();
            assert!((val - want).abs() < 1e-12);
            assert!(*val <= 4.0 * v.norm_squared() + 1e-12);
        }
    }

    #[test]
    fn matched_filter_normalization() {
        let g = UpaGeometry::half_wavelength(2, 2).unwrap();
        let s = snr_to_scene(10.0, 2.0, &[(0.0, 0.0)], g, 1.0).unwrap();
        let d = matched_filter_design(&s, 2.0).unwrap();
        for r in 0..4 {
            assert!((d.w[(r, 0)] - c((2.0f64 / 4.0).sqrt(), 0.0)).norm() < 1e-15);
        }
        let s3 = snr_to_scene(10.0, 2.0, &[deg(30.0, 30.0), deg(45.0, 60.0), deg(60.0, 90.0)], g, 1.0).unwrap();
        assert!((frob(&matched_filter_design(&s3, 2.0).unwrap().w).powi(2) - 2.0).abs() < 1e-12);
        let many: Vec<(f64, f64)> = (0..5).map(|i| deg(10.0 * i as f64 + 5.0, 20.0)).collect();
        let s5 = snr_to_scene(10.0, 1.0, &many, g, 1.0).unwrap();
        assert!(matched_filter_design(&s5, 1.0).is_err());
    }

    #[test]
    fn matched_filter_peaks_at_target() {
        let g = UpaGeometry::half_wavelength(8, 8).unwrap();
        let s = snr_to_scene(10.0, 1.0, &[deg(40.0, 70.0)], g, 1.0).unwrap();
        let d = matched_filter_design(&s, 1.0).unwrap();
        let grid = angle_grid(90.0, 359.0, 1.0).unwrap();
        let bp = beampattern(&d.r_x, &grid, &g).unwrap();
        let best = (0..bp.len()).max_by(|&a, &b| bp[a].total_cmp(&bp[b])).unwrap();
        assert_eq!(best, 40 * 360 + 70);
    }

    #[test]
    fn peak_finder_orders_by_height() {
        let mut v = vec![0.0; 25];
        v[6] = 3.0;
        v[18] = 5.0;
        v[19] = 4.0;
        assert_eq!(top_peaks(&v, 5, 2), vec![18, 6]);
    }
}
