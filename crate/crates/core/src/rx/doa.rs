use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::array::UpaGeometry;
use crate::error::{Error, Result};

use super::slot_offsets;

/// Slack on the arcsine argument absorbing wrap round-off.
const ASIN_SLACK: f64 = 1e-9;

/// One detected target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaEstimate {
    /// Elevation in `[0, π/2]`, radians.
    pub theta: f64,
    /// Azimuth in `[0, 2π)`, radians.
    pub phi: f64,
    /// Electrical angles in units of π, in `[-1, 1)`.
    pub psi_x: f64,
    pub psi_y: f64,
    /// 1-based (bin, slot) of the spectral peak.
    pub peak: (usize, usize),
    pub peak_power: f64,
}

fn wrap_unit(v: f64) -> f64 {
    (v + 1.0).rem_euclid(2.0) - 1.0
}

/// Electrical angles (units of π) addressed by 1-based bin `n` and slot `ell`.
pub fn bins_to_psi(n: usize, ell: usize, geom: &UpaGeometry, lx: usize, ly: usize) -> Result<(f64, f64)> {
    let (ell_x, ell_y) = slot_offsets(ell, lx, ly)?;
    let (n_x, n_y) = crate::array::antenna_index(n, geom)?;
    let (nx, ny) = (geom.nx() as f64, geom.ny() as f64);
    let psi_x = wrap_unit(2.0 * ((n_x - 1) as f64 / nx + (ell_x - 1) as f64 / (nx * lx as f64)));
    let psi_y = wrap_unit(2.0 * ((n_y - 1) as f64 / ny + (ell_y - 1) as f64 / (ny * ly as f64)));
    Ok((psi_x, psi_y))
}

/// Inverts the electrical-angle map; `psi_x`, `psi_y` are in units of π.
/// Returns `(theta, phi)` with the azimuth folded into `[0, 2π)`.
pub fn psi_to_angles(psi_x: f64, psi_y: f64, geom: &UpaGeometry) -> Result<(f64, f64)> {
    let (dx, dy) = (geom.dx(), geom.dy());
    let (px, py) = (psi_x * PI, psi_y * PI);
    let arg = ((px / dx).powi(2) + (py / dy).powi(2)).sqrt() / geom.wavenumber();
    if arg > 1.0 + ASIN_SLACK {
        return Err(Error::Estimation(format!(
            "bin pair ({psi_x:.6}, {psi_y:.6}) lies outside the visible region (sin θ = {arg:.6})"
        )));
    }
    let theta = arg.min(1.0).asin();
    let phi = (psi_y * dx).atan2(psi_x * dy).rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    let phi = if phi >= 2.0 * PI { 0.0 } else { phi };
    Ok((theta, phi))
}

/// Picks the `k` strongest cells of an `N x L` power map (one greedy pass,
/// excluding only cells already chosen) and maps each to physical angles.
pub fn estimate_doa(
    spectrum: &DMatrix<f64>,
    k: usize,
    geom: &UpaGeometry,
    lx: usize,
    ly: usize,
) -> Result<Vec<DoaEstimate>> {
    let (n, l) = spectrum.shape();
    if n != geom.num_elements() || l != lx * ly {
        return Err(Error::arg(format!(
            "spectrum is {n}x{l}, expected {}x{}",
            geom.num_elements(),
            lx * ly
        )));
    }
    if k == 0 || k > n * l {
        return Err(Error::arg(format!("cannot pick {k} peaks from {} cells", n * l)));
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for (idx, &v) in spectrum.iter().enumerate() {
            if chosen.contains(&idx) {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((idx, v));
            }
        }
        chosen.push(best.expect("k <= number of cells").0);
    }
    chosen
        .into_iter()
        .map(|idx| {
            // Column-major storage: idx = bin + n * slot.
            let (bin, slot) = (idx % n + 1, idx / n + 1);
            let (psi_x, psi_y) = bins_to_psi(bin, slot, geom, lx, ly)?;
            let (theta, phi) = psi_to_angles(psi_x, psi_y, geom)?;
            Ok(DoaEstimate {
                theta,
                phi,
                psi_x,
                psi_y,
                peak: (bin, slot),
                peak_power: spectrum[(bin - 1, slot - 1)],
            })
        })
        .collect()
}

/// Absolute elevation error and wrapped azimuth error, radians.
pub fn angle_errors(est: (f64, f64), truth: (f64, f64)) -> (f64, f64) {
    let d_phi = (est.1 - truth.1 + PI).rem_euclid(2.0 * PI) - PI;
    ((est.0 - truth.0).abs(), d_phi.abs())
}
