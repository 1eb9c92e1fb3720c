//! Receive-side processing: closed-form MiLAC synthesis of the (fractional)
//! 2D DFT, the angular spectrum it produces, peak-based DoA estimation and a
//! maximum-likelihood baseline.

mod doa;
mod ml;

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::array::UpaGeometry;
use crate::error::{Error, Result};
use crate::linalg::{c, max_abs, CMat, CVec};

pub use doa::{angle_errors, bins_to_psi, estimate_doa, psi_to_angles, DoaEstimate};
pub use ml::{ml_estimate, MlSearch, MlSurface};

/// Characteristic impedance of the ports, in ohms.
pub const Z0: f64 = 50.0;

/// Unitarity tolerance accepted by [`milac_scattering`].
const UNITARY_TOL: f64 = 1e-8;

/// Slot matrices are cached while `L * N²` stays below this many entries.
const CACHE_LIMIT: usize = 1 << 22;

/// Normalized 2D DFT matrix; rows index spatial-frequency bins, columns index
/// antennas, both in x-fastest order.
pub fn dft_matrix_2d(geom: &UpaGeometry) -> CMat {
    fractional_entries(geom, 0.0, 0.0)
}

/// Fractional 2D DFT for 1-based slot `ell` of an `lx * ly` snapshot grid.
/// Slot `ell` sits at `ℓy = ceil(ell / lx)`, `ℓx = ell - (ℓy - 1) lx`, and
/// shifts every bin by `(ℓx - 1)/lx` and `(ℓy - 1)/ly` of a bin width.
pub fn fractional_dft_matrix(geom: &UpaGeometry, ell: usize, lx: usize, ly: usize) -> Result<CMat> {
    let (ell_x, ell_y) = slot_offsets(ell, lx, ly)?;
    Ok(fractional_entries(
        geom,
        (ell_x - 1) as f64 / lx as f64,
        (ell_y - 1) as f64 / ly as f64,
    ))
}

/// 1-based `(ℓx, ℓy)` of slot `ell`.
pub fn slot_offsets(ell: usize, lx: usize, ly: usize) -> Result<(usize, usize)> {
    if lx == 0 || ly == 0 {
        return Err(Error::arg(format!("snapshot grid must be non-empty, got {lx}x{ly}")));
    }
    let len = lx * ly;
    if ell == 0 || ell > len {
        return Err(Error::Index { index: ell, len });
    }
    let ell_y = ell.div_ceil(lx);
    Ok((ell - (ell_y - 1) * lx, ell_y))
}

fn fractional_entries(geom: &UpaGeometry, frac_x: f64, frac_y: f64) -> CMat {
    let n = geom.num_elements();
    let (nx, ny) = (geom.nx() as f64, geom.ny() as f64);
    let scale = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |bin, ant| {
        let (bx, by) = (bin % geom.nx(), bin / geom.nx());
        let (ax, ay) = (ant % geom.nx(), ant / geom.nx());
        let phase = -2.0 * PI
            * (ax as f64 * (bx as f64 + frac_x) / nx + ay as f64 * (by as f64 + frac_y) / ny);
        c(scale * phase.cos(), scale * phase.sin())
    })
}

/// Lossless reciprocal scattering matrix `[[0, Fᵀ], [F, 0]]` whose extracted
/// transfer block `½ Θ[N.., ..N]` equals `F / 2` exactly.
pub fn milac_scattering(f: &CMat) -> Result<CMat> {
    if !f.is_square() {
        return Err(Error::arg(format!("transfer matrix must be square, got {:?}", f.shape())));
    }
    let n = f.nrows();
    let gram_err = max_abs(&(f.adjoint() * f - CMat::identity(n, n)));
    if gram_err > UNITARY_TOL {
        return Err(Error::arg(format!(
            "transfer matrix is not unitary (Gram error {gram_err:.2e}); a lossless network cannot realize it"
        )));
    }
    let mut theta = CMat::zeros(2 * n, 2 * n);
    theta.view_mut((0, n), (n, n)).copy_from(&f.transpose());
    theta.view_mut((n, 0), (n, n)).copy_from(f);
    Ok(theta)
}

/// Transfer block `½ Θ[N+1..2N, 1..N]` of a `2N`-port scattering matrix.
pub fn milac_transfer(theta: &CMat) -> Result<CMat> {
    if !theta.is_square() || theta.nrows() % 2 != 0 {
        return Err(Error::arg(format!("scattering matrix must be 2N x 2N, got {:?}", theta.shape())));
    }
    let n = theta.nrows() / 2;
    Ok(theta.view((n, 0), (n, n)) * c(0.5, 0.0))
}

/// Admittance `Y = (I + Θ)⁻¹ (I - Θ) / Z0`, inverting `Θ = (I + Z0 Y)⁻¹ (I - Z0 Y)`.
pub fn admittance_from_scattering(theta: &CMat, z0: f64) -> Result<CMat> {
    if !theta.is_square() {
        return Err(Error::arg(format!("scattering matrix must be square, got {:?}", theta.shape())));
    }
    if !(z0 > 0.0) {
        return Err(Error::arg(format!("characteristic impedance must be positive, got {z0}")));
    }
    let n = theta.nrows();
    let eye = CMat::identity(n, n);
    let plus = &eye + theta;
    let svd = plus.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin <= 1e-12 * smax.max(1.0) {
        return Err(Error::Synthesis(format!(
            "I + Θ is singular (smallest singular value {smin:.2e}); Θ has an eigenvalue at -1"
        )));
    }
    let inv = plus
        .try_inverse()
        .ok_or_else(|| Error::Synthesis("I + Θ could not be inverted".into()))?;
    Ok(inv * (eye - theta) * c(1.0 / z0, 0.0))
}

/// Forward map `Θ = (I + Z0 Y)⁻¹ (I - Z0 Y)`.
pub fn scattering_from_admittance(y: &CMat, z0: f64) -> Result<CMat> {
    if !y.is_square() {
        return Err(Error::arg(format!("admittance must be square, got {:?}", y.shape())));
    }
    let n = y.nrows();
    let eye = CMat::identity(n, n);
    let zy = y * c(z0, 0.0);
    let inv = (&eye + &zy)
        .try_inverse()
        .ok_or_else(|| Error::Synthesis("I + Z0 Y is singular".into()))?;
    Ok(inv * (eye - zy))
}

/// Per-slot receive processing for an `lx * ly` snapshot grid.
#[derive(Debug, Clone)]
pub struct DftPlan {
    geom: UpaGeometry,
    lx: usize,
    ly: usize,
    /// MiLAC transfer matrices `2V_ℓ`, kept when small enough.
    cached: Option<Vec<CMat>>,
}

impl DftPlan {
    pub fn new(geom: UpaGeometry, lx: usize, ly: usize) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::arg(format!("snapshot grid must be non-empty, got {lx}x{ly}")));
        }
        let mut plan = Self { geom, lx, ly, cached: None };
        let n = geom.num_elements();
        if plan.slots() * n * n <= CACHE_LIMIT {
            let mats = (1..=plan.slots())
                .into_par_iter()
                .map(|ell| plan.synthesize(ell))
                .collect::<Result<Vec<_>>>()?;
            plan.cached = Some(mats);
        }
        Ok(plan)
    }

    pub fn geom(&self) -> &UpaGeometry {
        &self.geom
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn slots(&self) -> usize {
        self.lx * self.ly
    }

    /// Ideal fractional DFT matrix of 1-based slot `ell`.
    pub fn slot_matrix(&self, ell: usize) -> Result<CMat> {
        fractional_dft_matrix(&self.geom, ell, self.lx, self.ly)
    }

    /// Scattering matrix the network is reconfigured to at slot `ell`.
    pub fn slot_scattering(&self, ell: usize) -> Result<CMat> {
        milac_scattering(&self.slot_matrix(ell)?)
    }

    /// Map applied by the network at slot `ell`, `2V_ℓ`, read back from the
    /// synthesized scattering matrix.
    pub fn transfer(&self, ell: usize) -> Result<CMat> {
        match &self.cached {
            Some(mats) => {
                slot_offsets(ell, self.lx, self.ly)?;
                Ok(mats[ell - 1].clone())
            }
            None => self.synthesize(ell),
        }
    }

    fn synthesize(&self, ell: usize) -> Result<CMat> {
        Ok(milac_transfer(&self.slot_scattering(ell)?)? * c(2.0, 0.0))
    }

    fn apply(&self, ell: usize, r: &CVec) -> Result<CVec> {
        match &self.cached {
            Some(mats) => Ok(&mats[ell - 1] * r),
            None => Ok(self.synthesize(ell)? * r),
        }
    }
}

fn check_block(r: &CMat, geom: &UpaGeometry, slots: usize) -> Result<()> {
    let n = geom.num_elements();
    if r.nrows() != n {
        return Err(Error::arg(format!("received block has {} rows, array has {n} elements", r.nrows())));
    }
    if r.ncols() != slots {
        return Err(Error::arg(format!(
            "received block has {} snapshots, the slot grid has {slots}",
            r.ncols()
        )));
    }
    Ok(())
}

/// Power map `|z[n, ℓ]|²` with `z[:, ℓ] = 2V_ℓ r[:, ℓ]` from the network.
pub fn analog_spectrum(r: &CMat, plan: &DftPlan) -> Result<DMatrix<f64>> {
    check_block(r, &plan.geom, plan.slots())?;
    let cols = (0..plan.slots())
        .into_par_iter()
        .map(|l| {
            let z = plan.apply(l + 1, &r.column(l).into_owned())?;
            Ok(z.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let n = r.nrows();
    Ok(DMatrix::from_fn(n, plan.slots(), |i, l| cols[l][i]))
}

/// Reference power map computed digitally by separable row/column sums
/// with per-slot fractional frequency offsets.
pub fn digital_spectrum(r: &CMat, geom: &UpaGeometry, lx: usize, ly: usize) -> Result<DMatrix<f64>> {
    let slots = lx * ly;
    check_block(r, geom, slots)?;
    let (nx, ny) = (geom.nx(), geom.ny());
    let n = nx * ny;
    let scale = 1.0 / (n as f64).sqrt();
    let twiddle = |count: usize, k: f64, idx: usize| {
        let ang = -2.0 * PI * k * idx as f64 / count as f64;
        c(ang.cos(), ang.sin())
    };
    let cols = (0..slots)
        .into_par_iter()
        .map(|l| {
            let (ell_x, ell_y) = slot_offsets(l + 1, lx, ly)?;
            let fx = (ell_x - 1) as f64 / lx as f64;
            let fy = (ell_y - 1) as f64 / ly as f64;
            // Transform along x within each row of the array.
            let mut stage = vec![c(0.0, 0.0); n];
            for iy in 0..ny {
                for bx in 0..nx {
                    stage[bx + nx * iy] = (0..nx)
                        .map(|ix| r[(ix + nx * iy, l)] * twiddle(nx, bx as f64 + fx, ix))
                        .sum();
                }
            }
            // Then along y.
            let mut out = vec![0.0; n];
            for by in 0..ny {
                for bx in 0..nx {
                    let z: num_complex::Complex64 = (0..ny)
                        .map(|iy| stage[bx + nx * iy] * twiddle(ny, by as f64 + fy, iy))
                        .sum();
                    out[bx + nx * by] = (z * scale).norm_sqr();
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(n, slots, |i, l| cols[l][i]))
}

/// Real operations of a digital fractional 2D DFT over `l` snapshots,
/// `34/9 · L · N · log2 N`.
pub fn dft_complexity(n: usize, l: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    34.0 * l as f64 * n as f64 * (n as f64).log2() / 9.0
}

/// Digital operations spent by the analog receiver, which is none.
pub fn milac_complexity(_n: usize, _l: usize) -> f64 {
    0.0
}

/// Writes `n, ell, power, psi_x_hat, psi_y_hat` rows (1-based indices).
pub fn write_spectrum_csv(path: &Path, spectrum: &DMatrix<f64>, plan: &DftPlan) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["n", "ell", "power", "psi_x_hat", "psi_y_hat"])?;
    for l in 0..spectrum.ncols() {
        for i in 0..spectrum.nrows() {
            let (px, py) = bins_to_psi(i + 1, l + 1, &plan.geom, plan.lx, plan.ly)?;
            out.write_record(&[
                (i + 1).to_string(),
                (l + 1).to_string(),
                format!("{:.12e}", spectrum[(i, l)]),
                format!("{px:.12}"),
                format!("{py:.12}"),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{electrical_angles, steering_vector, ElectricalAngles};
    use crate::linalg::frob;
    use proptest::prelude::*;

    fn geom(nx: usize, ny: usize) -> UpaGeometry {
        UpaGeometry::half_wavelength(nx, ny).unwrap()
    }

    fn eye(n: usize) -> CMat {
        CMat::identity(n, n)
    }

    #[test]
    fn trivial_dft_sizes() {
        let f = dft_matrix_2d(&geom(1, 1));
        assert!((f[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let f = dft_matrix_2d(&geom(2, 1));
        let h = 1.0 / 2f64.sqrt();
        let expect = CMat::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]);
        assert!(max_abs(&(f - expect)) < 1e-15);
    }

    #[test]
    fn dft_4x4_is_unitary_and_symmetric() {
        let f = dft_matrix_2d(&geom(4, 4));
        assert!(max_abs(&(f.adjoint() * &f - eye(16))) < 1e-12);
        assert!(max_abs(&(&f - f.transpose())) < 1e-12);
    }

    #[test]
    fn dft_entries_follow_separable_formula() {
        let g = geom(4, 2);
        let f = dft_matrix_2d(&g);
        for row in 0..8 {
            for col in 0..8 {
                let (bx, by) = (row % 4, row / 4);
                let (ax, ay) = (col % 4, col / 4);
                let ex = -2.0 * PI * (ax * bx) as f64 / 4.0;
                let ey = -2.0 * PI * (ay * by) as f64 / 2.0;
                let want = c(ex.cos(), ex.sin()) * c(ey.cos(), ey.sin()) / 8f64.sqrt();
                assert!((f[(row, col)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn first_slot_is_plain_dft() {
        let g = geom(4, 4);
        for (lx, ly) in [(1, 1), (3, 2), (8, 8)] {
            assert_eq!(fractional_dft_matrix(&g, 1, lx, ly).unwrap(), dft_matrix_2d(&g));
        }
    }

    #[test]
    fn second_slot_shifts_column_phases() {
        let g = geom(2, 1);
        let base = dft_matrix_2d(&g);
        let shifted = fractional_dft_matrix(&g, 2, 2, 1).unwrap();
        for col in 0..2 {
            let ang = -PI * col as f64 / 2.0;
            for row in 0..2 {
                let want = base[(row, col)] * c(ang.cos(), ang.sin());
                assert!((shifted[(row, col)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn slot_index_mapping() {
        assert_eq!(slot_offsets(1, 4, 3).unwrap(), (1, 1));
        assert_eq!(slot_offsets(4, 4, 3).unwrap(), (4, 1));
        assert_eq!(slot_offsets(5, 4, 3).unwrap(), (1, 2));
        assert_eq!(slot_offsets(12, 4, 3).unwrap(), (4, 3));
        assert!(matches!(slot_offsets(13, 4, 3), Err(Error::Index { index: 13, len: 12 })));
        assert!(matches!(slot_offsets(0, 4, 3), Err(Error::Index { .. })));
        assert!(fractional_dft_matrix(&geom(2, 2), 5, 2, 2).is_err());
    }

    #[test]
    fn every_slot_is_unitary() {
        let g = geom(4, 2);
        for ell in 1..=12 {
            let f = fractional_dft_matrix(&g, ell, 4, 3).unwrap();
            assert!(max_abs(&(f.adjoint() * &f - eye(8))) < 1e-10, "slot {ell}");
        }
    }

    #[test]
    fn scattering_of_identity() {
        let theta = milac_scattering(&eye(3)).unwrap();
        let mut expect = CMat::zeros(6, 6);
        for i in 0..3 {
            expect[(i, i + 3)] = c(1.0, 0.0);
            expect[(i + 3, i)] = c(1.0, 0.0);
        }
        assert_eq!(theta, expect);
    }

    #[test]
    fn scattering_of_dft_is_lossless_reciprocal_and_exact() {
        let f = dft_matrix_2d(&geom(4, 4));
        let theta = milac_scattering(&f).unwrap();
        assert!(max_abs(&(theta.adjoint() * &theta - eye(32))) < 1e-12);
        assert!(max_abs(&(&theta - theta.transpose())) < 1e-12);
        let v = milac_transfer(&theta).unwrap();
        assert_eq!(frob(&(v * c(2.0, 0.0) - &f)), 0.0);
    }

    #[test]
    fn scattering_rejects_lossy_map() {
        let f = eye(2) * c(0.9, 0.0);
        assert!(matches!(milac_scattering(&f), Err(Error::Argument(_))));
    }

    #[test]
    fn admittance_examples() {
        let y = admittance_from_scattering(&CMat::zeros(4, 4), Z0).unwrap();
        assert!(max_abs(&(y - eye(4) * c(1.0 / Z0, 0.0))) < 1e-15);

        let mut minus = eye(3) * c(-1.0, 0.0);
        minus[(2, 2)] = c(0.3, 0.0);
        assert!(matches!(admittance_from_scattering(&minus, Z0), Err(Error::Synthesis(_))));
    }

    #[test]
    fn dft_networks_have_no_admittance() {
        // Θ = [[0, F], [F, 0]] with F symmetric has eigenvalues ±λ(F), and a
        // DFT has both +1 and -1 among its eigenvalues.
        for g in [geom(2, 1), geom(2, 2), geom(4, 4)] {
            let theta = milac_scattering(&dft_matrix_2d(&g)).unwrap();
            assert!(matches!(admittance_from_scattering(&theta, Z0), Err(Error::Synthesis(_))));
        }
    }

    #[test]
    fn admittance_round_trip_for_generic_network() {
        // U Uᵀ is unitary and symmetric for any unitary U.
        let u = crate::tx::generic_unitary(4, 3);
        let theta = &u * u.transpose();
        let y = admittance_from_scattering(&theta, Z0).unwrap();
        assert!(max_abs(&(&y - y.transpose())) < 1e-12, "reciprocal network has symmetric Y");
        let back = scattering_from_admittance(&y, Z0).unwrap();
        assert!(max_abs(&(back - theta)) < 1e-10);
    }

    #[test]
    fn spectrum_of_zero_block_is_zero() {
        let plan = DftPlan::new(geom(2, 2), 2, 2).unwrap();
        let s = analog_spectrum(&CMat::zeros(4, 4), &plan).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
        assert!(analog_spectrum(&CMat::zeros(4, 3), &plan).is_err());
    }

    #[test]
    fn single_slot_spectrum_matches_direct_dft() {
        let g = geom(4, 4);
        let plan = DftPlan::new(g, 1, 1).unwrap();
        let r = CMat::from_fn(16, 1, |i, _| c((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()));
        let analog = analog_spectrum(&r, &plan).unwrap();
        // Direct double sum over antennas for every bin.
        for bin in 0..16 {
            let (bx, by) = (bin % 4, bin / 4);
            let mut z = c(0.0, 0.0);
            for ant in 0..16 {
                let (ax, ay) = (ant % 4, ant / 4);
                let ang = -2.0 * PI * ((ax * bx) as f64 + (ay * by) as f64) / 4.0;
                z += r[(ant, 0)] * c(ang.cos(), ang.sin());
            }
            assert!((analog[(bin, 0)] - z.norm_sqr() / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn analog_and_digital_spectra_agree() {
        let g = geom(4, 2);
        let (lx, ly) = (3, 4);
        let plan = DftPlan::new(g, lx, ly).unwrap();
        let r = CMat::from_fn(8, 12, |i, l| c(0.0, (i * 7 + l) as f64 * 0.37 - (i + 3 * l) as f64 * 0.11).exp());
        let a = analog_spectrum(&r, &plan).unwrap();
        let d = digital_spectrum(&r, &g, lx, ly).unwrap();
        assert!(a.iter().zip(d.iter()).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn on_bin_target_peaks_at_its_cell() {
        let g = geom(4, 4);
        let (lx, ly) = (4, 4);
        let plan = DftPlan::new(g, lx, ly).unwrap();
        // Bin (2, 1) in x/y with fractional slot (3, 2).
        let psi = ElectricalAngles {
            psi_x: 2.0 * PI * (2.0 / 4.0 + 2.0 / 16.0),
            psi_y: 2.0 * PI * (1.0 / 4.0 + 1.0 / 16.0),
        };
        let a = steering_vector(psi, &g);
        let r = CMat::from_fn(16, 16, |i, _| a[i]);
        let s = analog_spectrum(&r, &plan).unwrap();
        let (best, _) = s.iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let (bin, slot) = (best % 16, best / 16);
        assert_eq!(bin, 2 + 4);
        assert_eq!(slot + 1, 3 + (2 - 1) * 4);
        assert!((s[(bin, slot)] - 16.0).abs() < 1e-9);
    }

    #[test]
    fn uncached_plan_matches_cached() {
        let g = geom(2, 2);
        let cached = DftPlan::new(g, 2, 3).unwrap();
        let uncached = DftPlan { cached: None, ..cached.clone() };
        for ell in 1..=6 {
            assert_eq!(cached.transfer(ell).unwrap(), uncached.transfer(ell).unwrap());
        }
        assert!(cached.transfer(7).is_err());
    }

    #[test]
    fn complexity_counts() {
        let want = (34 * 2500 * 16 * 4) as f64 / 9.0;
        assert_eq!(dft_complexity(16, 2500), want);
        assert!((want - 6.044e5).abs() < 1e2);
        assert_eq!(dft_complexity(1, 2500), 0.0);
        assert_eq!(dft_complexity(64, 5000), 2.0 * dft_complexity(64, 2500));
        assert_eq!(milac_complexity(64, 5000), 0.0);
    }

    #[test]
    fn spectrum_csv_has_one_row_per_cell() {
        let g = geom(2, 2);
        let plan = DftPlan::new(g, 2, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.csv");
        let a = steering_vector(electrical_angles(0.3, 0.2, &g).unwrap(), &g);
        let r = CMat::from_fn(4, 2, |i, _| a[i]);
        write_spectrum_csv(&path, &analog_spectrum(&r, &plan).unwrap(), &plan).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().count(), 1 + 8);
        assert!(text.starts_with("n,ell,power,psi_x_hat,psi_y_hat"));
    }

    proptest! {
        #[test]
        fn slots_preserve_energy(seed in 0u64..500, lx in 1usize..5, ly in 1usize..5) {
            let g = geom(4, 2);
            let plan = DftPlan::new(g, lx, ly).unwrap();
            let r = CMat::from_fn(8, lx * ly, |i, l| {
                let t = (seed as f64 + 1.0) * 0.013 * (i + 11 * l + 1) as f64;
                c(t.sin(), (1.7 * t).cos())
            });
            let s = analog_spectrum(&r, &plan).unwrap();
            for l in 0..lx * ly {
                let input: f64 = r.column(l).iter().map(|z| z.norm_sqr()).sum();
                let output: f64 = s.column(l).iter().sum();
                prop_assert!((input - output).abs() <= 1e-12 * input.max(1.0));
            }
        }

        #[test]
        fn synthesized_networks_are_lossless_and_reciprocal(nx in 1usize..9, ny in 1usize..9, lx in 1usize..9, ly in 1usize..9, pick in 0usize..64) {
            let g = geom(nx, ny);
            let ell = pick % (lx * ly) + 1;
            let f = fractional_dft_matrix(&g, ell, lx, ly).unwrap();
            let theta = milac_scattering(&f).unwrap();
            let n2 = 2 * g.num_elements();
            prop_assert!(max_abs(&(theta.adjoint() * &theta - eye(n2))) < 1e-12);
            prop_assert!(max_abs(&(&theta - theta.transpose())) < 1e-12);
            prop_assert_eq!(frob(&(milac_transfer(&theta).unwrap() * c(2.0, 0.0) - f)), 0.0);
        }
    }
}
