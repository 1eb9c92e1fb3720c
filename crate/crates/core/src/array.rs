//! Uniform planar array geometry, steering vectors and round-trip steering
//! matrices with their analytic angle derivatives.
//!
//! Elements are numbered `n = 1..=N` in x-fastest order: element `n` sits at
//! column `nx = n - (ny - 1) Nx` of row `ny = ceil(n / Nx)`. Internally the
//! zero-based index `i = n - 1` gives `nx - 1 = i % Nx` and `ny - 1 = i / Nx`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};

const ANGLE_SLACK: f64 = 1e-12;

/// Planar array of `nx * ny` elements with spacings in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpaGeometry {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
}

impl UpaGeometry {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::arg(format!("array needs at least one element, got {nx}x{ny}")));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::arg(format!("element spacings must be positive, got dx={dx}, dy={dy}")));
        }
        Ok(Self { nx, ny, dx, dy })
    }

    /// Square half-wavelength array, the layout used by every experiment.
    pub fn half_wavelength(nx: usize, ny: usize) -> Result<Self> {
        Self::new(nx, ny, 0.5, 0.5)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    /// Wavelength; spacings are expressed in units of it.
    pub fn wavelength(&self) -> f64 {
        1.0
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    /// Zero-based (x, y) offsets of zero-based element `i`.
    #[inline]
    pub(crate) fn offsets(&self, i: usize) -> (usize, usize) {
        (i % self.nx, i / self.nx)
    }
}

/// Per-element phase progressions along x and y (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectricalAngles {
    pub psi_x: f64,
    pub psi_y: f64,
}

pub fn check_direction(theta: f64, phi: f64) -> Result<()> {
    if !(-ANGLE_SLACK..=FRAC_PI_2 + ANGLE_SLACK).contains(&theta) {
        return Err(Error::Domain(format!("elevation {theta} rad outside [0, pi/2]")));
    }
    if !(-ANGLE_SLACK..2.0 * PI).contains(&phi) {
        return Err(Error::Domain(format!("azimuth {phi} rad outside [0, 2pi)")));
    }
    Ok(())
}

pub fn electrical_angles(theta: f64, phi: f64, geom: &UpaGeometry) -> Result<ElectricalAngles> {
    check_direction(theta, phi)?;
    Ok(electrical_angles_unchecked(theta, phi, geom))
}

pub(crate) fn electrical_angles_unchecked(theta: f64, phi: f64, geom: &UpaGeometry) -> ElectricalAngles {
    let k = geom.wavenumber();
    ElectricalAngles {
        psi_x: k * geom.dx * theta.sin() * phi.cos(),
        psi_y: k * geom.dy * theta.sin() * phi.sin(),
    }
}

/// Maps a 1-based element index to its 1-based (nx, ny) coordinates.
pub fn antenna_index(n: usize, geom: &UpaGeometry) -> Result<(usize, usize)> {
    let len = geom.num_elements();
    if n == 0 || n > len {
        return Err(Error::Index { index: n, len });
    }
    let ny = n.div_ceil(geom.nx);
    let nx = n - (ny - 1) * geom.nx;
    Ok((nx, ny))
}

/// `a_y(psi_y) ⊗ a_x(psi_x)` with phasors `exp(+j psi (n - 1))`.
pub fn steering_vector(angles: ElectricalAngles, geom: &UpaGeometry) -> CVec {
    CVec::from_fn(geom.num_elements(), |i, _| {
        let (ix, iy) = geom.offsets(i);
        let phase = angles.psi_x * ix as f64 + angles.psi_y * iy as f64;
        c(phase.cos(), phase.sin())
    })
}

/// Diagonal of `D_psi_x = j (I ⊗ D_x)` divided by `j`, i.e. the x offsets.
pub fn x_offsets(geom: &UpaGeometry) -> Vec<f64> {
    (0..geom.num_elements()).map(|i| geom.offsets(i).0 as f64).collect()
}

/// Diagonal of `D_psi_y = j (D_y ⊗ I)` divided by `j`, i.e. the y offsets.
pub fn y_offsets(geom: &UpaGeometry) -> Vec<f64> {
    (0..geom.num_elements()).map(|i| geom.offsets(i).1 as f64).collect()
}

/// Steering data for one direction.
#[derive(Debug, Clone)]
pub struct SteeringBundle {
    /// Transmit steering vector.
    pub a: CVec,
    /// Receive steering vector; equal to `a` for a co-located array.
    pub b: CVec,
    /// Round-trip steering matrix `b aᵀ`.
    pub big_a: CMat,
    pub d_psi_x: CMat,
    pub d_psi_y: CMat,
    pub d_theta: CMat,
    pub d_phi: CMat,
}

/// Chain-rule factors `(dpsi_x/dtheta, dpsi_y/dtheta, dpsi_x/dphi, dpsi_y/dphi)`.
pub fn angle_jacobian(theta: f64, phi: f64, geom: &UpaGeometry) -> [f64; 4] {
    let k = geom.wavenumber();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [
        k * geom.dx * ct * cp,
        k * geom.dy * ct * sp,
        -k * geom.dx * st * sp,
        k * geom.dy * st * cp,
    ]
}

pub fn steering_bundle(theta: f64, phi: f64, geom: &UpaGeometry) -> Result<SteeringBundle> {
    let angles = electrical_angles(theta, phi, geom)?;
    let a = steering_vector(angles, geom);
    let b = a.clone();
    let big_a = &b * a.transpose();

    // D A + A D for diagonal D: entry (r, k) picks up j (d_r + d_k).
    let xo = x_offsets(geom);
    let yo = y_offsets(geom);
    let d_psi_x = CMat::from_fn(big_a.nrows(), big_a.ncols(), |r, k| big_a[(r, k)] * c(0.0, xo[r] + xo[k]));
    let d_psi_y = CMat::from_fn(big_a.nrows(), big_a.ncols(), |r, k| big_a[(r, k)] * c(0.0, yo[r] + yo[k]));

    let [xt, yt, xp, yp] = angle_jacobian(theta, phi, geom);
    let d_theta = &d_psi_x * c(xt, 0.0) + &d_psi_y * c(yt, 0.0);
    let d_phi = &d_psi_x * c(xp, 0.0) + &d_psi_y * c(yp, 0.0);

    Ok(SteeringBundle {
        a,
        b,
        big_a,
        d_psi_x,
        d_psi_y,
        d_theta,
        d_phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob, max_abs, real_diag, J};

    fn geom(nx: usize, ny: usize) -> UpaGeometry {
        UpaGeometry::half_wavelength(nx, ny).unwrap()
    }

    #[test]
    fn electrical_angles_examples() {
        let g = geom(4, 4);
        let e = electrical_angles(0.0, 1.234, &g).unwrap();
        assert_eq!((e.psi_x, e.psi_y), (0.0, 0.0));

        let e = electrical_angles(FRAC_PI_2, 0.0, &g).unwrap();
        assert!((e.psi_x - PI).abs() < 1e-15 && e.psi_y.abs() < 1e-15);

        // 45 deg elevation, 30 deg azimuth: pi sin45 cos30 = 1.9238..., pi sin45 sin30 = 1.1107...
        let e = electrical_angles(45f64.to_radians(), 30f64.to_radians(), &g).unwrap();
        assert!((e.psi_x - 1.923_824_745_242_796_1).abs() < 1e-12);
        assert!((e.psi_y - 1.110_720_734_539_591_6).abs() < 1e-12);
    }

    #[test]
    fn electrical_angles_reject_out_of_domain() {
        let g = geom(2, 2);
        assert!(matches!(electrical_angles(-0.1, 0.0, &g), Err(Error::Domain(_))));
        assert!(matches!(electrical_angles(1.7, 0.0, &g), Err(Error::Domain(_))));
        assert!(matches!(electrical_angles(0.3, 2.0 * PI, &g), Err(Error::Domain(_))));
    }

    #[test]
    fn antenna_index_examples() {
        let g = geom(4, 3);
        assert_eq!(antenna_index(1, &g).unwrap(), (1, 1));
        assert_eq!(antenna_index(4, &g).unwrap(), (4, 1));
        assert_eq!(antenna_index(5, &g).unwrap(), (1, 2));
        assert_eq!(antenna_index(12, &g).unwrap(), (4, 3));
        assert!(matches!(antenna_index(0, &g), Err(Error::Index { .. })));
        assert!(matches!(antenna_index(13, &g), Err(Error::Index { .. })));
    }

    #[test]
    fn invalid_geometry_rejected() {
        assert!(UpaGeometry::new(0, 3, 0.5, 0.5).is_err());
        assert!(UpaGeometry::new(2, 3, 0.0, 0.5).is_err());
    }

    #[test]
    fn steering_vector_examples() {
        let g = geom(2, 2);
        let ones = steering_vector(ElectricalAngles { psi_x: 0.0, psi_y: 0.0 }, &g);
        assert!(ones.iter().all(|z| (z - c(1.0, 0.0)).norm() == 0.0));

        let v = steering_vector(ElectricalAngles { psi_x: PI, psi_y: 0.0 }, &g);
        let expect = [1.0, -1.0, 1.0, -1.0];
        for (z, e) in v.iter().zip(expect) {
            assert!((z - c(e, 0.0)).norm() < 1e-15);
        }

        let v = steering_vector(ElectricalAngles { psi_x: 0.7, psi_y: -2.1 }, &geom(3, 5));
        assert_eq!(v[0], c(1.0, 0.0));
        assert!(v.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn broadside_phi_derivative_vanishes() {
        let b = steering_bundle(0.0, 0.9, &geom(3, 3)).unwrap();
        assert_eq!(max_abs(&b.d_phi), 0.0);
    }

    #[test]
    fn psi_derivative_at_origin() {
        let g = geom(3, 2);
        let n = g.num_elements();
        let b = steering_bundle(0.0, 0.0, &g).unwrap();
        let dx = real_diag(&x_offsets(&g)) * J;
        let ones = CMat::from_element(n, n, c(1.0, 0.0));
        let expect = &dx * &ones + &ones * &dx;
        assert!(max_abs(&(b.d_psi_x - expect)) < 1e-15);
    }

    #[test]
    fn product_rule_matches_diagonal_form() {
        let g = geom(4, 3);
        let b = steering_bundle(0.4, 2.2, &g).unwrap();
        for (offs, d_a) in [(x_offsets(&g), &b.d_psi_x), (y_offsets(&g), &b.d_psi_y)] {
            let d = real_diag(&offs) * J;
            // purely imaginary diagonal
            assert!(d.iter().all(|z| z.re == 0.0));
            let product_rule = (&d * &b.b) * b.a.transpose() + &b.b * (&d * &b.a).transpose();
            let sandwich = &d * &b.big_a + &b.big_a * &d;
            assert!(frob(&(&product_rule - &sandwich)) < 1e-13 * frob(&sandwich));
            assert!(frob(&(d_a - &sandwich)) < 1e-13 * frob(&sandwich));
        }
    }

    #[test]
    fn round_trip_matrix_is_rank_one() {
        let b = steering_bundle(0.8, 4.0, &geom(4, 4)).unwrap();
        let s = b.big_a.clone().singular_values();
        let mut s: Vec<f64> = s.iter().copied().collect();
        s.sort_by(|x, y| y.total_cmp(x));
        assert!(s[1] < 1e-12 * s[0]);
        assert_eq!(b.a, b.b);
    }
}
