//! Fisher information for joint 2D-angle and reflection-coefficient
//! estimation, and the Cramér–Rao bounds derived from it.
//!
//! Parameters are ordered `[ϑ₁, φ₁, …, ϑ_K, φ_K, Re α₁, Im α₁, …, Re α_K, Im α_K]`.
//! Entries follow `J_ij = (2L/σ²) Re tr(∂Aᴴ/∂ξ_i ∂A/∂ξ_j R_x)`, which uses the
//! exact code-matrix orthogonality `S Sᴴ = L I`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::array::{steering_bundle, x_offsets, y_offsets, SteeringBundle};
use crate::error::{Error, Result};
use crate::linalg::{c, column_basis, frob, is_hermitian, min_eig_hermitian, re_inner, CMat, J};
use crate::scene::TargetScene;

/// Largest admissible condition number of the FIM.
pub const MAX_CONDITION: f64 = 1e12;

/// Relative tolerance for Hermitian / PSD checks on a supplied covariance.
const COVARIANCE_TOL: f64 = 1e-9;

/// Derivatives whose Frobenius norm falls below this fraction of the largest
/// one carry no information about their parameter.
const ZERO_INFO_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    Elevation,
    Azimuth,
    AlphaRe,
    AlphaIm,
}

/// Layout of the 4K-dimensional parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterLayout {
    pub num_targets: usize,
}

impl ParameterLayout {
    pub fn len(&self) -> usize {
        4 * self.num_targets
    }

    pub fn is_empty(&self) -> bool {
        self.num_targets == 0
    }

    /// (target index, kind) of parameter `i`.
    pub fn describe(&self, i: usize) -> (usize, ParamKind) {
        let k2 = 2 * self.num_targets;
        if i < k2 {
            (i / 2, if i % 2 == 0 { ParamKind::Elevation } else { ParamKind::Azimuth })
        } else {
            let j = i - k2;
            (j / 2, if j % 2 == 0 { ParamKind::AlphaRe } else { ParamKind::AlphaIm })
        }
    }

    pub fn is_angle(&self, i: usize) -> bool {
        i < 2 * self.num_targets
    }

    /// Unit weights on every parameter.
    pub fn uniform_weights(&self) -> Vec<f64> {
        vec![1.0; self.len()]
    }

    /// Unit weights on the angles only.
    pub fn angle_weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| if self.is_angle(i) { 1.0 } else { 0.0 }).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FimBundle {
    pub j: DMatrix<f64>,
    pub ordering: ParameterLayout,
    pub l: usize,
    pub sigma2: f64,
    /// Parameters whose derivative vanishes identically (no information for any R_x).
    pub uninformative: Vec<usize>,
    pub scene_label: String,
}

impl FimBundle {
    pub fn theta_theta(&self) -> DMatrix<f64> {
        let k2 = 2 * self.ordering.num_targets;
        self.j.view((0, 0), (k2, k2)).into_owned()
    }

    pub fn theta_alpha(&self) -> DMatrix<f64> {
        let k2 = 2 * self.ordering.num_targets;
        self.j.view((0, k2), (k2, k2)).into_owned()
    }

    pub fn alpha_alpha(&self) -> DMatrix<f64> {
        let k2 = 2 * self.ordering.num_targets;
        self.j.view((k2, k2), (k2, k2)).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    /// Diagonal of `J⁻¹`; parameters without information report `+∞`.
    pub per_parameter: Vec<f64>,
    pub weighted_total: f64,
    pub angle_block_trace: f64,
}

/// `A = ½ Σ_k α_k A_k`.
pub fn composite_steering(scene: &TargetScene) -> Result<CMat> {
    let n = scene.geom.num_elements();
    let mut out = CMat::zeros(n, n);
    for t in &scene.targets {
        let b = steering_bundle(t.theta, t.phi, &scene.geom)?;
        out += b.big_a * (t.alpha * 0.5);
    }
    Ok(out)
}

fn bundles(scene: &TargetScene) -> Result<Vec<SteeringBundle>> {
    scene
        .targets
        .iter()
        .map(|t| steering_bundle(t.theta, t.phi, &scene.geom))
        .collect()
}

/// `∂A/∂ξ_i` for every parameter in layout order.
pub fn derivative_matrices(scene: &TargetScene) -> Result<Vec<CMat>> {
    let bs = bundles(scene)?;
    let k = bs.len();
    let mut out = Vec::with_capacity(4 * k);
    for (t, b) in scene.targets.iter().zip(&bs) {
        let half = t.alpha * 0.5;
        out.push(&b.d_theta * half);
        out.push(&b.d_phi * half);
    }
    for b in &bs {
        out.push(&b.big_a * c(0.5, 0.0));
        out.push(&b.big_a * (J * 0.5));
    }
    Ok(out)
}

fn uninformative(derivs: &[CMat]) -> Vec<usize> {
    let norms: Vec<f64> = derivs.iter().map(frob).collect();
    let top = norms.iter().copied().fold(0.0, f64::max);
    norms
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= ZERO_INFO_TOL * top)
        .map(|(i, _)| i)
        .collect()
}

/// FIM for an arbitrary Hermitian `R_x` (no PSD check); linear in `R_x`.
pub(crate) fn fim_linear(derivs: &[CMat], r_x: &CMat, l: usize, sigma2: f64) -> DMatrix<f64> {
    let p = derivs.len();
    let scale = 2.0 * l as f64 / sigma2;
    let products: Vec<CMat> = derivs.iter().map(|d| d * r_x).collect();
    let mut j = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let v = scale * re_inner(&derivs[a], &products[b]);
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
    }
    j
}

pub fn fim(scene: &TargetScene, r_x: &CMat, l: usize, sigma2: f64) -> Result<FimBundle> {
    let n = scene.geom.num_elements();
    if r_x.shape() != (n, n) {
        return Err(Error::arg(format!("covariance is {:?}, expected {n}x{n}", r_x.shape())));
    }
    if l == 0 || !(sigma2 > 0.0) {
        return Err(Error::arg("snapshot count and noise power must be positive"));
    }
    let scale = frob(r_x).max(f64::MIN_POSITIVE);
    if !is_hermitian(r_x, COVARIANCE_TOL * scale) {
        return Err(Error::arg("transmit covariance is not Hermitian"));
    }
    if min_eig_hermitian(r_x) < -COVARIANCE_TOL * scale {
        return Err(Error::arg("transmit covariance is not positive semidefinite"));
    }
    let derivs = derivative_matrices(scene)?;
    Ok(FimBundle {
        j: fim_linear(&derivs, r_x, l, sigma2),
        ordering: ParameterLayout {
            num_targets: scene.num_targets(),
        },
        l,
        sigma2,
        uninformative: uninformative(&derivs),
        scene_label: scene.describe(),
    })
}

pub fn crb(bundle: &FimBundle, weights: &[f64]) -> Result<CrbReport> {
    let p = bundle.ordering.len();
    if weights.len() != p {
        return Err(Error::arg(format!("expected {p} weights, got {}", weights.len())));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::arg("weights must be nonnegative"));
    }
    let identifiability = |reason: String| Error::Identifiability {
        scene: bundle.scene_label.clone(),
        reason,
    };
    for &i in &bundle.uninformative {
        if weights[i] > 0.0 {
            return Err(identifiability(format!(
                "parameter {i} ({:?}) carries no information but has weight {}",
                bundle.ordering.describe(i).1,
                weights[i]
            )));
        }
    }
    let keep: Vec<usize> = (0..p).filter(|i| !bundle.uninformative.contains(i)).collect();
    let sub = DMatrix::from_fn(keep.len(), keep.len(), |a, b| bundle.j[(keep[a], keep[b])]);
    let eig = SymmetricEigen::new(sub);
    let lmax = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lmin > 0.0) || lmax / lmin > MAX_CONDITION {
        return Err(identifiability(format!(
            "FIM eigenvalues span [{lmin:.3e}, {lmax:.3e}] (condition limit {MAX_CONDITION:.0e})"
        )));
    }
    let mut per_parameter = vec![f64::INFINITY; p];
    for (a, &i) in keep.iter().enumerate() {
        let v: f64 = (0..keep.len())
            .map(|m| eig.eigenvectors[(a, m)].powi(2) / eig.eigenvalues[m])
            .sum();
        per_parameter[i] = v;
    }
    let weighted_total = weights
        .iter()
        .zip(&per_parameter)
        .filter(|(&w, _)| w > 0.0)
        .map(|(w, v)| w * v)
        .sum();
    let angle_block_trace = (0..2 * bundle.ordering.num_targets).map(|i| per_parameter[i]).sum();
    Ok(CrbReport {
        per_parameter,
        weighted_total,
        angle_block_trace,
    })
}

/// Orthonormal basis of span{conj(a_k), conj(D_x a_k), conj(D_y a_k)}.
///
/// The FIM only sees `R_x` through its compression onto this subspace, so
/// any covariance can be replaced by its projection without changing `J`
/// and without increasing the transmit power.
pub fn covariance_subspace(scene: &TargetScene) -> Result<CMat> {
    let g = &scene.geom;
    let n = g.num_elements();
    let xo = x_offsets(g);
    let yo = y_offsets(g);
    let mut cols = CMat::zeros(n, 3 * scene.num_targets());
    for (k, t) in scene.targets.iter().enumerate() {
        let b = steering_bundle(t.theta, t.phi, g)?;
        for i in 0..n {
            let a = b.a[i].conj();
            cols[(i, 3 * k)] = a;
            cols[(i, 3 * k + 1)] = a * xo[i];
            cols[(i, 3 * k + 2)] = a * yo[i];
        }
    }
    Ok(column_basis(&cols, 1e-10))
}

/// FIM restricted to covariances `R_x = Q Φ Qᴴ` with `Q` from
/// [`covariance_subspace`]: `J_ij(Φ) = (2L/σ²) Re tr(Φ G_ij)` with
/// `G_ij = (D_i Q)ᴴ (D_j Q)`.
#[derive(Debug, Clone)]
pub struct ReducedFim {
    pub basis: CMat,
    grams: Vec<CMat>,
    params: usize,
    scale: f64,
    pub uninformative: Vec<usize>,
}

impl ReducedFim {
    pub fn new(scene: &TargetScene, l: usize, sigma2: f64) -> Result<Self> {
        let basis = covariance_subspace(scene)?;
        let derivs = derivative_matrices(scene)?;
        let projected: Vec<CMat> = derivs.iter().map(|d| d * &basis).collect();
        let p = derivs.len();
        let mut grams = Vec::with_capacity(p * p);
        for a in 0..p {
            for b in 0..p {
                grams.push(projected[a].adjoint() * &projected[b]);
            }
        }
        Ok(Self {
            basis,
            grams,
            params: p,
            scale: 2.0 * l as f64 / sigma2,
            uninformative: uninformative(&derivs),
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.params
    }

    pub fn gram(&self, a: usize, b: usize) -> &CMat {
        &self.grams[a * self.params + b]
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn fim_of(&self, phi: &CMat) -> DMatrix<f64> {
        let p = self.params;
        DMatrix::from_fn(p, p, |a, b| {
            // Re tr(Φ G) = Re Σ Φᵀ ∘ G = Re ⟨conj(Φᵀ), G⟩ = Re ⟨Φ̄ᵀ, G⟩
            let g = self.gram(a, b);
            let mut acc = 0.0;
            for r in 0..phi.nrows() {
                for s in 0..phi.ncols() {
                    acc += (phi[(r, s)] * g[(s, r)]).re;
                }
            }
            self.scale * acc
        })
    }

    pub fn lift(&self, phi: &CMat) -> CMat {
        &self.basis * phi * self.basis.adjoint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::UpaGeometry;
    use crate::linalg::{max_abs, CMat};
    use crate::scene::{make_waveforms, snr_to_scene, Target};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = CMat::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        &a * a.adjoint()
    }

    fn three_targets(snr_db: f64) -> TargetScene {
        let deg = |t: f64, p: f64| (t.to_radians(), p.to_radians());
        snr_to_scene(
            snr_db,
            1.0,
            &[deg(30.0, 30.0), deg(45.0, 60.0), deg(60.0, 90.0)],
            UpaGeometry::half_wavelength(4, 4).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn composite_steering_examples() {
        let g = UpaGeometry::half_wavelength(2, 2).unwrap();
        let t = Target::new(0.4, 0.3, c(2.0, 0.0)).unwrap();
        let one = TargetScene::new(vec![t], 1.0, g).unwrap();
        let a1 = steering_bundle(0.4, 0.3, &g).unwrap().big_a;
        assert!(max_abs(&(composite_steering(&one).unwrap() - &a1)) < 1e-15);

        let t2 = Target::new(0.4, 0.3, c(1.0, 0.0)).unwrap();
        let twin = TargetScene::new(vec![t2, t2], 1.0, g).unwrap();
        assert!(max_abs(&(composite_steering(&twin).unwrap() - &a1)) < 1e-15);

        let scene = three_targets(10.0);
        let mut acc = CMat::zeros(16, 16);
        for t in &scene.targets {
            let b = steering_bundle(t.theta, t.phi, &scene.geom).unwrap();
            for r in 0..16 {
                for k in 0..16 {
                    acc[(r, k)] += 0.5 * t.alpha * b.a[r] * b.a[k];
                }
            }
        }
        assert!(max_abs(&(composite_steering(&scene).unwrap() - acc)) < 1e-12);
    }

    #[test]
    fn zero_covariance_gives_zero_fim() {
        let scene = three_targets(0.0);
        let b = fim(&scene, &CMat::zeros(16, 16), 10, 1.0).unwrap();
        assert!(b.j.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fim_is_linear_in_covariance() {
        let scene = three_targets(10.0);
        let r1 = random_psd(16, 1);
        let r2 = random_psd(16, 2);
        let j1 = fim(&scene, &r1, 32, 1.0).unwrap().j;
        let j2 = fim(&scene, &r2, 32, 1.0).unwrap().j;
        let j12 = fim(&scene, &(&r1 + &r2), 32, 1.0).unwrap().j;
        let err = (&j12 - (&j1 + &j2)).abs().max();
        assert!(err <= 1e-12 * j12.abs().max());
        let j3 = fim(&scene, &(&r1 * c(3.5, 0.0)), 32, 1.0).unwrap().j;
        assert!((&j3 - &j1 * 3.5).abs().max() <= 1e-12 * j3.abs().max());
    }

    #[test]
    fn fim_is_symmetric_psd() {
        let scene = three_targets(20.0);
        let b = fim(&scene, &random_psd(16, 3), 16, 1.0).unwrap();
        let norm = b.j.abs().max();
        assert!((&b.j - b.j.transpose()).abs().max() < 1e-10 * norm);
        let lmin = SymmetricEigen::new(b.j.clone()).eigenvalues.min();
        assert!(lmin >= -1e-9 * SymmetricEigen::new(b.j.clone()).eigenvalues.max());
        assert_eq!(b.theta_theta().shape(), (6, 6));
        assert_eq!(b.theta_alpha().shape(), (6, 6));
        assert_eq!(b.alpha_alpha().shape(), (6, 6));
    }

    #[test]
    fn rejects_non_hermitian_or_indefinite() {
        let scene = three_targets(0.0);
        let mut r = CMat::identity(16, 16);
        r[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(fim(&scene, &r, 4, 1.0), Err(Error::Argument(_))));
        let mut r = CMat::identity(16, 16);
        r[(3, 3)] = c(-1.0, 0.0);
        assert!(matches!(fim(&scene, &r, 4, 1.0), Err(Error::Argument(_))));
    }

    #[test]
    fn trace_form_matches_snapshot_sum() {
        // Explicit Σ_l ∂μ[l]ᴴ/∂ξ_i ∂μ[l]/∂ξ_j with a concrete orthogonal code matrix.
        for (k, seed) in [(1usize, 11u64), (2, 12)] {
            let g = UpaGeometry::half_wavelength(2, 2).unwrap();
            let angles: Vec<(f64, f64)> = [(0.5, 0.7), (1.1, 3.9)][..k].to_vec();
            let mut scene = snr_to_scene(6.0, 1.0, &angles, g, 0.7).unwrap();
            scene.targets[0].alpha = c(1.3, -0.4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = CMat::from_fn(4, 4, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let l = 6;
            let s = make_waveforms(4, l).unwrap();
            let derivs = derivative_matrices(&scene).unwrap();
            let dmu: Vec<CMat> = derivs.iter().map(|d| d * &w * &s).collect();
            let p = derivs.len();
            let mut oracle = DMatrix::<f64>::zeros(p, p);
            for a in 0..p {
                for b in 0..p {
                    let mut acc = c(0.0, 0.0);
                    for col in 0..l {
                        for row in 0..4 {
                            acc += dmu[a][(row, col)].conj() * dmu[b][(row, col)];
                        }
                    }
                    oracle[(a, b)] = 2.0 / 0.7 * acc.re;
                }
            }
            let r_x = &w * w.adjoint();
            let j = fim(&scene, &r_x, l, 0.7).unwrap().j;
            assert!((&j - &oracle).abs().max() < 1e-10 * oracle.abs().max().max(1.0));
        }
    }

    #[test]
    fn unitary_rotation_leaves_fim_unchanged() {
        let scene = three_targets(10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = CMat::from_fn(16, 16, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let z = CMat::from_fn(16, 16, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let q = z.qr().q();
        let wq = &w * &q;
        let j1 = fim(&scene, &(&w * w.adjoint()), 8, 1.0).unwrap().j;
        let j2 = fim(&scene, &(&wq * wq.adjoint()), 8, 1.0).unwrap().j;
        assert!((&j1 - &j2).abs().max() < 1e-10 * j1.abs().max());
    }

    #[test]
    fn crb_of_scaled_identity() {
        let b = FimBundle {
            j: DMatrix::identity(4, 4) * 2.5,
            ordering: ParameterLayout { num_targets: 1 },
            l: 1,
            sigma2: 1.0,
            uninformative: vec![],
            scene_label: "test".into(),
        };
        let r = crb(&b, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(r.per_parameter.iter().all(|&v| (v - 0.4).abs() < 1e-15));
        assert!((r.weighted_total - 1.6).abs() < 1e-14);
        assert!((r.angle_block_trace - 0.8).abs() < 1e-14);
    }

    #[test]
    fn crb_scales_inversely_with_snr() {
        let r_x = CMat::identity(16, 16) * c(1.0 / 16.0, 0.0);
        let w = ParameterLayout { num_targets: 3 }.uniform_weights();
        let lo = three_targets(10.0);
        let hi = three_targets(20.0);
        let c_lo = crb(&fim(&lo, &r_x, 16, 1.0).unwrap(), &w).unwrap();
        let c_hi = crb(&fim(&hi, &r_x, 16, 1.0).unwrap(), &w).unwrap();
        // Angle entries scale with 1/|α|²; RCS entries are SNR-independent.
        for i in 0..6 {
            let ratio = c_hi.per_parameter[i] / c_lo.per_parameter[i];
            assert!((ratio - 0.1).abs() < 1e-10 * 0.1, "ratio {ratio}");
        }
        // Doubling the power (covariance) halves every entry.
        let c2 = crb(&fim(&lo, &(&r_x * c(2.0, 0.0)), 16, 1.0).unwrap(), &w).unwrap();
        for (a, b) in c2.per_parameter.iter().zip(&c_lo.per_parameter) {
            assert!((a / b - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn coincident_targets_are_not_identifiable() {
        let g = UpaGeometry::half_wavelength(4, 4).unwrap();
        let scene = snr_to_scene(10.0, 1.0, &[(0.5, 0.5), (0.5, 0.5)], g, 1.0).unwrap();
        let b = fim(&scene, &CMat::identity(16, 16), 8, 1.0).unwrap();
        let err = crb(&b, &b.ordering.uniform_weights()).unwrap_err();
        assert!(matches!(err, Error::Identifiability { .. }));
        assert!(err.to_string().contains("4x4"));
    }

    #[test]
    fn broadside_azimuth_is_uninformative() {
        let g = UpaGeometry::half_wavelength(2, 2).unwrap();
        let scene = snr_to_scene(10.0, 1.0, &[(0.0, 0.0)], g, 1.0).unwrap();
        let b = fim(&scene, &CMat::identity(4, 4), 8, 1.0).unwrap();
        assert_eq!(b.uninformative, vec![1]);
        assert!(crb(&b, &[1.0, 1.0, 1.0, 1.0]).is_err());
        let r = crb(&b, &[1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(r.per_parameter[1].is_infinite());
        assert!(r.weighted_total.is_finite());
    }

    #[test]
    fn reduced_fim_matches_full() {
        let scene = three_targets(10.0);
        let red = ReducedFim::new(&scene, 20, 1.0).unwrap();
        assert!(red.rank() <= 9);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let r = red.rank();
        let a = CMat::from_fn(r, r, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let phi = &a * a.adjoint();
        let full = fim(&scene, &red.lift(&phi), 20, 1.0).unwrap().j;
        assert!((&full - red.fim_of(&phi)).abs().max() < 1e-10 * full.abs().max());

        // Projecting an arbitrary covariance onto the subspace leaves J unchanged.
        let r_x = random_psd(16, 9);
        let proj = &red.basis * red.basis.adjoint();
        let j_full = fim(&scene, &r_x, 20, 1.0).unwrap().j;
        let j_proj = fim(&scene, &(&proj * &r_x * &proj), 20, 1.0).unwrap().j;
        assert!((&j_full - j_proj).abs().max() < 1e-10 * j_full.abs().max());
    }
}
