//! Lossless reciprocal network constraints on the transmit beamformer:
//! constructive covariance factorization, feasibility checks and the
//! unitary Procrustes step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eigh_desc, frob, is_hermitian, min_eig_hermitian, psd_sqrt, real_diag, trace_re, CMat};

/// Relative tolerance on `tr(R_x) ≤ P_T` and on PSD drift of `R_x`.
const POWER_TOL: f64 = 1e-10;

/// `W = U Λ^{1/2}` and `p = diag Λ` from `R_x = U Λ Uᴴ`, so that `W Wᴴ = R_x`
/// and `Wᴴ W = diag(p)`. Eigenvalues come out in descending order.
pub fn covariance_to_milac(r_x: &CMat, p_t: f64) -> Result<(CMat, Vec<f64>)> {
    if !r_x.is_square() {
        return Err(Error::arg("covariance must be square"));
    }
    let scale = frob(r_x).max(f64::MIN_POSITIVE);
    if !is_hermitian(r_x, 1e-9 * scale) {
        return Err(Error::arg("covariance is not Hermitian"));
    }
    let (vals, vecs) = eigh_desc(r_x);
    if vals.last().is_some_and(|&l| l < -1e-9 * scale) {
        return Err(Error::arg("covariance is not positive semidefinite"));
    }
    let power = trace_re(r_x);
    if power > p_t * (1.0 + POWER_TOL) {
        return Err(Error::Infeasible(format!("tr(R_x) = {power:.6e} exceeds P_T = {p_t:.6e}")));
    }
    let p: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
    let roots: Vec<f64> = p.iter().map(|l| l.sqrt()).collect();
    Ok((&vecs * real_diag(&roots), p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `λ_min(diag(p) − WᴴW)`.
    pub min_eig_margin: f64,
    /// `P_T − 𝟙ᵀp`.
    pub power_margin: f64,
    /// `‖W diag(p)^{-1/2}‖₂` over columns with `p_i > 0`.
    pub f_norm: f64,
}

pub fn milac_feasible(w: &CMat, p: &[f64], p_t: f64, tol: f64) -> Result<FeasibilityReport> {
    if w.ncols() != p.len() {
        return Err(Error::arg(format!("W has {} columns but p has {} entries", w.ncols(), p.len())));
    }
    let gram = w.adjoint() * w;
    let min_eig_margin = min_eig_hermitian(&(real_diag(p) - gram));
    let power_margin = p_t - p.iter().sum::<f64>();
    let positive: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let f_norm = if positive.is_empty() {
        0.0
    } else {
        let f = CMat::from_fn(w.nrows(), positive.len(), |r, k| w[(r, positive[k])] / p[positive[k]].sqrt());
        f.singular_values().max()
    };
    Ok(FeasibilityReport {
        feasible: min_eig_margin >= -tol && power_margin >= -tol && p.iter().all(|&v| v >= -tol),
        min_eig_margin,
        power_margin,
        f_norm,
    })
}

/// `X = R_x^{1/2} U Vᴴ` where `R_x^{1/2} Δ = U Σ Vᴴ`: the point of
/// `{X : X Xᴴ = R_x}` closest to `Δ`.
pub fn procrustes_update(r_x: &CMat, delta: &CMat) -> Result<CMat> {
    if !r_x.is_square() || delta.shape() != r_x.shape() {
        return Err(Error::arg(format!(
            "Procrustes update needs square matching shapes, got {:?} and {:?}",
            r_x.shape(),
            delta.shape()
        )));
    }
    let root = psd_sqrt(r_x);
    let svd = (&root * delta).svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    Ok(root * u * v_t)
}

/// Shrinks `(W, p)` onto the feasible set when solver round-off leaves it
/// marginally outside: columns with `p_i ≤ 0` are cleared, `W` is scaled so
/// that `‖W diag(p)^{-1/2}‖₂ ≤ 1`, and `p` (with `W`) is rescaled to the budget.
pub(crate) fn project_feasible(w: &mut CMat, p: &mut [f64], p_t: f64) {
    let top = p.iter().copied().fold(0.0, f64::max);
    for (i, pi) in p.iter_mut().enumerate() {
        if *pi <= 1e-14 * top {
            *pi = 0.0;
            w.column_mut(i).fill(c(0.0, 0.0));
        }
    }
    let total: f64 = p.iter().sum();
    if total > p_t {
        let s = p_t / total;
        p.iter_mut().for_each(|v| *v *= s);
        *w *= c(s.sqrt(), 0.0);
    }
    if let Ok(rep) = milac_feasible(w, p, p_t, 0.0) {
        if rep.f_norm > 1.0 {
            *w *= c(1.0 / rep.f_norm, 0.0);
        }
    }
}
