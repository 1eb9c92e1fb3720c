//! Penalty dual decomposition for the MiLAC-constrained design.
//!
//! Inner loop: covariance SDP, projection of `X − ρΓ` onto the MiLAC set
//! (an SDP in `(W, p)`), and the Procrustes update of `X`. Outer loop:
//! dual ascent on `Γ` when `‖W − X‖_∞ < ε`, otherwise `ρ ← cρ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fim::{crb, fim};
use crate::linalg::{c, column_basis, frob, max_abs, real_diag, CMat};
use crate::scene::TargetScene;
use crate::sdp::{self, hermitian_embedding, ComplexLmi, LinearIneq, SdpProblem};

use super::covariance::{check_weights, optimal_covariance};
use super::milac::{covariance_to_milac, procrustes_update, project_feasible};
use super::{Architecture, BeamformerDesign};

/// Relative tolerance for the `(W, p)` projection SDP.
pub const PROJECTION_SDP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PddParams {
    pub rho0: f64,
    /// Penalty decay factor in `(0, 1)`.
    pub c: f64,
    pub eps: f64,
    pub inner_max: usize,
    pub outer_max: usize,
    /// Relative objective change that ends an inner loop.
    pub inner_tol: f64,
    /// Seed of the unitary basis used for the isotropic starting point.
    pub init_seed: u64,
}

impl Default for PddParams {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            c: 0.5,
            eps: 1e-3,
            inner_max: 20,
            outer_max: 60,
            inner_tol: 1e-5,
            init_seed: 0,
        }
    }
}

impl PddParams {
    fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0) || !(self.c > 0.0 && self.c < 1.0) || !(self.eps > 0.0) || !(self.inner_tol > 0.0) {
            return Err(Error::arg(format!("invalid PDD parameters {self:?}")));
        }
        if self.inner_max == 0 || self.outer_max == 0 {
            return Err(Error::arg("PDD iteration caps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PddState {
    pub w: CMat,
    pub p: Vec<f64>,
    pub x: CMat,
    pub gamma: CMat,
    pub rho: f64,
    pub r_x: CMat,
    /// Per-parameter CRB at the covariance iterate.
    pub t: Vec<f64>,
    pub inner_iter: usize,
    pub outer_iter: usize,
    /// `‖W − X‖_∞` (largest entry magnitude).
    pub residual: f64,
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PddRecord {
    pub outer: usize,
    pub inner: usize,
    pub rho: f64,
    pub residual: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct PddOutcome {
    pub design: BeamformerDesign,
    pub state: PddState,
    pub trace: Vec<PddRecord>,
    pub converged: bool,
    /// Weighted CRB of the covariance subproblem optimum.
    pub covariance_objective: f64,
}

impl PddOutcome {
    /// Objective values of each inner loop, split at outer iterations.
    pub fn inner_runs(&self) -> Vec<Vec<f64>> {
        let mut runs: Vec<Vec<f64>> = Vec::new();
        let mut current = usize::MAX;
        for rec in &self.trace {
            if rec.outer != current {
                runs.push(Vec::new());
                current = rec.outer;
            }
            runs.last_mut().expect("run started").push(rec.objective);
        }
        runs
    }
}

/// Haar-distributed unitary from a fixed seed.
pub(crate) fn generic_unitary(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = CMat::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases: Vec<num_complex::Complex64> = (0..n)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) }
        })
        .collect();
    CMat::from_fn(n, n, |row, k| q[(row, k)] * phases[k])
}

fn max_entry(m: &CMat) -> f64 {
    max_abs(m)
}

/// `min ‖W − D‖²` s.t. `[[I, W], [Wᴴ, diag p]] ⪰ 0`, `𝟙ᵀp ≤ P_T`.
///
/// The minimizer lies in the column space of `D` (projecting any feasible
/// `W` onto it keeps feasibility and does not increase the distance), so the
/// SDP is posed over `Qᴴ W` with `Q` an orthonormal basis of that space.
pub fn milac_projection(d: &CMat, p_t: f64) -> Result<(CMat, Vec<f64>)> {
    let (n, m) = d.shape();
    let gram = d.adjoint() * d;
    let diag: Vec<f64> = (0..m).map(|i| gram[(i, i)].re).collect();
    let top = diag.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok((CMat::zeros(n, m), vec![0.0; m]));
    }
    let off = max_abs(&(&gram - real_diag(&diag)));
    if off <= 1e-13 * top && diag.iter().sum::<f64>() <= p_t * (1.0 + 1e-12) {
        return Ok((d.clone(), diag));
    }

    let q = column_basis(d, 1e-12);
    let r = q.ncols();
    let e = q.adjoint() * d / c(p_t.sqrt(), 0.0);
    let w_var = |a: usize, col: usize| 2 * (a * m + col);
    let p_var = |col: usize| 2 * r * m + col;
    let mut prob = SdpProblem::new(2 * r * m + m);
    for a in 0..r {
        for col in 0..m {
            let v = w_var(a, col);
            prob.objective[v] = -2.0 * e[(a, col)].re;
            prob.objective[v + 1] = -2.0 * e[(a, col)].im;
            prob.quadratic.push((v, v, 2.0));
            prob.quadratic.push((v + 1, v + 1, 2.0));
        }
    }
    let mut lmi = ComplexLmi::new(r + m);
    for a in 0..r {
        lmi.add(None, a, a, c(1.0, 0.0));
        for col in 0..m {
            let v = w_var(a, col);
            lmi.add_hermitian(Some(v), a, r + col, c(1.0, 0.0));
            lmi.add_hermitian(Some(v + 1), a, r + col, c(0.0, 1.0));
        }
    }
    for col in 0..m {
        lmi.add(Some(p_var(col)), r + col, r + col, c(1.0, 0.0));
    }
    prob.lmi_blocks.push(hermitian_embedding(&lmi)?);
    prob.linear_ineqs.push(LinearIneq {
        coeffs: (0..m).map(|col| (p_var(col), 1.0)).collect(),
        rhs: 1.0,
    });
    let sol = sdp::solve(&prob, PROJECTION_SDP_TOL, 200)?.require_optimal()?;
    let w_hat = CMat::from_fn(r, m, |a, col| {
        let v = w_var(a, col);
        c(sol.x[v], sol.x[v + 1])
    });
    let w = q * w_hat * c(p_t.sqrt(), 0.0);
    let p = (0..m).map(|col| sol.x[p_var(col)].max(0.0) * p_t).collect();
    Ok((w, p))
}

pub fn pdd_design(
    scene: &TargetScene,
    p_t: f64,
    weights: &[f64],
    snapshots: usize,
    params: &PddParams,
) -> Result<PddOutcome> {
    params.validate()?;
    check_weights(scene, weights)?;
    let n = scene.geom.num_elements();

    let isotropic = CMat::identity(n, n) * c(p_t / n as f64, 0.0);
    let (w0, mut p) = covariance_to_milac(&isotropic, p_t)?;
    // Any unitary basis factors the isotropic covariance. A generic one avoids
    // symmetric starting points that the alternating updates cannot leave.
    let mut w = w0 * generic_unitary(n, params.init_seed);
    let mut x = w.clone();
    let mut gamma = CMat::zeros(n, n);
    let mut rho = params.rho0;

    // The covariance subproblem does not involve W, X or Γ, so its (unique,
    // deterministic) solution is computed once and reused every inner step.
    let cov = optimal_covariance(scene, p_t, weights, snapshots)?;
    let r_x = cov.r_x.clone();
    let t = if weights.iter().any(|&v| v > 0.0) {
        crb(&fim(scene, &r_x, snapshots, scene.noise_power)?, weights)?.per_parameter
    } else {
        vec![0.0; weights.len()]
    };
    let sum_mu_t = cov.objective;
    let objective = |w: &CMat, x: &CMat, gamma: &CMat, rho: f64| {
        sum_mu_t + frob(&(w - x + gamma * c(rho, 0.0))).powi(2) / (2.0 * rho)
    };

    let mut trace = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut outer_iter = 0;
    let mut inner_iter = 0;
    let mut residual = max_entry(&(&w - &x));
    while outer_iter < params.outer_max {
        outer_iter += 1;
        let mut inner_converged = false;
        let mut prev: Option<f64> = None;
        inner_iter = 0;
        while inner_iter < params.inner_max {
            inner_iter += 1;
            let target = &x - &gamma * c(rho, 0.0);
            let (w_new, p_new) = milac_projection(&target, p_t).map_err(|e| Error::PddAborted {
                outer: outer_iter,
                inner: inner_iter,
                trace: trace.clone(),
                source: Box::new(e),
            })?;
            // The incumbent is feasible for the same projection; keep whichever
            // is closer so solver round-off cannot undo descent.
            if frob(&(&w_new - &target)) <= frob(&(&w - &target)) {
                w = w_new;
                p = p_new;
            }
            x = procrustes_update(&r_x, &(&gamma * c(rho, 0.0) + &w))?;
            let f = objective(&w, &x, &gamma, rho);
            residual = max_entry(&(&w - &x));
            history.push(f);
            trace.push(PddRecord {
                outer: outer_iter,
                inner: inner_iter,
                rho,
                residual,
                objective: f,
            });
            log::debug!("pdd outer {outer_iter} inner {inner_iter}: f = {f:.9e}, residual = {residual:.3e}, rho = {rho:.3e}");
            if let Some(fp) = prev {
                if (fp - f).abs() <= params.inner_tol * fp.abs().max(f64::MIN_POSITIVE) {
                    inner_converged = true;
                    break;
                }
            }
            prev = Some(f);
        }
        if residual < params.eps {
            gamma += (&w - &x) / c(rho, 0.0);
        } else {
            rho *= params.c;
        }
        if residual < params.eps && inner_converged {
            converged = true;
            break;
        }
    }

    let mut w_final = w.clone();
    let mut p_final = p.clone();
    project_feasible(&mut w_final, &mut p_final, p_t);
    let mut design = BeamformerDesign::from_parts(w_final, p_final, p_t, Architecture::Milac);
    design.objective = Some(if weights.iter().any(|&v| v > 0.0) {
        crb(&fim(scene, &design.r_x, snapshots, scene.noise_power)?, weights)?.weighted_total
    } else {
        0.0
    });
    Ok(PddOutcome {
        design,
        state: PddState {
            w,
            p,
            x,
            gamma,
            rho,
            r_x,
            t,
            inner_iter,
            outer_iter,
            residual,
            objective_history: history,
        },
        trace,
        converged,
        covariance_objective: cov.objective,
    })
}
