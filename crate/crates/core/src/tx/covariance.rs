//! Weighted-CRB minimization over transmit covariances:
//! `min Σ μ_k t_k` s.t. `[[J(R_x), e_k], [e_kᵀ, t_k]] ⪰ 0`, `R_x ⪰ 0`, `tr R_x ≤ P_T`.
//!
//! `R_x` is searched over `P_T · Q Φ Qᴴ` with `Q` spanning the only
//! directions the FIM can see, which is exact and keeps the LMIs small.

use crate::error::{Error, Result};
use crate::fim::ReducedFim;
use crate::linalg::{c, CMat};
use crate::scene::TargetScene;
use crate::sdp::{self, hermitian_embedding, ComplexLmi, HermitianParam, LinearIneq, LmiBlock, SdpProblem, SdpSolution};

/// Relative tolerance for the covariance SDP.
pub const COVARIANCE_SDP_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CovarianceSolution {
    pub r_x: CMat,
    /// Weighted objective `Σ μ_k t_k` reported by the SDP (unscaled).
    pub objective: f64,
    pub sdp: Option<SdpSolution>,
}

pub(crate) fn check_weights(scene: &TargetScene, weights: &[f64]) -> Result<()> {
    let p = 4 * scene.num_targets();
    if weights.len() != p {
        return Err(Error::arg(format!("expected {p} weights, got {}", weights.len())));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::arg("weights must be finite and nonnegative"));
    }
    Ok(())
}

pub fn optimal_covariance(scene: &TargetScene, p_t: f64, weights: &[f64], snapshots: usize) -> Result<CovarianceSolution> {
    check_weights(scene, weights)?;
    if !(p_t > 0.0) {
        return Err(Error::arg(format!("transmit power must be positive, got {p_t}")));
    }
    let n = scene.geom.num_elements();
    let isotropic = CMat::identity(n, n) * c(p_t / n as f64, 0.0);
    if weights.iter().all(|&w| w == 0.0) {
        return Ok(CovarianceSolution {
            r_x: isotropic,
            objective: 0.0,
            sdp: None,
        });
    }
    let red = ReducedFim::new(scene, snapshots, scene.noise_power)?;
    for &i in &red.uninformative {
        if weights[i] > 0.0 {
            return Err(Error::Identifiability {
                scene: scene.describe(),
                reason: format!("parameter {i} carries no information but has weight {}", weights[i]),
            });
        }
    }
    let keep: Vec<usize> = (0..red.num_params()).filter(|i| !red.uninformative.contains(i)).collect();
    let r = red.rank();
    let phi = HermitianParam::new(0, r);

    // Diagonal scaling from the isotropic design keeps J̃ near unit size.
    let phi_iso = CMat::identity(r, r) * c(1.0 / n as f64, 0.0);
    let j_iso = red.fim_of(&phi_iso) * p_t;
    let d: Vec<f64> = keep.iter().map(|&i| 1.0 / j_iso[(i, i)].sqrt()).collect();
    let active: Vec<usize> = (0..keep.len()).filter(|&a| weights[keep[a]] > 0.0).collect();
    let raw_cost: Vec<f64> = active.iter().map(|&a| weights[keep[a]] * d[a] * d[a]).collect();
    let cost_scale: f64 = raw_cost.iter().sum();

    let t_offset = phi.end();
    let mut prob = SdpProblem::new(t_offset + active.len());
    for (q, &cst) in raw_cost.iter().enumerate() {
        prob.objective[t_offset + q] = cst / cost_scale;
    }

    // Coefficients of each scaled FIM entry with respect to the Φ variables.
    let basis = phi.basis();
    let pk = keep.len();
    let mut jcoef: Vec<Vec<(usize, f64)>> = Vec::with_capacity(pk * (pk + 1) / 2);
    for a in 0..pk {
        for b in a..pk {
            let g = red.gram(keep[a], keep[b]);
            let s = red.scale() * p_t * d[a] * d[b];
            let mut by_var = vec![0.0; phi.num_vars()];
            for &(var, row, col, z) in &basis {
                by_var[var - phi.offset] += s * (z * g[(col, row)]).re;
            }
            jcoef.push(by_var.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect());
        }
    }
    for (q, &a_k) in active.iter().enumerate() {
        let mut blk = LmiBlock::new(pk + 1);
        let mut idx = 0;
        for a in 0..pk {
            for b in a..pk {
                for &(var, v) in &jcoef[idx] {
                    blk.add_coefficient(var, a, b, v);
                }
                idx += 1;
            }
        }
        blk.add_constant(a_k, pk, 1.0);
        blk.add_coefficient(t_offset + q, pk, pk, 1.0);
        prob.lmi_blocks.push(blk);
    }
    let mut psd = ComplexLmi::new(r);
    phi.add_to(&mut psd, 0, 0, 1.0);
    prob.lmi_blocks.push(hermitian_embedding(&psd)?);
    prob.linear_ineqs.push(LinearIneq {
        coeffs: (0..r).map(|i| (phi.diag(i), 1.0)).collect(),
        rhs: 1.0,
    });

    let sol = sdp::solve(&prob, COVARIANCE_SDP_TOL, 200)?.require_optimal()?;
    let phi_opt = phi.unpack(&sol.x) * c(p_t, 0.0);
    let r_x = red.lift(&phi_opt);
    Ok(CovarianceSolution {
        r_x: (&r_x + r_x.adjoint()) * c(0.5, 0.0),
        objective: sol.primal_objective * cost_scale,
        sdp: Some(sol),
    })
}
