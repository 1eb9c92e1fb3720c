//! Transmit beamformer design: digital covariance SDP, MiLAC design by
//! penalty dual decomposition, matched-filter baseline and beampatterns.

mod beam;
mod covariance;
mod milac;
mod pdd;

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fim::{crb, fim, CrbReport};
use crate::linalg::{c, eigh_desc, frob, real_diag, trace_re, CMat};
use crate::scene::TargetScene;

pub use beam::{angle_grid, beampattern, matched_filter_design, top_peaks};
pub use covariance::{optimal_covariance, CovarianceSolution, COVARIANCE_SDP_TOL};
pub use milac::{covariance_to_milac, milac_feasible, procrustes_update, FeasibilityReport};
pub use pdd::{milac_projection, pdd_design, PddOutcome, PddParams, PddRecord, PddState, PROJECTION_SDP_TOL};
#[cfg(test)]
pub(crate) use pdd::generic_unitary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Milac,
    Digital,
    MatchedFilter,
}

#[derive(Debug, Clone)]
pub struct BeamformerDesign {
    pub w: CMat,
    pub p: Vec<f64>,
    pub r_x: CMat,
    pub architecture: Architecture,
    pub p_t: f64,
    /// Weighted CRB of `r_x` for CRB-driven designs.
    pub objective: Option<f64>,
}

impl BeamformerDesign {
    pub(crate) fn from_parts(w: CMat, p: Vec<f64>, p_t: f64, architecture: Architecture) -> Self {
        let r = &w * w.adjoint();
        Self {
            r_x: (&r + r.adjoint()) * c(0.5, 0.0),
            w,
            p,
            architecture,
            p_t,
            objective: None,
        }
    }

    /// Checks the architecture-specific feasibility and `R_x = W Wᴴ`.
    pub fn check_invariants(&self) -> Result<()> {
        let rebuilt = &self.w * self.w.adjoint();
        let scale = frob(&self.r_x).max(f64::MIN_POSITIVE);
        if frob(&(rebuilt - &self.r_x)) > 1e-8 * scale {
            return Err(Error::Infeasible("R_x differs from W Wᴴ".into()));
        }
        match self.architecture {
            Architecture::Milac => {
                let rep = milac_feasible(&self.w, &self.p, self.p_t, 0.0)?;
                if rep.min_eig_margin < -1e-6 * self.p_t || self.p.iter().sum::<f64>() > self.p_t * (1.0 + 1e-8) {
                    return Err(Error::Infeasible(format!("MiLAC constraints violated: {rep:?}")));
                }
            }
            Architecture::Digital | Architecture::MatchedFilter => {
                if frob(&self.w).powi(2) > self.p_t * (1.0 + 1e-8) {
                    return Err(Error::Infeasible("transmit power exceeds the budget".into()));
                }
            }
        }
        Ok(())
    }

    /// Per-parameter CRB of this design.
    pub fn crb(&self, scene: &TargetScene, weights: &[f64], snapshots: usize) -> Result<CrbReport> {
        crb(&fim(scene, &self.r_x, snapshots, scene.noise_power)?, weights)
    }

    pub fn to_json(&self, trace: Option<&[PddRecord]>) -> serde_json::Value {
        json!({
            "architecture": self.architecture,
            "p_t": self.p_t,
            "num_antennas": self.w.nrows(),
            "num_chains": self.w.ncols(),
            "w": complex_rows(&self.w),
            "p": self.p,
            "r_x": complex_rows(&self.r_x),
            "objective": self.objective,
            "trace": trace,
        })
    }

    pub fn write_json(&self, path: &Path, trace: Option<&[PddRecord]>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_json(trace))?)?;
        Ok(())
    }
}

/// Row-major `[[re, im], …]` rows.
pub fn complex_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect())
        .collect()
}

/// Inverse of [`complex_rows`].
pub fn complex_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::arg("ragged complex matrix"));
    }
    Ok(CMat::from_fn(nr, nc, |r, k| c(rows[r][k][0], rows[r][k][1])))
}

/// Digital benchmark: optimal covariance from the SDP, factored as
/// `W = U Λ^{1/2}`.
pub fn design_digital(scene: &TargetScene, p_t: f64, weights: &[f64], snapshots: usize) -> Result<BeamformerDesign> {
    let cov = optimal_covariance(scene, p_t, weights, snapshots)?;
    let (vals, vecs) = eigh_desc(&cov.r_x);
    let mut p: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = p.iter().sum();
    if total > p_t {
        p.iter_mut().for_each(|v| *v *= p_t / total);
    }
    let roots: Vec<f64> = p.iter().map(|v| v.sqrt()).collect();
    let w = vecs * real_diag(&roots);
    let mut design = BeamformerDesign::from_parts(w, p, p_t, Architecture::Digital);
    design.objective = Some(if weights.iter().any(|&v| v > 0.0) {
        design.crb(scene, weights, snapshots)?.weighted_total
    } else {
        0.0
    });
    debug_assert!(trace_re(&design.r_x) <= p_t * (1.0 + 1e-8));
    Ok(design)
}

/// Beampattern CSV with columns `theta_deg, phi_deg, power`.
pub fn write_beampattern_csv(path: &Path, grid: &[(f64, f64)], values: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["theta_deg", "phi_deg", "power"])?;
    for (&(t, p), v) in grid.iter().zip(values) {
        wtr.write_record([format!("{:.6}", t.to_degrees()), format!("{:.6}", p.to_degrees()), format!("{v:.12e}")])?;
    }
    wtr.flush()?;
    Ok(())
}
