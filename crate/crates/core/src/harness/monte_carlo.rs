use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rx::{analog_spectrum, angle_errors, digital_spectrum, estimate_doa, ml_estimate, DftPlan};
use crate::scene::{make_waveforms, synthesize_rx, TargetScene};
use crate::tx::BeamformerDesign;

/// Receiver processing applied to each trial's data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Estimator {
    /// Peak search on the spectrum produced by the reconfigured network.
    AnalogDft,
    /// Peak search on a digitally computed fractional DFT.
    DigitalDft,
    /// Single-target maximum likelihood with the given fine grid (degrees).
    Ml { resolution_deg: f64 },
}

impl Estimator {
    pub fn label(&self) -> &'static str {
        match self {
            Self::AnalogDft => "analog_dft",
            Self::DigitalDft => "digital_dft",
            Self::Ml { .. } => "ml",
        }
    }
}

/// Squared-error statistics of one estimator over a Monte-Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseStats {
    pub estimator: Estimator,
    /// Mean squared elevation error, rad².
    pub mse_theta: f64,
    /// Mean squared azimuth error (wrapped), rad².
    pub mse_phi: f64,
    /// Standard errors of the two means.
    pub se_theta: f64,
    pub se_phi: f64,
    pub trials: usize,
    /// Trials whose estimate could not be formed; excluded from the means.
    pub failed: usize,
    /// Per-trial `(theta, phi)` estimates in trial order, `None` on failure.
    pub estimates: Vec<Option<Vec<(f64, f64)>>>,
}

/// Seed of trial `t`.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed.wrapping_add(trial as u64)
}

type TrialResult = Vec<Option<Vec<(f64, f64)>>>;

/// Runs `trials` noisy observations of `scene` illuminated by `design` and
/// evaluates every estimator on the same data. Trials run in parallel with
/// seed `base_seed + t`; results are assembled in trial order.
pub fn mse_monte_carlo(
    scene: &TargetScene,
    design: &BeamformerDesign,
    plan: &DftPlan,
    estimators: &[Estimator],
    trials: usize,
    base_seed: u64,
) -> Result<Vec<MseStats>> {
    if trials == 0 {
        return Err(Error::arg("at least one trial is required"));
    }
    if estimators.is_empty() {
        return Err(Error::arg("no estimator requested"));
    }
    if scene.num_targets() > 1 && estimators.iter().any(|e| matches!(e, Estimator::Ml { .. })) {
        return Err(Error::arg("the ML baseline handles a single target only"));
    }
    if plan.geom() != &scene.geom {
        return Err(Error::arg("receiver plan and scene use different arrays"));
    }
    let s = make_waveforms(design.w.ncols(), plan.slots())?;
    let k = scene.num_targets();
    let geom = scene.geom;

    let per_trial: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let block = synthesize_rx(scene, &design.w, &s, trial_seed(base_seed, t))?;
            estimators
                .iter()
                .map(|est| {
                    let outcome = match est {
                        Estimator::AnalogDft => analog_spectrum(&block.r, plan)
                            .and_then(|sp| estimate_doa(&sp, k, &geom, plan.lx(), plan.ly())),
                        Estimator::DigitalDft => digital_spectrum(&block.r, &geom, plan.lx(), plan.ly())
                            .and_then(|sp| estimate_doa(&sp, k, &geom, plan.lx(), plan.ly())),
                        Estimator::Ml { resolution_deg } => {
                            return ml_estimate(&block.r, &s, &design.w, &geom, *resolution_deg)
                                .map(|a| Some(vec![a]));
                        }
                    };
                    match outcome {
                        Ok(list) => Ok(Some(list.iter().map(|e| (e.theta, e.phi)).collect())),
                        Err(Error::Estimation(_)) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<TrialResult>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let truth: Vec<(f64, f64)> = scene.targets.iter().map(|t| (t.theta, t.phi)).collect();
    Ok(estimators
        .iter()
        .enumerate()
        .map(|(e, est)| {
            let estimates: Vec<_> = per_trial.iter().map(|row| row[e].clone()).collect();
            summarize(*est, &truth, estimates, trials)
        })
        .collect())
}

fn summarize(estimator: Estimator, truth: &[(f64, f64)], estimates: TrialResult, trials: usize) -> MseStats {
    let mut sq_theta = Vec::new();
    let mut sq_phi = Vec::new();
    for list in estimates.iter().flatten() {
        let (t, p) = matched_squared_errors(list, truth);
        sq_theta.push(t);
        sq_phi.push(p);
    }
    let (mse_theta, se_theta) = mean_and_se(&sq_theta);
    let (mse_phi, se_phi) = mean_and_se(&sq_phi);
    MseStats {
        estimator,
        mse_theta,
        mse_phi,
        se_theta,
        se_phi,
        trials,
        failed: trials - sq_theta.len(),
        estimates,
    }
}

/// Pairs estimates with targets greedily by smallest total error and returns
/// the per-target mean squared elevation and azimuth errors.
fn matched_squared_errors(est: &[(f64, f64)], truth: &[(f64, f64)]) -> (f64, f64) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &e) in est.iter().enumerate() {
        for (j, &t) in truth.iter().enumerate() {
            let (dt, dp) = angle_errors(e, t);
            pairs.push((dt * dt + dp * dp, i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut used_e = vec![false; est.len()];
    let mut used_t = vec![false; truth.len()];
    let (mut st, mut sp) = (0.0, 0.0);
    for (_, i, j) in pairs {
        if used_e[i] || used_t[j] {
            continue;
        }
        used_e[i] = true;
        used_t[j] = true;
        let (dt, dp) = angle_errors(est[i], truth[j]);
        st += dt * dt;
        sp += dp * dp;
    }
    let k = truth.len() as f64;
    (st / k, sp / k)
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::UpaGeometry;
    use crate::scene::snr_to_scene;
    use crate::tx::matched_filter_design;
    use std::f64::consts::PI;

    fn on_bin_scene(snr_db: f64) -> TargetScene {
        // psi = 2π (1/4 + 1/16) along x, 0 along y; d = λ/2 gives sin θ = 0.625.
        let theta = (0.625f64).asin();
        let g = UpaGeometry::half_wavelength(4, 4).unwrap();
        snr_to_scene(snr_db, 1.0, &[(theta, 0.0)], g, 1.0).unwrap()
    }

    #[test]
    fn noiseless_on_bin_target_has_zero_mse() {
        let mut scene = on_bin_scene(20.0);
        scene.noise_power = 1e-300;
        let design = matched_filter_design(&scene, 1.0).unwrap();
        let plan = DftPlan::new(scene.geom, 4, 4).unwrap();
        let stats = mse_monte_carlo(&scene, &design, &plan, &[Estimator::AnalogDft, Estimator::DigitalDft], 4, 9).unwrap();
        for s in &stats {
            assert_eq!(s.failed, 0);
            assert!(s.mse_theta < 1e-20 && s.mse_phi < 1e-20, "{s:?}");
        }
    }

    #[test]
    fn reruns_are_identical() {
        let scene = on_bin_scene(0.0);
        let design = matched_filter_design(&scene, 1.0).unwrap();
        let plan = DftPlan::new(scene.geom, 4, 4).unwrap();
        let est = [Estimator::AnalogDft, Estimator::Ml { resolution_deg: 0.5 }];
        let a = mse_monte_carlo(&scene, &design, &plan, &est, 12, 100).unwrap();
        let b = mse_monte_carlo(&scene, &design, &plan, &est, 12, 100).unwrap();
        assert_eq!(a, b);
        let c = mse_monte_carlo(&scene, &design, &plan, &est, 12, 101).unwrap();
        assert_ne!(a[0].estimates, c[0].estimates);
    }

    #[test]
    fn matching_pairs_nearest_targets() {
        let truth = [(0.5, 1.0), (0.2, 3.0)];
        let est = [(0.21, 3.0), (0.5, 1.02)];
        let (t, p) = matched_squared_errors(&est, &truth);
        assert!((t - 0.0001 / 2.0).abs() < 1e-12);
        assert!((p - 0.0004 / 2.0).abs() < 1e-12);
        let (_, p) = matched_squared_errors(&[(0.5, 2.0 * PI - 0.01)], &[(0.5, 0.01)]);
        assert!((p - 0.0004).abs() < 1e-12);
    }

    #[test]
    fn standard_error_of_constant_is_zero() {
        assert_eq!(mean_and_se(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, se) = mean_and_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
        assert!(mean_and_se(&[]).0.is_nan());
    }

    #[test]
    fn rejects_bad_requests() {
        let scene = on_bin_scene(0.0);
        let design = matched_filter_design(&scene, 1.0).unwrap();
        let plan = DftPlan::new(scene.geom, 4, 4).unwrap();
        assert!(mse_monte_carlo(&scene, &design, &plan, &[Estimator::AnalogDft], 0, 0).is_err());
        assert!(mse_monte_carlo(&scene, &design, &plan, &[], 3, 0).is_err());
        let other = DftPlan::new(UpaGeometry::half_wavelength(2, 2).unwrap(), 4, 4).unwrap();
        assert!(mse_monte_carlo(&scene, &design, &other, &[Estimator::AnalogDft], 3, 0).is_err());
    }
}
