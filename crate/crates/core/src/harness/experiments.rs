use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::Result;
use crate::rx::{analog_spectrum, bins_to_psi, digital_spectrum, dft_complexity, estimate_doa, milac_complexity, DftPlan};
use crate::scene::{make_waveforms, synthesize_rx, TargetScene};
use crate::tx::{
    angle_grid, beampattern, design_digital, matched_filter_design, pdd_design, top_peaks, Architecture,
    BeamformerDesign, PddRecord,
};

use super::config::{EstimatorChoice, ExperimentConfig};
use super::monte_carlo::{mse_monte_carlo, Estimator};
use super::table::{num, ResultTable};

fn arch_name(a: Architecture) -> &'static str {
    match a {
        Architecture::Milac => "milac",
        Architecture::Digital => "digital",
        Architecture::MatchedFilter => "matched_filter",
    }
}

/// One transmit design together with the PDD trace when there is one.
pub(crate) struct Designed {
    pub design: BeamformerDesign,
    pub trace: Option<Vec<PddRecord>>,
    pub converged: bool,
    pub runtime_s: f64,
}

pub(crate) fn design_for(cfg: &ExperimentConfig, scene: &TargetScene, arch: Architecture) -> Result<Designed> {
    let weights = cfg.weights()?;
    let l = cfg.fim_snapshots();
    let p_t = cfg.scene.p_t;
    let start = Instant::now();
    let (design, trace, converged) = match arch {
        Architecture::Milac => {
            let out = pdd_design(scene, p_t, &weights, l, &cfg.design.pdd)?;
            (out.design, Some(out.trace), out.converged)
        }
        Architecture::Digital => (design_digital(scene, p_t, &weights, l)?, None, true),
        Architecture::MatchedFilter => (matched_filter_design(scene, p_t)?, None, true),
    };
    Ok(Designed { design, trace, converged, runtime_s: start.elapsed().as_secs_f64() })
}

fn maybe_dump(cfg: &ExperimentConfig, dir: &Path, snr: f64, d: &Designed) -> Result<()> {
    if cfg.wants_json() {
        let name = format!("design_{}_snr{}.json", arch_name(d.design.architecture), snr);
        d.design.write_json(&dir.join(name), d.trace.as_deref())?;
    }
    Ok(())
}

pub(crate) fn convergence(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<ResultTable>> {
    let runs = cfg
        .scene
        .snr_db
        .par_iter()
        .map(|&snr| {
            let scene = cfg.scene_at(snr)?;
            let milac = design_for(cfg, &scene, Architecture::Milac)?;
            let digital = design_for(cfg, &scene, Architecture::Digital)?;
            Ok((snr, scene, milac, digital))
        })
        .collect::<Result<Vec<_>>>()?;

    let weights = cfg.weights()?;
    let l = cfg.fim_snapshots();
    let mut trace = ResultTable::new("convergence_trace", &["snr_db", "outer", "inner", "rho", "residual", "objective"]);
    let mut summary = ResultTable::new(
        "convergence_summary",
        &[
            "snr_db",
            "outer_iterations",
            "converged",
            "final_residual",
            "milac_crb",
            "digital_crb",
            "relative_gap",
            "runtime_s",
        ],
    );
    for (snr, scene, milac, digital) in &runs {
        let records = milac.trace.as_deref().unwrap_or_default();
        for r in records {
            trace.push(vec![num(*snr), r.outer.to_string(), r.inner.to_string(), num(r.rho), num(r.residual), num(r.objective)])?;
        }
        let m = milac.design.crb(scene, &weights, l)?.weighted_total;
        let d = digital.design.crb(scene, &weights, l)?.weighted_total;
        let last = records.last();
        summary.push(vec![
            num(*snr),
            last.map_or(0, |r| r.outer).to_string(),
            milac.converged.to_string(),
            num(last.map_or(f64::NAN, |r| r.residual)),
            num(m),
            num(d),
            num((m - d) / d),
            format!("{:.3}", milac.runtime_s),
        ])?;
        maybe_dump(cfg, dir, *snr, milac)?;
        maybe_dump(cfg, dir, *snr, digital)?;
    }
    Ok(vec![trace, summary])
}

pub(crate) fn beampattern_tables(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<ResultTable>> {
    let g = &cfg.grid;
    let grid = angle_grid(g.theta_max_deg, g.phi_max_deg, g.step_deg)?;
    let k = cfg.scene.targets_deg.len();
    let phi_cells = (g.phi_max_deg / g.step_deg).round() as usize + 1;
    let mut pattern = ResultTable::new(
        "beampattern",
        &["snr_db", "architecture", "theta_deg", "phi_deg", "power", "normalized"],
    );
    let mut peaks = ResultTable::new("beampattern_peaks", &["snr_db", "architecture", "rank", "theta_deg", "phi_deg", "power"]);
    for &snr in &cfg.scene.snr_db {
        let scene = cfg.scene_at(snr)?;
        for &arch in &cfg.design.architectures {
            let d = design_for(cfg, &scene, arch)?;
            let values = beampattern(&d.design.r_x, &grid, &scene.geom)?;
            let peak = values.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            for (&(t, p), &v) in grid.iter().zip(&values) {
                pattern.push(vec![
                    num(snr),
                    arch_name(arch).into(),
                    format!("{:.4}", t.to_degrees()),
                    format!("{:.4}", p.to_degrees()),
                    num(v),
                    num(v / peak),
                ])?;
            }
            for (rank, idx) in top_peaks(&values, phi_cells, k).into_iter().enumerate() {
                let (t, p) = grid[idx];
                peaks.push(vec![
                    num(snr),
                    arch_name(arch).into(),
                    (rank + 1).to_string(),
                    format!("{:.4}", t.to_degrees()),
                    format!("{:.4}", p.to_degrees()),
                    num(values[idx]),
                ])?;
            }
            maybe_dump(cfg, dir, snr, &d)?;
        }
    }
    Ok(vec![pattern, peaks])
}

pub(crate) fn crb_sweep(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<ResultTable>> {
    let weights = cfg.weights()?;
    let l = cfg.fim_snapshots();
    let jobs: Vec<(f64, Architecture)> = cfg
        .scene
        .snr_db
        .iter()
        .flat_map(|&s| cfg.design.architectures.iter().map(move |&a| (s, a)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(snr, arch)| {
            let scene = cfg.scene_at(snr)?;
            let d = design_for(cfg, &scene, arch)?;
            let report = d.design.crb(&scene, &weights, l)?;
            Ok((snr, arch, d, report))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = ResultTable::new(
        "crb_sweep",
        &["snr_db", "architecture", "weighted_crb", "angle_crb_trace", "converged", "runtime_s"],
    );
    for (snr, arch, d, report) in &rows {
        table.push(vec![
            num(*snr),
            arch_name(*arch).into(),
            num(report.weighted_total),
            num(report.angle_block_trace),
            d.converged.to_string(),
            format!("{:.3}", d.runtime_s),
        ])?;
        maybe_dump(cfg, dir, *snr, d)?;
    }
    Ok(vec![table])
}

pub(crate) fn doa_spectrum(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<ResultTable>> {
    let geom = cfg.geom()?;
    let (lx, ly) = (cfg.receiver.lx, cfg.receiver.ly);
    let plan = DftPlan::new(geom, lx, ly)?;
    let k = cfg.scene.targets_deg.len();
    let arch = cfg.design.architectures[0];
    let mut spectrum = ResultTable::new(
        "doa_spectrum",
        &["snr_db", "n", "ell", "power_analog", "power_digital", "psi_x_hat", "psi_y_hat"],
    );
    let mut estimates = ResultTable::new(
        "doa_estimates",
        &["snr_db", "receiver", "rank", "n", "ell", "psi_x_hat", "psi_y_hat", "theta_deg", "phi_deg", "peak_power", "status"],
    );
    for &snr in &cfg.scene.snr_db {
        let scene = cfg.scene_at(snr)?;
        let d = design_for(cfg, &scene, arch)?;
        let s = make_waveforms(d.design.w.ncols(), plan.slots())?;
        let block = synthesize_rx(&scene, &d.design.w, &s, cfg.monte_carlo.base_seed)?;
        let analog = analog_spectrum(&block.r, &plan)?;
        let digital = digital_spectrum(&block.r, &geom, lx, ly)?;
        for l in 0..plan.slots() {
            for n in 0..geom.num_elements() {
                let (px, py) = bins_to_psi(n + 1, l + 1, &geom, lx, ly)?;
                spectrum.push(vec![
                    num(snr),
                    (n + 1).to_string(),
                    (l + 1).to_string(),
                    num(analog[(n, l)]),
                    num(digital[(n, l)]),
                    format!("{px:.12}"),
                    format!("{py:.12}"),
                ])?;
            }
        }
        for (label, map) in [("analog", &analog), ("digital", &digital)] {
            match estimate_doa(map, k, &geom, lx, ly) {
                Ok(list) => {
                    for (rank, e) in list.iter().enumerate() {
                        estimates.push(vec![
                            num(snr),
                            label.into(),
                            (rank + 1).to_string(),
                            e.peak.0.to_string(),
                            e.peak.1.to_string(),
                            format!("{:.12}", e.psi_x),
                            format!("{:.12}", e.psi_y),
                            format!("{:.6}", e.theta.to_degrees()),
                            format!("{:.6}", e.phi.to_degrees()),
                            num(e.peak_power),
                            "ok".into(),
                        ])?;
                    }
                }
                Err(err) => {
                    let mut row = vec![num(snr), label.into()];
                    row.extend(std::iter::repeat_n(String::new(), 8));
                    row.push(format!("failed: {err}"));
                    estimates.push(row)?;
                }
            }
        }
        maybe_dump(cfg, dir, snr, &d)?;
    }
    Ok(vec![spectrum, estimates])
}

pub(crate) fn mse_sweep(cfg: &ExperimentConfig, dir: &Path, seed: u64) -> Result<Vec<ResultTable>> {
    let geom = cfg.geom()?;
    let plan = DftPlan::new(geom, cfg.receiver.lx, cfg.receiver.ly)?;
    let ml = Estimator::Ml { resolution_deg: cfg.receiver.ml_resolution_deg };
    let mut table = ResultTable::new(
        "mse_sweep",
        &["snr_db", "transmit", "receiver", "mse_theta", "mse_phi", "se_theta", "se_phi", "trials", "failed_trials"],
    );
    for &snr in &cfg.scene.snr_db {
        let scene = cfg.scene_at(snr)?;
        for &arch in &cfg.design.architectures {
            let d = design_for(cfg, &scene, arch)?;
            let dft = if arch == Architecture::Digital { Estimator::DigitalDft } else { Estimator::AnalogDft };
            let estimators: Vec<Estimator> = match cfg.receiver.estimator {
                EstimatorChoice::Dft => vec![dft],
                EstimatorChoice::Ml => vec![ml],
                EstimatorChoice::Both => vec![dft, ml],
            };
            let stats = mse_monte_carlo(&scene, &d.design, &plan, &estimators, cfg.monte_carlo.trials, seed)?;
            for s in stats {
                table.push(vec![
                    num(snr),
                    arch_name(arch).into(),
                    s.estimator.label().into(),
                    num(s.mse_theta),
                    num(s.mse_phi),
                    num(s.se_theta),
                    num(s.se_phi),
                    s.trials.to_string(),
                    s.failed.to_string(),
                ])?;
            }
            maybe_dump(cfg, dir, snr, &d)?;
        }
    }
    Ok(vec![table])
}

pub(crate) fn complexity(cfg: &ExperimentConfig) -> Result<Vec<ResultTable>> {
    let l = cfg.complexity.snapshots;
    let mut table = ResultTable::new("complexity", &["n", "l", "digital_ops", "milac_ops"]);
    for &n in &cfg.complexity.antennas {
        table.push(vec![n.to_string(), l.to_string(), num(dft_complexity(n, l)), num(milac_complexity(n, l))])?;
    }
    Ok(vec![table])
}
