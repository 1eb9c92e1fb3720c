//! Infeasible-start primal-dual interior-point method with the HKM search
//! direction and a Mehrotra predictor-corrector.
//!
//! The slack `S = F(x)` and the dual matrix `Z` live block by block; the
//! Schur complement `H_ij = tr(B_i S⁻¹ B_j Z)` is assembled densely from the
//! sparse coefficients.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{IterationRecord, SdpProblem, SdpSolution, SdpStatus, SymEntry};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub initial_x: Option<Vec<f64>>,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 200,
            initial_x: None,
        }
    }
}

pub fn solve(problem: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution> {
    solve_with(
        problem,
        &SdpOptions {
            tol,
            max_iter,
            initial_x: None,
        },
    )
}

/// Fully expanded symmetric coefficient: every nonzero position listed once.
struct Block {
    dim: usize,
    constant: Vec<SymEntry>,
    terms: Vec<(usize, Vec<SymEntry>)>,
}

fn expand(entries: &[SymEntry], out: &mut BTreeMap<(usize, usize), f64>) {
    for &(r, c, v) in entries {
        *out.entry((r, c)).or_insert(0.0) += v;
        if r != c {
            *out.entry((c, r)).or_insert(0.0) += v;
        }
    }
}

fn collect(map: BTreeMap<(usize, usize), f64>) -> Vec<SymEntry> {
    map.into_iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|((r, c), v)| (r, c, v))
        .collect()
}

fn compile(problem: &SdpProblem) -> Vec<Block> {
    let mut blocks = Vec::new();
    for lmi in &problem.lmi_blocks {
        let mut constant = BTreeMap::new();
        expand(&lmi.constant, &mut constant);
        let mut by_var: BTreeMap<usize, BTreeMap<(usize, usize), f64>> = BTreeMap::new();
        for (var, entries) in &lmi.coefficients {
            expand(entries, by_var.entry(*var).or_default());
        }
        blocks.push(Block {
            dim: lmi.dim,
            constant: collect(constant),
            terms: by_var
                .into_iter()
                .map(|(v, m)| (v, collect(m)))
                .filter(|(_, e)| !e.is_empty())
                .collect(),
        });
    }
    for row in &problem.linear_ineqs {
        let mut by_var: BTreeMap<usize, f64> = BTreeMap::new();
        for &(v, g) in &row.coeffs {
            *by_var.entry(v).or_insert(0.0) -= g;
        }
        blocks.push(Block {
            dim: 1,
            constant: if row.rhs != 0.0 { vec![(0, 0, row.rhs)] } else { vec![] },
            terms: by_var
                .into_iter()
                .filter(|(_, g)| *g != 0.0)
                .map(|(v, g)| (v, vec![(0, 0, g)]))
                .collect(),
        });
    }
    for &v in &problem.nonneg {
        blocks.push(Block {
            dim: 1,
            constant: vec![],
            terms: vec![(v, vec![(0, 0, 1.0)])],
        });
    }
    blocks
}

impl Block {
    fn apply(&self, x: &DVector<f64>, with_constant: bool) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        if with_constant {
            for &(r, c, v) in &self.constant {
                m[(r, c)] += v;
            }
        }
        for (var, entries) in &self.terms {
            let s = x[*var];
            if s != 0.0 {
                for &(r, c, v) in entries {
                    m[(r, c)] += s * v;
                }
            }
        }
        m
    }

    /// `out_i += tr(B_i M)`.
    fn adjoint_into(&self, m: &DMatrix<f64>, out: &mut DVector<f64>) {
        for (var, entries) in &self.terms {
            out[*var] += entries.iter().map(|&(r, c, v)| v * m[(r, c)]).sum::<f64>();
        }
    }

    fn constant_inner(&self, m: &DMatrix<f64>) -> f64 {
        self.constant.iter().map(|&(r, c, v)| v * m[(r, c)]).sum()
    }

    fn frob(entries: &[SymEntry]) -> f64 {
        entries.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt()
    }

    /// Adds this block's contribution `tr(B_i S⁻¹ B_j Z)` to `h`.
    fn schur_into(&self, s_inv: &DMatrix<f64>, z: &DMatrix<f64>, h: &mut DMatrix<f64>) {
        let m = self.dim;
        for (pj, (vj, ej)) in self.terms.iter().enumerate() {
            let mut cols: Vec<usize> = ej.iter().map(|e| e.1).collect();
            cols.sort_unstable();
            cols.dedup();
            let mut t = DMatrix::<f64>::zeros(m, cols.len());
            for &(a, b, v) in ej {
                let k = cols.binary_search(&b).expect("column listed");
                t.column_mut(k).axpy(v, &s_inv.column(a), 1.0);
            }
            let zc = z.select_columns(cols.iter());
            let g = &t * zc.transpose();
            for (vi, ei) in self.terms[..=pj].iter() {
                let val: f64 = ei.iter().map(|&(a, b, v)| v * g[(b, a)]).sum();
                h[(*vi, *vj)] += val;
                if vi != vj {
                    h[(*vj, *vi)] += val;
                }
            }
        }
    }
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Largest `α` with `X + αΔ ⪰ 0` (∞ if unbounded), for `X ≻ 0`.
fn max_step(x: &DMatrix<f64>, d: &DMatrix<f64>) -> Option<f64> {
    if x.nrows() == 1 {
        let (xv, dv) = (x[(0, 0)], d[(0, 0)]);
        return Some(if dv < 0.0 { -xv / dv } else { f64::INFINITY });
    }
    let chol = Cholesky::new(x.clone())?;
    let l = chol.l();
    let tmp = l.solve_lower_triangular(d)?;
    let m = l.solve_lower_triangular(&tmp.transpose())?;
    let lmin = sym(m).symmetric_eigenvalues().min();
    Some(if lmin < 0.0 { -1.0 / lmin } else { f64::INFINITY })
}

fn factor_spd(mut h: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let scale = h.diagonal().iter().copied().fold(0.0_f64, f64::max).max(1e-300);
    if let Some(ch) = Cholesky::new(h.clone()) {
        return Some(ch);
    }
    let mut reg = 1e-14 * scale;
    for _ in 0..8 {
        for i in 0..h.nrows() {
            h[(i, i)] += reg;
        }
        if let Some(ch) = Cholesky::new(h.clone()) {
            return Some(ch);
        }
        reg *= 100.0;
    }
    None
}

struct Direction {
    dx: DVector<f64>,
    ds: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
}

pub fn solve_with(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let n = problem.num_vars;
    let blocks = compile(problem);
    let c = DVector::from_column_slice(&problem.objective);
    let mut q = DMatrix::<f64>::zeros(n, n);
    for &(i, j, v) in &problem.quadratic {
        q[(i, j)] += v;
        if i != j {
            q[(j, i)] += v;
        }
    }
    let has_q = !problem.quadratic.is_empty();
    let m_total: usize = blocks.iter().map(|b| b.dim).sum();
    let norm_c = c.norm();
    let norm_b0 = blocks.iter().map(|b| Block::frob(&b.constant).powi(2)).sum::<f64>().sqrt();

    let mut x = match &opts.initial_x {
        Some(x0) if x0.len() == n => DVector::from_column_slice(x0),
        Some(x0) => return Err(crate::error::Error::arg(format!("initial point has {} entries, expected {n}", x0.len()))),
        None => DVector::zeros(n),
    };
    let x0_norm = x.norm();

    // Per-variable coefficient norms (over all blocks) for the starting point.
    let mut coef_norm = vec![0.0_f64; n];
    for b in &blocks {
        for (v, e) in &b.terms {
            coef_norm[*v] += Block::frob(e).powi(2);
        }
    }
    let coef_norm: Vec<f64> = coef_norm.into_iter().map(f64::sqrt).collect();
    let max_coef = coef_norm.iter().copied().fold(0.0, f64::max);
    let mut s: Vec<DMatrix<f64>> = Vec::with_capacity(blocks.len());
    let mut z: Vec<DMatrix<f64>> = Vec::with_capacity(blocks.len());
    for b in &blocks {
        let md = b.dim as f64;
        let ratio = b
            .terms
            .iter()
            .map(|(v, _)| (1.0 + c[*v].abs()) / (1.0 + coef_norm[*v]))
            .fold(0.0, f64::max);
        let zeta = 10f64.max(md.sqrt()).max(md * ratio);
        let fx = b.apply(&x, true);
        let eta = 10f64
            .max(md.sqrt())
            .max(Block::frob(&b.constant))
            .max(max_coef)
            .max(fx.abs().max() * 2.0);
        s.push(DMatrix::identity(b.dim, b.dim) * eta);
        z.push(DMatrix::identity(b.dim, b.dim) * zeta);
    }
    let z0_norm = z.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();

    let tol = opts.tol;
    let mut trace = Vec::new();
    let mut status = SdpStatus::MaxIter;
    let mut gamma = 0.9;
    let mut stalled = 0;
    let mut iterations = 0;
    let mut last;

    loop {
        // Residuals at the current iterate.
        let rp: Vec<DMatrix<f64>> = blocks.iter().zip(&s).map(|(b, sb)| b.apply(&x, true) - sb).collect();
        let mut a_z = DVector::zeros(n);
        for (b, zb) in blocks.iter().zip(&z) {
            b.adjoint_into(zb, &mut a_z);
        }
        let qx = &q * &x;
        let rd = &c + &qx - &a_z;
        let xqx = x.dot(&qx);
        let pobj = c.dot(&x) + 0.5 * xqx;
        let b0z: f64 = blocks.iter().zip(&z).map(|(b, zb)| b.constant_inner(zb)).sum();
        let dobj = -b0z - 0.5 * xqx;
        let gap_abs: f64 = s.iter().zip(&z).map(|(a, b)| inner(a, b)).sum();
        last = IterationRecord {
            primal_objective: pobj,
            dual_objective: dobj,
            primal_residual: rp.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt() / (1.0 + norm_b0),
            dual_residual: rd.norm() / (1.0 + norm_c),
            gap: gap_abs.max(0.0) / (1.0 + pobj.abs() + dobj.abs()),
        };
        trace.push(last);
        if last.primal_residual <= tol && last.dual_residual <= tol && last.gap <= tol {
            status = SdpStatus::Optimal;
            break;
        }
        // Farkas-type certificates once iterates have diverged.
        let z_norm = z.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        if b0z < 0.0 && z_norm > 1e8 * z0_norm && a_z.amax() / (-b0z) <= tol {
            status = SdpStatus::Infeasible;
            break;
        }
        let x_norm = x.norm();
        if x_norm > 1e8 * (1.0 + x0_norm) && c.dot(&x) < 0.0 {
            let d = &x / x_norm;
            let cone_ok = blocks.iter().all(|b| {
                let ad = b.apply(&d, false);
                let scale = ad.abs().max().max(1e-300);
                ad.nrows() == 0 || sym(ad).symmetric_eigenvalues().min() >= -tol * scale.max(1.0)
            });
            if cone_ok && (&q * &d).amax() <= tol * (1.0 + q.amax()) {
                status = SdpStatus::Unbounded;
                break;
            }
        }
        if iterations >= opts.max_iter || stalled >= 3 {
            break;
        }
        iterations += 1;

        let mu = gap_abs / m_total as f64;
        let mut s_inv = Vec::with_capacity(blocks.len());
        let mut broke = false;
        for sb in &s {
            match Cholesky::new(sb.clone()) {
                Some(ch) => s_inv.push(sym(ch.inverse())),
                None => {
                    broke = true;
                    break;
                }
            }
        }
        if broke {
            break;
        }
        let mut h = q.clone();
        for ((b, si), zb) in blocks.iter().zip(&s_inv).zip(&z) {
            b.schur_into(si, zb, &mut h);
        }
        let Some(hchol) = factor_spd(h) else { break };

        let direction = |rc: &[DMatrix<f64>]| -> Direction {
            let mut rhs = -&rd;
            for (k, b) in blocks.iter().enumerate() {
                let mm = &s_inv[k] * (&rc[k] - &rp[k] * &z[k]);
                b.adjoint_into(&mm, &mut rhs);
            }
            let dx = hchol.solve(&rhs);
            let mut ds = Vec::with_capacity(blocks.len());
            let mut dz = Vec::with_capacity(blocks.len());
            for (k, b) in blocks.iter().enumerate() {
                let dsk = b.apply(&dx, false) + &rp[k];
                let dzk = sym(&s_inv[k] * (&rc[k] - &dsk * &z[k]));
                ds.push(dsk);
                dz.push(dzk);
            }
            Direction { dx, ds, dz }
        };
        let steps = |d: &Direction| -> Option<(f64, f64)> {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for k in 0..blocks.len() {
                ap = ap.min(max_step(&s[k], &d.ds[k])?);
                ad = ad.min(max_step(&z[k], &d.dz[k])?);
            }
            if has_q {
                let a = ap.min(ad);
                Some((a, a))
            } else {
                Some((ap, ad))
            }
        };

        // Predictor.
        let rc_aff: Vec<DMatrix<f64>> = s.iter().zip(&z).map(|(a, b)| -(a * b)).collect();
        let pred = direction(&rc_aff);
        let Some((ap, ad)) = steps(&pred) else { break };
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff: f64 = (0..blocks.len())
            .map(|k| inner(&(&s[k] + &pred.ds[k] * ap), &(&z[k] + &pred.dz[k] * ad)))
            .sum::<f64>()
            / m_total as f64;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        // Corrector.
        let rc: Vec<DMatrix<f64>> = (0..blocks.len())
            .map(|k| {
                let dim = blocks[k].dim;
                DMatrix::identity(dim, dim) * (sigma * mu) - &s[k] * &z[k] - &pred.ds[k] * &pred.dz[k]
            })
            .collect();
        let corr = direction(&rc);
        let Some((ap, ad)) = steps(&corr) else { break };
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if !(ap.is_finite() && ad.is_finite()) {
            break;
        }
        x.axpy(ap, &corr.dx, 1.0);
        for k in 0..blocks.len() {
            s[k] += &corr.ds[k] * ap;
            z[k] += &corr.dz[k] * ad;
            s[k] = sym(std::mem::take(&mut s[k]));
        }
        gamma = 0.9 + 0.09 * ap.min(ad);
        stalled = if ap.max(ad) < 1e-10 { stalled + 1 } else { 0 };
    }

    Ok(SdpSolution {
        x: x.iter().copied().collect(),
        status,
        primal_residual: last.primal_residual,
        dual_residual: last.dual_residual,
        gap: last.gap,
        primal_objective: last.primal_objective,
        dual_objective: last.dual_objective,
        iterations,
        dual: z,
        trace,
    })
}
