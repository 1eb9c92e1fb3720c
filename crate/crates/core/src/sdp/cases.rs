//! Small problems with closed-form optima, shared by the unit tests and the
//! acceptance suite.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c, CMat};

use super::{hermitian_embedding, ComplexLmi, HermitianParam, LinearIneq, LmiBlock, SdpProblem};

pub struct AnalyticCase {
    pub name: &'static str,
    pub problem: SdpProblem,
    pub optimum: f64,
}

/// `min t` s.t. `[[t, 1], [1, t]] ⪰ 0`; optimum 1.
fn epigraph() -> AnalyticCase {
    let mut p = SdpProblem::new(1);
    p.objective[0] = 1.0;
    let mut b = LmiBlock::new(2);
    b.add_coefficient(0, 0, 0, 1.0);
    b.add_coefficient(0, 1, 1, 1.0);
    b.add_constant(0, 1, 1.0);
    p.lmi_blocks.push(b);
    AnalyticCase { name: "2x2 epigraph", problem: p, optimum: 1.0 }
}

/// `min tr X` s.t. `X ⪰ M` with eigenvalues of `M` equal to 3 and 1.
fn trace_above_matrix() -> AnalyticCase {
    let m = [[2.0, 1.0], [1.0, 2.0]];
    let mut p = SdpProblem::new(3);
    p.objective = vec![1.0, 1.0, 0.0];
    let mut b = LmiBlock::new(2);
    b.add_coefficient(0, 0, 0, 1.0);
    b.add_coefficient(1, 1, 1, 1.0);
    b.add_coefficient(2, 0, 1, 1.0);
    for r in 0..2 {
        for k in r..2 {
            b.add_constant(r, k, -m[r][k]);
        }
    }
    p.lmi_blocks.push(b);
    AnalyticCase { name: "trace above M", problem: p, optimum: 4.0 }
}

/// Linear cost over the scaled simplex `x ≥ 0, Σx ≤ 2.5`; the best vertex
/// gives -5.
fn simplex_lp() -> AnalyticCase {
    let mut p = SdpProblem::new(4);
    p.objective = vec![0.3, -2.0, -0.5, 1.0];
    p.nonneg = (0..4).collect();
    p.linear_ineqs.push(LinearIneq { coeffs: (0..4).map(|i| (i, 1.0)).collect(), rhs: 2.5 });
    AnalyticCase { name: "simplex LP", problem: p, optimum: -5.0 }
}

/// `min ‖X − M‖² − ‖M‖²` over `X ⪰ 0` with `M = [[1, 2], [2, 1]]`: the
/// projection keeps the eigenvalue 3 and the value is `1 - 10 = -9`.
fn psd_projection() -> AnalyticCase {
    let mut p = SdpProblem::new(3);
    p.objective = vec![-2.0, -2.0, -8.0];
    p.quadratic = vec![(0, 0, 2.0), (1, 1, 2.0), (2, 2, 4.0)];
    let mut b = LmiBlock::new(2);
    b.add_coefficient(0, 0, 0, 1.0);
    b.add_coefficient(1, 1, 1, 1.0);
    b.add_coefficient(2, 0, 1, 1.0);
    p.lmi_blocks.push(b);
    AnalyticCase { name: "PSD projection QP", problem: p, optimum: -9.0 }
}

/// Largest eigenvalue of a rotated `diag(5, 2, -1)` as `min t, tI ⪰ A`.
fn max_eigenvalue() -> AnalyticCase {
    let (cs, sn) = (0.6f64, 0.8f64);
    let q = DMatrix::from_row_slice(3, 3, &[cs, -sn, 0.0, sn, cs, 0.0, 0.0, 0.0, 1.0]);
    let a = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![5.0, 2.0, -1.0])) * q.transpose();
    let mut p = SdpProblem::new(1);
    p.objective[0] = 1.0;
    let mut b = LmiBlock::new(3);
    for i in 0..3 {
        b.add_coefficient(0, i, i, 1.0);
        for k in i..3 {
            b.add_constant(i, k, -a[(i, k)]);
        }
    }
    p.lmi_blocks.push(b);
    AnalyticCase { name: "max eigenvalue", problem: p, optimum: 5.0 }
}

/// Largest eigenvalue of the Hermitian `[[2, j], [-j, 2]]` (eigenvalues 3
/// and 1) through the real embedding.
fn hermitian_max_eigenvalue() -> AnalyticCase {
    let h = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
    let mut p = SdpProblem::new(1);
    p.objective[0] = 1.0;
    let mut lmi = ComplexLmi::new(2);
    for i in 0..2 {
        lmi.add(Some(0), i, i, c(1.0, 0.0));
        for k in 0..2 {
            lmi.add(None, i, k, -h[(i, k)]);
        }
    }
    p.lmi_blocks.push(hermitian_embedding(&lmi).expect("Hermitian by construction"));
    AnalyticCase { name: "Hermitian max eigenvalue", problem: p, optimum: 3.0 }
}

/// Every problem with a known optimum.
pub fn analytic_cases() -> Vec<AnalyticCase> {
    vec![
        epigraph(),
        trace_above_matrix(),
        simplex_lp(),
        psd_projection(),
        max_eigenvalue(),
        hermitian_max_eigenvalue(),
    ]
}

/// The same Hermitian program, `min Re tr(C X)` s.t. `X ⪰ M`, `tr X ≤ 5`,
/// posed once over complex `X` (through the embedding) and once over real
/// symmetric `2n x 2n` matrices directly. Both must reach the same value.
pub fn complex_real_pair(n: usize, seed: u64) -> (SdpProblem, SdpProblem) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rand_h = || {
        let a = CMat::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        &a * a.adjoint()
    };
    let cost = rand_h() + CMat::identity(n, n) * c(0.2, 0.0);
    let floor = rand_h();
    let budget = 5.0;

    let hp = HermitianParam::new(0, n);
    let mut complex_form = SdpProblem::new(hp.num_vars());
    for (var, r, k, z) in hp.basis() {
        complex_form.objective[var] += (cost[(k, r)] * z).re;
    }
    let mut lmi = ComplexLmi::new(n);
    hp.add_to(&mut lmi, 0, 0, 1.0);
    for r in 0..n {
        for k in 0..n {
            lmi.add(None, r, k, -floor[(r, k)]);
        }
    }
    complex_form.lmi_blocks.push(hermitian_embedding(&lmi).expect("Hermitian by construction"));
    complex_form.linear_ineqs.push(LinearIneq { coeffs: (0..n).map(|i| (hp.diag(i), 1.0)).collect(), rhs: budget });

    let emb = |m: &CMat| hermitian_embedding(&ComplexLmi::from_dense(m)).expect("Hermitian").evaluate(&[]);
    let (ce, me) = (emb(&cost), emb(&floor));
    let d = 2 * n;
    let idx = |r: usize, k: usize| r * d - r * (r + 1) / 2 + k;
    let mut real_form = SdpProblem::new(d * (d + 1) / 2);
    let mut blk = LmiBlock::new(d);
    for r in 0..d {
        for k in r..d {
            // The embedding doubles the trace, hence the halving.
            real_form.objective[idx(r, k)] = 0.5 * if r == k { ce[(r, r)] } else { 2.0 * ce[(r, k)] };
            blk.add_coefficient(idx(r, k), r, k, 1.0);
            blk.add_constant(r, k, -me[(r, k)]);
        }
    }
    real_form.lmi_blocks.push(blk);
    real_form.linear_ineqs.push(LinearIneq { coeffs: (0..d).map(|i| (idx(i, i), 0.5)).collect(), rhs: budget });
    (complex_form, real_form)
}
