//! Small dense semidefinite programs in inequality form:
//!
//! ```text
//! minimize    cᵀx + ½ xᵀQx
//! subject to  B₀ + Σ x_i B_i ⪰ 0      (one LMI per block)
//!             gᵀx ≤ h                 (linear rows)
//!             x_i ≥ 0                 (selected variables)
//! ```
//!
//! Coefficient matrices are stored as sparse symmetric entry lists; all
//! factorizations are dense. Complex Hermitian LMIs enter through
//! [`hermitian_embedding`].

pub mod cases;
mod ipm;

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

pub use ipm::{solve, solve_with, SdpOptions};

/// `(row, col, value)` with `row ≤ col`; off-diagonal entries stand for
/// both mirrored positions.
pub type SymEntry = (usize, usize, f64);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LmiBlock {
    pub dim: usize,
    pub constant: Vec<SymEntry>,
    /// `(variable, entries)`; a variable may appear more than once and its
    /// entries are summed.
    pub coefficients: Vec<(usize, Vec<SymEntry>)>,
}

impl LmiBlock {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    fn normalize(r: usize, c: usize) -> (usize, usize) {
        if r <= c {
            (r, c)
        } else {
            (c, r)
        }
    }

    /// Adds `v` at `(r, c)` and `(c, r)` of `B₀`.
    pub fn add_constant(&mut self, r: usize, c: usize, v: f64) {
        let (r, c) = Self::normalize(r, c);
        self.constant.push((r, c, v));
    }

    /// Adds `v` at `(r, c)` and `(c, r)` of the coefficient of `var`.
    pub fn add_coefficient(&mut self, var: usize, r: usize, c: usize, v: f64) {
        let (r, c) = Self::normalize(r, c);
        match self.coefficients.last_mut() {
            Some((last, entries)) if *last == var => entries.push((r, c, v)),
            _ => self.coefficients.push((var, vec![(r, c, v)])),
        }
    }

    /// Dense value of `B₀ + Σ x_i B_i`.
    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        scatter(&mut m, &self.constant, 1.0);
        for (var, entries) in &self.coefficients {
            scatter(&mut m, entries, x[*var]);
        }
        m
    }
}

pub(crate) fn scatter(m: &mut DMatrix<f64>, entries: &[SymEntry], scale: f64) {
    for &(r, c, v) in entries {
        m[(r, c)] += scale * v;
        if r != c {
            m[(c, r)] += scale * v;
        }
    }
}

/// `Σ_i coeffs_i · x_i ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearIneq {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    /// Upper-triangular entries of a PSD matrix `Q`.
    #[serde(default)]
    pub quadratic: Vec<SymEntry>,
    pub lmi_blocks: Vec<LmiBlock>,
    #[serde(default)]
    pub linear_ineqs: Vec<LinearIneq>,
    /// Variables constrained to be nonnegative.
    #[serde(default)]
    pub nonneg: Vec<usize>,
}

impl SdpProblem {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars;
        if self.objective.len() != n {
            return Err(Error::arg(format!("objective has {} entries for {n} variables", self.objective.len())));
        }
        let var_ok = |v: usize| {
            if v < n {
                Ok(())
            } else {
                Err(Error::arg(format!("variable index {v} out of range 0..{n}")))
            }
        };
        let finite = |v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::arg("non-finite problem data"))
            }
        };
        for c in &self.objective {
            finite(*c)?;
        }
        for &(i, j, v) in &self.quadratic {
            var_ok(i)?;
            var_ok(j)?;
            finite(v)?;
        }
        for (b, block) in self.lmi_blocks.iter().enumerate() {
            if block.dim == 0 {
                return Err(Error::arg(format!("LMI block {b} is empty")));
            }
            let in_dim = |&(r, c, v): &SymEntry| {
                if r < block.dim && c < block.dim && v.is_finite() {
                    Ok(())
                } else {
                    Err(Error::arg(format!("entry ({r}, {c}) outside {0}x{0} block {b}", block.dim)))
                }
            };
            block.constant.iter().try_for_each(in_dim)?;
            for (var, entries) in &block.coefficients {
                var_ok(*var)?;
                entries.iter().try_for_each(in_dim)?;
            }
        }
        for row in &self.linear_ineqs {
            finite(row.rhs)?;
            for &(v, g) in &row.coeffs {
                var_ok(v)?;
                finite(g)?;
            }
        }
        self.nonneg.iter().try_for_each(|&v| var_ok(v))
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.objective.iter().zip(x).map(|(c, x)| c * x).sum();
        let quad: f64 = self
            .quadratic
            .iter()
            .map(|&(i, j, v)| if i == j { 0.5 * v * x[i] * x[i] } else { v * x[i] * x[j] })
            .sum();
        lin + quad
    }

    /// Serializes the problem as JSON for regression capture.
    pub fn dump(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let p: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpSolution {
    pub x: Vec<f64>,
    pub status: SdpStatus,
    /// `‖F(x) − S‖_F / (1 + ‖B₀‖_F)`.
    pub primal_residual: f64,
    /// `‖c + Qx − A*(Z)‖ / (1 + ‖c‖)`.
    pub dual_residual: f64,
    /// `⟨S, Z⟩ / (1 + |primal| + |dual|)`.
    pub gap: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    /// Dual matrices, one per LMI block followed by one 1×1 block per
    /// linear row and per nonnegative variable.
    pub dual: Vec<DMatrix<f64>>,
    pub trace: Vec<IterationRecord>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Converts a non-optimal status into a solver error.
    pub fn require_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status,
                primal: self.primal_residual,
                dual: self.dual_residual,
                gap: self.gap,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterationRecord {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

/// Complex Hermitian-valued affine expression `H₀ + Σ x_i H_i`, stored as
/// sparse entries.
#[derive(Debug, Clone, Default)]
pub struct ComplexLmi {
    pub dim: usize,
    entries: Vec<(Option<usize>, usize, usize, Complex64)>,
}

impl ComplexLmi {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Adds `z` at `(r, c)` of the constant (`var = None`) or of the
    /// coefficient of `var`. Only this single position is touched.
    pub fn add(&mut self, var: Option<usize>, r: usize, c: usize, z: Complex64) {
        self.entries.push((var, r, c, z));
    }

    /// Adds `z` at `(r, c)` and `conj(z)` at `(c, r)`.
    pub fn add_hermitian(&mut self, var: Option<usize>, r: usize, k: usize, z: Complex64) {
        if r == k {
            self.add(var, r, r, c(z.re, 0.0));
        } else {
            self.add(var, r, k, z);
            self.add(var, k, r, z.conj());
        }
    }

    pub fn from_dense(constant: &CMat) -> Self {
        let mut lmi = Self::new(constant.nrows());
        for r in 0..constant.nrows() {
            for k in 0..constant.ncols() {
                if constant[(r, k)] != c(0.0, 0.0) {
                    lmi.add(None, r, k, constant[(r, k)]);
                }
            }
        }
        lmi
    }

    /// Dense value at `x`.
    pub fn evaluate(&self, x: &[f64]) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for &(var, r, k, z) in &self.entries {
            let s = var.map_or(1.0, |v| x[v]);
            m[(r, k)] += z * s;
        }
        m
    }
}

/// Real `2m×2m` LMI equivalent to a complex Hermitian one through
/// `H ⪰ 0 ⇔ [[Re H, −Im H], [Im H, Re H]] ⪰ 0`.
pub fn hermitian_embedding(h: &ComplexLmi) -> Result<LmiBlock> {
    let m = h.dim;
    let mut acc: BTreeMap<(Option<usize>, usize, usize), Complex64> = BTreeMap::new();
    for &(var, r, k, z) in &h.entries {
        if r >= m || k >= m {
            return Err(Error::arg(format!("entry ({r}, {k}) outside {m}x{m} expression")));
        }
        *acc.entry((var, r, k)).or_insert(c(0.0, 0.0)) += z;
    }
    let scale = acc.values().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(1.0);
    for (&(var, r, k), &z) in &acc {
        let mirror = acc.get(&(var, k, r)).copied().unwrap_or(c(0.0, 0.0));
        if (z - mirror.conj()).norm() > tol {
            return Err(Error::arg(format!(
                "expression is not Hermitian at ({r}, {k}) for {}",
                var.map_or("the constant".to_string(), |v| format!("variable {v}"))
            )));
        }
    }
    let mut block = LmiBlock::new(2 * m);
    let mut push = |var: Option<usize>, r: usize, k: usize, v: f64| {
        if v != 0.0 {
            match var {
                None => block.add_constant(r, k, v),
                Some(i) => block.add_coefficient(i, r, k, v),
            }
        }
    };
    for (&(var, r, k), &z) in &acc {
        if r > k {
            continue;
        }
        push(var, r, k, z.re);
        push(var, r + m, k + m, z.re);
        if r != k {
            push(var, r, k + m, -z.im);
            push(var, k, r + m, z.im);
        }
    }
    Ok(block)
}

/// Maps a Hermitian `d×d` matrix onto `d²` consecutive real variables
/// starting at `offset`: diagonal entries first, then `(Re, Im)` of each
/// strictly upper entry in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermitianParam {
    pub offset: usize,
    pub dim: usize,
}

impl HermitianParam {
    pub fn new(offset: usize, dim: usize) -> Self {
        Self { offset, dim }
    }

    pub fn num_vars(&self) -> usize {
        self.dim * self.dim
    }

    pub fn end(&self) -> usize {
        self.offset + self.num_vars()
    }

    pub fn diag(&self, i: usize) -> usize {
        self.offset + i
    }

    fn upper_index(&self, r: usize, k: usize) -> usize {
        debug_assert!(r < k);
        // entries before row r: Σ_{q<r} (d−1−q)
        let before = r * (2 * self.dim - r - 1) / 2;
        self.offset + self.dim + 2 * (before + (k - r - 1))
    }

    /// Variables carrying `Re X[r,k]` and `Im X[r,k]` for `r < k`.
    pub fn off_diag(&self, r: usize, k: usize) -> (usize, usize) {
        let i = self.upper_index(r, k);
        (i, i + 1)
    }

    /// `(var, r, k, coefficient)` such that `X = Σ x_var · coefficient · e_r e_kᴴ`
    /// over the listed positions (both triangles included).
    pub fn basis(&self) -> Vec<(usize, usize, usize, Complex64)> {
        let mut out = Vec::with_capacity(2 * self.num_vars());
        for i in 0..self.dim {
            out.push((self.diag(i), i, i, c(1.0, 0.0)));
        }
        for r in 0..self.dim {
            for k in r + 1..self.dim {
                let (re, im) = self.off_diag(r, k);
                out.push((re, r, k, c(1.0, 0.0)));
                out.push((re, k, r, c(1.0, 0.0)));
                out.push((im, r, k, c(0.0, 1.0)));
                out.push((im, k, r, c(0.0, -1.0)));
            }
        }
        out
    }

    pub fn unpack(&self, x: &[f64]) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (var, r, k, z) in self.basis() {
            m[(r, k)] += z * x[var];
        }
        m
    }

    pub fn pack(&self, m: &CMat, x: &mut [f64]) {
        for i in 0..self.dim {
            x[self.diag(i)] = m[(i, i)].re;
        }
        for r in 0..self.dim {
            for k in r + 1..self.dim {
                let (re, im) = self.off_diag(r, k);
                let z = (m[(r, k)] + m[(k, r)].conj()) * 0.5;
                x[re] = z.re;
                x[im] = z.im;
            }
        }
    }

    /// Adds `X` itself (scaled by `scale`) into `lmi` at `(row0, col0)`.
    pub fn add_to(&self, lmi: &mut ComplexLmi, row0: usize, col0: usize, scale: f64) {
        for (var, r, k, z) in self.basis() {
            lmi.add(Some(var), row0 + r, col0 + k, z * scale);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{min_eig_hermitian, min_eig_symmetric};
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_embeds_to_identity() {
        let e = hermitian_embedding(&ComplexLmi::from_dense(&CMat::identity(2, 2))).unwrap();
        assert_eq!(e.evaluate(&[]), DMatrix::identity(4, 4));
    }

    #[test]
    fn embedding_doubles_spectrum() {
        let h = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)]);
        let e = hermitian_embedding(&ComplexLmi::from_dense(&h)).unwrap().evaluate(&[]);
        let mut ev: Vec<f64> = SymmetricEigen::new(e).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (got, want) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn embedding_preserves_min_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let a = CMat::from_fn(5, 5, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let h = &a * a.adjoint();
            let e = hermitian_embedding(&ComplexLmi::from_dense(&h)).unwrap().evaluate(&[]);
            assert!((min_eig_symmetric(&e) - min_eig_hermitian(&h)).abs() < 1e-12);
        }
    }

    #[test]
    fn embedding_rejects_non_hermitian() {
        let mut lmi = ComplexLmi::new(2);
        lmi.add(Some(0), 0, 1, c(1.0, 0.0));
        assert!(matches!(hermitian_embedding(&lmi), Err(Error::Argument(_))));
        let mut lmi = ComplexLmi::new(2);
        lmi.add(None, 1, 1, c(1.0, 0.5));
        assert!(hermitian_embedding(&lmi).is_err());
    }

    #[test]
    fn embedding_is_affine_in_variables() {
        let p = HermitianParam::new(0, 3);
        let mut lmi = ComplexLmi::new(3);
        p.add_to(&mut lmi, 0, 0, 1.0);
        let e = hermitian_embedding(&lmi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
        let h = p.unpack(&x);
        let want = hermitian_embedding(&ComplexLmi::from_dense(&h)).unwrap().evaluate(&[]);
        assert!((e.evaluate(&x) - want).abs().max() < 1e-15);
    }

    #[test]
    fn hermitian_param_round_trip() {
        let p = HermitianParam::new(4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = CMat::from_fn(4, 4, |_, _| c(rng.random::<f64>(), rng.random::<f64>()));
        let h = &a + a.adjoint();
        let mut x = vec![0.0; p.end()];
        p.pack(&h, &mut x);
        assert!(crate::linalg::max_abs(&(p.unpack(&x) - h)) < 1e-15);
        let mut seen: Vec<usize> = p.basis().iter().map(|b| b.0).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen, (4..20).collect::<Vec<_>>());
    }

    #[test]
    fn problem_dump_round_trip() {
        let mut p = SdpProblem::new(1);
        p.objective[0] = 1.0;
        let mut b = LmiBlock::new(2);
        b.add_coefficient(0, 0, 0, 1.0);
        b.add_coefficient(0, 1, 1, 1.0);
        b.add_constant(0, 1, 1.0);
        p.lmi_blocks.push(b);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        p.dump(&path).unwrap();
        assert_eq!(SdpProblem::load(&path).unwrap(), p);
    }

    #[test]
    fn validation_catches_bad_indices() {
        let mut p = SdpProblem::new(1);
        let mut b = LmiBlock::new(2);
        b.add_coefficient(3, 0, 0, 1.0);
        p.lmi_blocks.push(b);
        assert!(p.validate().is_err());
        let mut p = SdpProblem::new(1);
        let mut b = LmiBlock::new(2);
        b.add_constant(0, 2, 1.0);
        p.lmi_blocks.push(b);
        assert!(p.validate().is_err());
        assert!(SdpProblem { num_vars: 2, ..SdpProblem::default() }.validate().is_err());
    }
}
