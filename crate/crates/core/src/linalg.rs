//! Dense complex linear-algebra helpers shared by the design and receiver code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Only the Hermitian part of `m` is used.
pub fn eigh_desc(m: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitian_part(m);
    let eig = SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eig_hermitian(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn min_eig_symmetric(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Principal square root of a Hermitian PSD matrix. Eigenvalues below
/// `1e-13` times the largest one (numerical drift) are clamped to zero so
/// that round-off does not surface as spurious rank.
pub fn psd_sqrt(m: &CMat) -> CMat {
    let (vals, vecs) = eigh_desc(m);
    let floor = 1e-13 * vals.first().copied().unwrap_or(0.0).max(0.0);
    let roots = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| c(if l > floor { l.sqrt() } else { 0.0 }, 0.0)),
    );
    let scaled = CMat::from_fn(vecs.nrows(), vecs.ncols(), |r, k| vecs[(r, k)] * roots[k]);
    scaled * vecs.adjoint()
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= tol
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace_re(m: &CMat) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

/// Re tr(Aᴴ B) without forming the product.
pub fn re_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |r, k| a[(r / br, k / bc)] * b[(r % br, k % bc)])
}

pub fn real_diag(values: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v, 0.0)),
    ))
}

/// Orthonormal basis for the column space of `m`, discarding directions whose
/// singular value is below `rel_tol` times the largest one.
pub fn column_basis(m: &CMat, rel_tol: f64) -> CMat {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return CMat::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return CMat::zeros(n, 0);
    }
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > rel_tol * smax)
        .collect();
    CMat::from_fn(n, keep.len(), |r, k| u[(r, keep[k])])
}

/// Real part of a complex matrix as a real matrix.
pub fn re_part(m: &CMat) -> DMatrix<f64> {
    m.map(|z| z.re)
}

pub fn im_part(m: &CMat) -> DMatrix<f64> {
    m.map(|z| z.im)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| c(x, 0.0))
}
