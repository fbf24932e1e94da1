//! Small dense complex linear-algebra helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Number of singular values strictly above `threshold`.
pub fn rank_above(m: &CMat, threshold: f64) -> usize {
    singular_values(m).into_iter().filter(|&s| s > threshold).count()
}

/// Orthonormal basis (as columns) of the right null space, using singular
/// values at or below `threshold`.
pub fn null_space(m: &CMat, threshold: f64) -> CMat {
    let n = m.ncols();
    let rows = m.nrows().max(n);
    let mut padded = CMat::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let cols: Vec<CVec> = (0..n)
        .filter(|&i| svd.singular_values[i] <= threshold)
        .map(|i| v_t.row(i).adjoint())
        .collect();
    columns_to_matrix(n, &cols)
}

/// Orthonormal basis of the column space, keeping singular values above `threshold`.
pub fn column_space(m: &CMat, threshold: f64) -> CMat {
    let n = m.nrows();
    if m.ncols() == 0 {
        return CMat::zeros(n, 0);
    }
    let cols_needed = m.ncols().max(n);
    let mut padded = CMat::zeros(n, cols_needed);
    padded.view_mut((0, 0), (n, m.ncols())).copy_from(m);
    let svd = padded.svd(true, false);
    let u = svd.u.expect("requested U");
    let cols: Vec<CVec> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > threshold)
        .map(|i| u.column(i).into_owned())
        .collect();
    columns_to_matrix(n, &cols)
}

pub fn columns_to_matrix(nrows: usize, cols: &[CVec]) -> CMat {
    let mut out = CMat::zeros(nrows, cols.len());
    for (j, col) in cols.iter().enumerate() {
        out.set_column(j, col);
    }
    out
}

/// Gram-Schmidt with one re-orthogonalization pass. Columns whose residual
/// falls below `tol` are dropped.
pub fn orthonormalize(cols: &[CVec], tol: f64) -> Vec<CVec> {
    let mut basis: Vec<CVec> = Vec::with_capacity(cols.len());
    for v in cols {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&w);
                w -= b * proj;
            }
        }
        let norm = w.norm();
        if norm > tol * v.norm().max(1e-300) && norm > 0.0 {
            basis.push(w / Complex64::new(norm, 0.0));
        }
    }
    basis
}

/// Distance from `v` to the span of the orthonormal columns of `basis`.
pub fn distance_to_span(basis: &CMat, v: &CVec) -> f64 {
    let coeffs = basis.adjoint() * v;
    (v - basis * coeffs).norm()
}

/// Largest principal angle (as sine) between two subspaces with orthonormal
/// column bases of equal dimension.
pub fn subspace_gap(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    let mut worst: f64 = 0.0;
    for j in 0..a.ncols() {
        worst = worst.max(distance_to_span(b, &a.column(j).into_owned()));
    }
    for j in 0..b.ncols() {
        worst = worst.max(distance_to_span(a, &b.column(j).into_owned()));
    }
    worst
}

pub fn determinant(m: &CMat) -> Complex64 {
    m.clone().lu().determinant()
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Inverse square root of a Hermitian positive-definite matrix. Returns
/// `None` when the smallest eigenvalue is not positive.
pub fn hermitian_inv_sqrt(m: &CMat) -> Option<CMat> {
    let n = m.nrows();
    if n == 0 {
        return Some(CMat::zeros(0, 0));
    }
    let herm = (m + m.adjoint()) * cr(0.5);
    let eig = herm.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return None;
    }
    let d = CMat::from_diagonal(&CVec::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&l| cr(1.0 / l.sqrt())),
    ));
    Some(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

pub fn random_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_complex_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    CVec::from_iterator(n, (0..n).map(|_| random_complex_normal(rng)))
}

pub fn random_complex_matrix<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> CMat {
    CMat::from_fn(n, m, |_, _| random_complex_normal(rng))
}

/// Haar-distributed unitary matrix (QR of a Ginibre matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let g = random_complex_matrix(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { cr(1.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Embed `block` on the diagonal starting at (offset, offset) of an identity.
pub fn embed_block(n: usize, offset: usize, block: &CMat) -> CMat {
    let mut out = CMat::identity(n, n);
    out.view_mut((offset, offset), (block.nrows(), block.ncols())).copy_from(block);
    out
}
