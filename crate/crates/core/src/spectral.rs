//! Spectral classification of projective maps, dominant subspaces, and
//! boundary dynamics of bi-proximal automorphisms.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMat, CVec};
use crate::projective::{ProjectiveMap, ProjectivePoint};

pub const DEFAULT_TOL: f64 = 1e-8;

/// Relative distance below which computed eigenvalues are treated as one
/// (perturbed) multiple eigenvalue. Defective eigenvalues of multiplicity
/// `m` split by about `ε^{1/m}`.
const EIGEN_MERGE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JordanBlock {
    pub eigenvalue: Complex64,
    pub size: usize,
}

#[derive(Clone, Debug)]
pub struct SpectralData {
    /// Eigenvalue magnitudes in ascending order, scaled so `Π σ_i = 1`.
    pub sigmas: Vec<f64>,
    /// Relative tolerance used for magnitude comparisons: the requested
    /// tolerance, widened to the eigenvalue error bound `n eps ‖A‖_F κ(λ) / |λ|`.
    pub effective_tol: f64,
    pub jordan_blocks: Vec<JordanBlock>,
    /// Largest block size among eigenvalues of top magnitude.
    pub m_plus: usize,
    /// Orthonormal basis (columns) of `E^+`.
    pub e_plus: CMat,
    /// Orthonormal basis (columns) of `E^-`.
    pub e_minus: CMat,
    pub x_plus: Option<ProjectivePoint>,
    pub x_minus: Option<ProjectivePoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClassLabel {
    Proximal,
    BiProximal,
    AlmostUnipotent,
    InverseProximalOnly,
    /// Neither the map nor its inverse is proximal, and some magnitude differs from 1.
    NonProximal,
    Indeterminate,
}

impl ClassLabel {
    pub fn is_proximal(self) -> bool {
        matches!(self, ClassLabel::Proximal | ClassLabel::BiProximal)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

struct Cluster {
    center: Complex64,
    multiplicity: usize,
}

fn cluster_eigenvalues(eigs: &[Complex64]) -> Vec<Cluster> {
    let n = eigs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = eigs[i].norm().max(eigs[j].norm());
            if (eigs[i] - eigs[j]).norm() <= EIGEN_MERGE * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(eigs[i]),
            None => groups.push((r, vec![eigs[i]])),
        }
    }
    groups
        .into_iter()
        .map(|(_, g)| Cluster {
            center: g.iter().sum::<Complex64>() / cr(g.len() as f64),
            multiplicity: g.len(),
        })
        .collect()
}

fn matrix_power(m: &CMat, k: usize) -> CMat {
    let mut acc = CMat::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        acc = &acc * m;
    }
    acc
}

/// Block sizes (descending) at eigenvalue `mu` from nullities of `(A - mu)^k`.
fn jordan_sizes(a: &CMat, mu: Complex64, multiplicity: usize, tol: f64) -> Result<Vec<usize>> {
    if multiplicity == 1 {
        return Ok(vec![1]);
    }
    let n = a.nrows();
    let norm_a = linalg::operator_norm(a).max(1.0);
    let shifted = a - CMat::identity(n, n) * mu;
    let mut nullity = vec![0usize];
    for k in 1..=multiplicity {
        let pk = matrix_power(&shifted, k);
        let thr = tol * norm_a.powi(k as i32);
        nullity.push(n - linalg::rank_above(&pk, thr));
    }
    if nullity[multiplicity] != multiplicity {
        let sv = linalg::singular_values(&matrix_power(&shifted, multiplicity));
        let gap = sv.get(n - multiplicity).copied().unwrap_or(0.0);
        return Err(Error::IllConditioned { tol, gap });
    }
    // Number of blocks of size >= k is nullity[k] - nullity[k-1].
    let mut sizes = Vec::new();
    for k in 1..=multiplicity {
        let at_least_k = nullity[k] - nullity[k - 1];
        let at_least_next = if k < multiplicity { nullity[k + 1] - nullity[k] } else { 0 };
        if at_least_next > at_least_k {
            return Err(Error::IllConditioned { tol, gap: 0.0 });
        }
        for _ in 0..(at_least_k - at_least_next) {
            sizes.push(k);
        }
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    Ok(sizes)
}

fn top_space(a: &CMat, clusters: &[Cluster], blocks: &[Vec<usize>], tol: f64) -> (CMat, usize) {
    let n = a.nrows();
    let top = clusters.iter().map(|c| c.center.norm()).fold(0.0, f64::max);
    let is_top = |c: &Cluster| (top - c.center.norm()) <= tol * top;
    let m_plus = clusters
        .iter()
        .zip(blocks)
        .filter(|(c, _)| is_top(c))
        .map(|(_, b)| b[0])
        .max()
        .unwrap_or(1);
    let mut cols: Vec<CVec> = Vec::new();
    for (c, b) in clusters.iter().zip(blocks) {
        if !is_top(c) || b[0] != m_plus {
            continue;
        }
        let shifted = a - CMat::identity(n, n) * c.center;
        let scale = linalg::operator_norm(a).max(1.0);
        let generalized = smallest_right_singular(&matrix_power(&shifted, c.multiplicity), c.multiplicity);
        if m_plus == 1 {
            cols.extend(generalized.column_iter().map(|col| col.into_owned()));
            continue;
        }
        let image = matrix_power(&shifted, m_plus - 1) * generalized;
        let basis = linalg::column_space(&image, tol * scale.powi(m_plus as i32 - 1) * 10.0);
        cols.extend(basis.column_iter().map(|col| col.into_owned()));
    }
    let basis = linalg::orthonormalize(&cols, 1e-8);
    (linalg::columns_to_matrix(n, &basis), m_plus)
}

/// Right singular vectors of the `k` smallest singular values.
fn smallest_right_singular(m: &CMat, k: usize) -> CMat {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    CMat::from_fn(n, k, |r, c| v_t[(order[c], r)].conj())
}

fn single_point(basis: &CMat) -> Option<ProjectivePoint> {
    if basis.ncols() == 1 {
        ProjectivePoint::new(basis.column(0).into_owned()).ok()
    } else {
        None
    }
}

/// Eigenvalue magnitudes, Jordan structure and dominant subspaces.
pub fn spectral_data(phi: &ProjectiveMap, tol: f64) -> Result<SpectralData> {
    let a = phi.matrix();
    let eff = tol.max(eigen_error_bound(a)).max(eigen_error_bound(phi.inverse().matrix()));
    let (blocks_fwd, mut sigmas, e_plus, m_plus) = analyse(a, eff)?;
    let inv = phi.inverse();
    let (_, _, e_minus, _) = analyse(inv.matrix(), eff)?;
    let log_mean = sigmas.iter().map(|s| s.ln()).sum::<f64>() / sigmas.len() as f64;
    let scale = (-log_mean).exp();
    sigmas.iter_mut().for_each(|s| *s *= scale);
    Ok(SpectralData {
        effective_tol: eff,
        x_plus: single_point(&e_plus),
        x_minus: single_point(&e_minus),
        sigmas,
        jordan_blocks: blocks_fwd,
        m_plus,
        e_plus,
        e_minus,
    })
}

/// Largest relative first-order error `256 n eps ‖A‖_F κ(λ) / |λ|` over simple
/// eigenvalues, with `κ(λ) = 1 / |y^* x|` from the smallest singular pair of `A - λ`.
fn eigen_error_bound(a: &CMat) -> f64 {
    let n = a.nrows();
    let eigs: Vec<Complex64> = match a.clone().schur().eigenvalues() {
        Some(v) => v.iter().cloned().collect(),
        None => return f64::INFINITY,
    };
    let norm_a = a.norm();
    let mut worst: f64 = 0.0;
    for c in cluster_eigenvalues(&eigs).iter().filter(|c| c.multiplicity == 1) {
        let shifted = a - CMat::identity(n, n) * c.center;
        let svd = shifted.svd(true, true);
        let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else { continue };
        let k = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let x = v_t.row(k).adjoint();
        let y = u.column(k);
        let overlap = y.dotc(&x).norm().max(f64::EPSILON);
        worst = worst.max(256.0 * n as f64 * f64::EPSILON * norm_a / (overlap * c.center.norm()));
    }
    worst
}

fn analyse(a: &CMat, tol: f64) -> Result<(Vec<JordanBlock>, Vec<f64>, CMat, usize)> {
    let eigs: Vec<Complex64> = a.clone().schur().eigenvalues().map(|v| v.iter().cloned().collect()).unwrap_or_default();
    if eigs.len() != a.nrows() {
        return Err(Error::IllConditioned { tol, gap: f64::NAN });
    }
    let clusters = cluster_eigenvalues(&eigs);
    let mut all_blocks = Vec::new();
    let mut per_cluster = Vec::new();
    for c in &clusters {
        let sizes = jordan_sizes(a, c.center, c.multiplicity, tol)?;
        all_blocks.extend(sizes.iter().map(|&s| JordanBlock { eigenvalue: c.center, size: s }));
        per_cluster.push(sizes);
    }
    let total: usize = all_blocks.iter().map(|b| b.size).sum();
    if total != a.nrows() {
        return Err(Error::IllConditioned { tol, gap: 0.0 });
    }
    let mut sigmas: Vec<f64> = clusters
        .iter()
        .flat_map(|c| std::iter::repeat(c.center.norm()).take(c.multiplicity))
        .collect();
    sigmas.sort_by(f64::total_cmp);
    for w in sigmas.windows(2) {
        let gap = (w[1] - w[0]) / w[1];
        if gap >= tol && gap <= 10.0 * tol {
            return Err(Error::IllConditioned { tol, gap });
        }
    }
    all_blocks.sort_by(|x, y| x.eigenvalue.norm().total_cmp(&y.eigenvalue.norm()).then(y.size.cmp(&x.size)));
    let (e_plus, m_plus) = top_space(a, &clusters, &per_cluster, tol);
    Ok((all_blocks, sigmas, e_plus, m_plus))
}

fn relative_gap(lo: f64, hi: f64) -> f64 {
    (hi - lo) / hi
}

/// Labels `phi` by the gaps at the top and bottom of its spectrum.
pub fn classify(phi: &ProjectiveMap, tol: f64) -> ClassLabel {
    let sd = match spectral_data(phi, tol) {
        Ok(sd) => sd,
        Err(_) => return ClassLabel::Indeterminate,
    };
    classify_sigmas(&sd.sigmas, sd.effective_tol)
}

/// Classification from ascending magnitudes with `Π σ_i = 1`.
pub fn classify_sigmas(sigmas: &[f64], tol: f64) -> ClassLabel {
    let n = sigmas.len();
    if n < 2 {
        return ClassLabel::AlmostUnipotent;
    }
    if sigmas.iter().all(|s| (s - 1.0).abs() < tol) {
        return ClassLabel::AlmostUnipotent;
    }
    #[derive(PartialEq)]
    enum Gap {
        Tie,
        Split,
        Unclear,
    }
    let judge = |g: f64| {
        if g < tol {
            Gap::Tie
        } else if g > 10.0 * tol {
            Gap::Split
        } else {
            Gap::Unclear
        }
    };
    let top = judge(relative_gap(sigmas[n - 2], sigmas[n - 1]));
    let bottom = judge(relative_gap(sigmas[0], sigmas[1]));
    if top == Gap::Unclear || bottom == Gap::Unclear {
        return ClassLabel::Indeterminate;
    }
    match (top == Gap::Split, bottom == Gap::Split) {
        (true, true) => ClassLabel::BiProximal,
        (true, false) => ClassLabel::Proximal,
        (false, true) => ClassLabel::InverseProximalOnly,
        (false, false) => ClassLabel::NonProximal,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub points: Vec<ProjectivePoint>,
    /// Chordal distance of each iterate to `x^+`.
    pub distances: Vec<f64>,
    pub x_plus: ProjectivePoint,
    pub x_minus: ProjectivePoint,
    /// `σ_d / σ_{d+1}`.
    pub expected_rate: f64,
    /// `exp` of the slope of `log distance` against `k`, fitted where the
    /// distance lies in `[1e-12, 1e-2]`.
    pub fitted_rate: Option<f64>,
    pub fitted_constant: Option<f64>,
    pub contacts_plus: usize,
    pub contacts_minus: usize,
}

impl Trajectory {
    /// Relative deviation of the fitted rate from `σ_d / σ_{d+1}`.
    pub fn rate_error(&self) -> Option<f64> {
        self.fitted_rate.map(|r| (r - self.expected_rate).abs() / self.expected_rate)
    }
}

const FIT_WINDOW: (f64, f64) = (1e-12, 1e-2);
const CONTACT_SAMPLES: usize = 2000;

fn fit_rate(distances: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= FIT_WINDOW.0 && d <= FIT_WINDOW.1)
        .map(|(k, &d)| (k as f64, d.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Some((slope.exp(), (my - slope * mx).exp()))
}

/// Iterates `phi` on a boundary point and fits the convergence rate to `x^+`.
pub fn north_south_iterate(
    domain: &Domain,
    phi: &ProjectiveMap,
    x: &ProjectivePoint,
    m: usize,
    delta: f64,
    tol: f64,
) -> Result<Trajectory> {
    domain.check_automorphism(phi, 64)?;
    let sd = spectral_data(phi, tol)?;
    if classify_sigmas(&sd.sigmas, sd.effective_tol) != ClassLabel::BiProximal {
        return Err(Error::NotBiProximal);
    }
    let (x_plus, x_minus) = match (sd.x_plus.clone(), sd.x_minus.clone()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::NotBiProximal),
    };
    let defect = domain.boundary_defect(x)?;
    if defect > crate::domain::EPS_BD {
        return Err(Error::NotOnBoundary { defect });
    }
    let gap = x.chordal_distance(&x_minus);
    if gap < delta {
        return Err(Error::RepellerTooClose { delta: gap });
    }
    // Snap the numerically computed fixed points onto the boundary before
    // taking tangents.
    let contacts = |p: &ProjectivePoint| -> Result<usize> {
        let on = domain.project_to_boundary(p).unwrap_or_else(|_| p.clone());
        domain.tangent_contact_count(&on, CONTACT_SAMPLES)
    };
    let contacts_plus = contacts(&x_plus)?;
    let contacts_minus = contacts(&x_minus)?;

    let mut points = Vec::with_capacity(m + 1);
    let mut distances = Vec::with_capacity(m + 1);
    let mut cur = x.clone();
    for _ in 0..=m {
        distances.push(cur.chordal_distance(&x_plus));
        let next = phi.apply(&cur);
        points.push(cur);
        cur = next;
    }
    let n = sd.sigmas.len();
    let expected_rate = sd.sigmas[n - 2] / sd.sigmas[n - 1];
    let fit = fit_rate(&distances);
    Ok(Trajectory {
        points,
        distances,
        x_plus,
        x_minus,
        expected_rate,
        fitted_rate: fit.map(|f| f.0),
        fitted_constant: fit.map(|f| f.1),
        contacts_plus,
        contacts_minus,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Recurrence {
    pub min_distance: f64,
    pub at_k: usize,
}

/// `min_{1 <= k <= m_max} d(φ^k y, y)` for `y` in `[E^+]`.
pub fn recurrence_test(phi: &ProjectiveMap, y: &ProjectivePoint, m_max: usize, tol: f64) -> Result<Recurrence> {
    let sd = spectral_data(phi, tol)?;
    let off = linalg::distance_to_span(&sd.e_plus, y.coords());
    if off > 1e-8 {
        return Err(Error::PreconditionViolated(format!("point is {off:e} away from E+")));
    }
    let mut best = Recurrence { min_distance: f64::INFINITY, at_k: 0 };
    let mut cur = y.clone();
    for k in 1..=m_max {
        cur = phi.apply(&cur);
        let d = cur.chordal_distance(y);
        if d < best.min_distance {
            best = Recurrence { min_distance: d, at_k: k };
        }
    }
    Ok(best)
}

/// `diag(h, I_{d-1})`, acting on the chart `[1 : z]` of the distinguished
/// line by `z -> (c + d z) / (a + b z)` for `h = [[a, b], [c, d]]`.
pub fn sl2_action(h: [[f64; 2]; 2], dim: usize) -> Result<ProjectiveMap> {
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if (det - 1.0).abs() > 1e-12 || dim == 0 {
        return Err(Error::DetNotOne { det });
    }
    let mut m = CMat::identity(dim + 1, dim + 1);
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = cr(h[i][j]);
        }
    }
    ProjectiveMap::new(m)
}

/// `h` with `sl2_action(h)` sending `p` to `q` in the upper half-plane of
/// the distinguished line.
pub fn half_plane_transport(p: Complex64, q: Complex64) -> Result<[[f64; 2]; 2]> {
    if !(p.im > 0.0 && q.im > 0.0) {
        return Err(Error::PointOutsideDomain);
    }
    // Möbius matrix taking i to x + i y.
    let to = |z: Complex64| {
        let s = z.im.sqrt();
        [[s, z.re / s], [0.0, 1.0 / s]]
    };
    let from = |z: Complex64| {
        let s = z.im.sqrt();
        [[1.0 / s, -z.re / s], [0.0, s]]
    };
    let (a, b) = (to(q), from(p));
    let mut mm = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            mm[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    // z -> (α z + β)/(γ z + δ) equals z -> (c + d z)/(a + b z) for
    // a = δ, b = γ, c = β, d = α.
    Ok([[mm[1][1], mm[1][0]], [mm[0][1], mm[0][0]]])
}

#[derive(Clone, Debug)]
pub struct StandardForm {
    /// Change of basis `B`.
    pub basis: ProjectiveMap,
    /// `B φ B^{-1}`.
    pub conjugate: ProjectiveMap,
    /// Frobenius mass outside the `(1, 1, d-1)` block pattern, relative to the total.
    pub off_block: f64,
}

/// Coordinates with `x^+ = e_0`, `x^- = e_1` and `H^+ ∩ H^- = span(e_2, ...)`.
pub fn standard_form(domain: &Domain, phi: &ProjectiveMap, tol: f64) -> Result<StandardForm> {
    if matches!(domain, Domain::Planar(_)) {
        return Err(Error::PreconditionViolated("standard form needs a ball or quadric domain".into()));
    }
    domain.check_automorphism(phi, 64)?;
    let sd = spectral_data(phi, tol)?;
    if classify_sigmas(&sd.sigmas, sd.effective_tol) != ClassLabel::BiProximal {
        return Err(Error::NotBiProximal);
    }
    let (xp, xm) = match (sd.x_plus, sd.x_minus) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::NotBiProximal),
    };
    let xp = domain.project_to_boundary(&xp)?;
    let xm = domain.project_to_boundary(&xm)?;
    let fp = domain.tangent_hyperplane(&xp)?;
    let fm = domain.tangent_hyperplane(&xm)?;
    let n = phi.dim() + 1;
    let mut rows = CMat::zeros(2, n);
    rows.set_row(0, &fp.coeffs().transpose());
    rows.set_row(1, &fm.coeffs().transpose());
    let null = linalg::null_space(&rows, 1e-10);
    let projector = &null * null.adjoint();
    let candidates: Vec<CVec> = (0..n)
        .map(|j| {
            let mut e = CVec::zeros(n);
            e[j] = cr(1.0);
            &projector * e
        })
        .collect();
    let w = linalg::orthonormalize(&candidates, 1e-6);
    if w.len() != n - 2 {
        return Err(Error::PreconditionViolated("tangent hyperplanes are degenerate".into()));
    }
    let mut cols = vec![xp.coords().clone(), xm.coords().clone()];
    cols.extend(w);
    let b_inv = linalg::columns_to_matrix(n, &cols);
    let b = b_inv.clone().try_inverse().ok_or(Error::SingularMatrix)?;
    let basis = ProjectiveMap::new(b.clone())?;
    let conj = &b * phi.matrix() * &b_inv;
    let mut off = 0.0;
    for i in 0..n {
        for j in 0..n {
            let same_block = i == j || (i >= 2 && j >= 2);
            if !same_block {
                off += conj[(i, j)].norm_sqr();
            }
        }
    }
    let off_block = (off / conj.norm_squared()).sqrt();
    Ok(StandardForm { basis, conjugate: ProjectiveMap::new(conj)?, off_block })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::QuadricDomain;
    use crate::linalg::c;
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn diag(v: &[f64]) -> ProjectiveMap {
        ProjectiveMap::from_diagonal(&v.iter().map(|&x| cr(x)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn diagonal_example() {
        let sd = spectral_data(&diag(&[2.0, 1.0, 0.5]), DEFAULT_TOL).unwrap();
        for (s, e) in sd.sigmas.iter().zip([0.5, 1.0, 2.0]) {
            assert!((s - e).abs() < 1e-12);
        }
        assert!(sd.jordan_blocks.iter().all(|b| b.size == 1));
        assert_eq!(sd.x_plus.unwrap(), ProjectivePoint::from_real(&[1.0, 0.0, 0.0]).unwrap());
        assert_eq!(sd.x_minus.unwrap(), ProjectivePoint::from_real(&[0.0, 0.0, 1.0]).unwrap());
    }

    #[test]
    fn jordan_block_example() {
        let j = ProjectiveMap::from_real_rows(3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let sd = spectral_data(&j, DEFAULT_TOL).unwrap();
        assert_eq!(sd.m_plus, 3);
        assert_eq!(sd.jordan_blocks.len(), 1);
        assert_eq!(sd.x_plus.unwrap(), ProjectivePoint::from_real(&[1.0, 0.0, 0.0]).unwrap());
        for s in &sd.sigmas {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(classify(&j, DEFAULT_TOL), ClassLabel::AlmostUnipotent);
    }

    #[test]
    fn canonical_labels() {
        assert_eq!(classify(&diag(&[2.0, 0.5, 1.0]), DEFAULT_TOL), ClassLabel::BiProximal);
        assert_eq!(classify(&diag(&[2.0, 2.0, 0.25]), DEFAULT_TOL), ClassLabel::InverseProximalOnly);
        assert_eq!(classify(&diag(&[4.0, 0.5, 0.5]), DEFAULT_TOL), ClassLabel::Proximal);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = ProjectiveMap::new(linalg::random_unitary(4, &mut rng)).unwrap();
        assert_eq!(classify(&u, DEFAULT_TOL), ClassLabel::AlmostUnipotent);
        let band = diag(&[1.0 + 3e-8, 1.0, 0.5]);
        assert_eq!(classify(&band, DEFAULT_TOL), ClassLabel::Indeterminate);
    }

    #[test]
    fn conjugation_moves_fixed_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = ProjectiveMap::new(sampling::random_well_conditioned(3, 50.0, &mut rng)).unwrap();
        let phi = diag(&[2.0, 1.0, 0.5]).conjugate_by(&g);
        let sd = spectral_data(&phi, DEFAULT_TOL).unwrap();
        for (s, e) in sd.sigmas.iter().zip([0.5, 1.0, 2.0]) {
            assert!((s - e).abs() < 1e-8);
        }
        let expect = g.apply(&ProjectivePoint::from_real(&[1.0, 0.0, 0.0]).unwrap());
        assert!(sd.x_plus.unwrap().approx_eq(&expect, 1e-8));
    }

    #[test]
    fn e_minus_is_e_plus_of_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = sampling::random_biproximal_ball_map(2, 0.5, 2.0, &mut rng);
        let a = spectral_data(&phi, DEFAULT_TOL).unwrap();
        let b = spectral_data(&phi.inverse(), DEFAULT_TOL).unwrap();
        assert!(linalg::subspace_gap(&a.e_minus, &b.e_plus) < 1e-8);
    }

    #[test]
    fn half_plane_dynamics() {
        let hp = Domain::Quadric(QuadricDomain::siegel(1));
        let phi = diag(&[1.0, 4.0]);
        let x = ProjectivePoint::from_chart(&[cr(1.0)]);
        let t = north_south_iterate(&hp, &phi, &x, 30, 1e-6, DEFAULT_TOL).unwrap();
        assert_eq!(t.x_plus, ProjectivePoint::from_real(&[0.0, 1.0]).unwrap());
        assert!((t.expected_rate - 0.25).abs() < 1e-12);
        assert!(t.rate_error().unwrap() < 0.01);
        assert_eq!((t.contacts_plus, t.contacts_minus), (1, 1));
        let err = north_south_iterate(&hp, &phi, &ProjectivePoint::from_chart(&[cr(0.0)]), 5, 1e-6, DEFAULT_TOL);
        assert!(matches!(err, Err(Error::RepellerTooClose { .. })));
    }

    #[test]
    fn recurrence_examples() {
        let w = Complex64::from_polar(2.0, TAU / 5.0);
        let phi = ProjectiveMap::from_diagonal(&[w, cr(2.0), cr(0.25)]).unwrap();
        let y = ProjectivePoint::from_real(&[1.0, 1.0, 0.0]).unwrap();
        let r = recurrence_test(&phi, &y, 10, DEFAULT_TOL).unwrap();
        assert_eq!(r.at_k, 5);
        assert!(r.min_distance < 1e-10);
        let generic = ProjectiveMap::from_diagonal(&[Complex64::from_polar(2.0, 2f64.sqrt()), cr(2.0), cr(0.25)]).unwrap();
        assert!(recurrence_test(&generic, &y, 10_000, DEFAULT_TOL).unwrap().min_distance < 0.05);
        let off = ProjectivePoint::from_real(&[1.0, 0.0, 1.0]).unwrap();
        assert!(recurrence_test(&phi, &off, 10, DEFAULT_TOL).is_err());
    }

    #[test]
    fn sl2_examples() {
        assert!(sl2_action([[1.0, 0.0], [0.0, 1.0]], 2).unwrap().approx_eq(&ProjectiveMap::identity(2), 1e-14));
        assert!(matches!(sl2_action([[2.0, 0.0], [0.0, 1.0]], 2), Err(Error::DetNotOne { .. })));
        let siegel = Domain::Quadric(QuadricDomain::siegel(3));
        let psi = sl2_action([[2f64.exp(), 0.0], [0.0, (-2f64).exp()]], 3).unwrap();
        assert!(siegel.check_automorphism(&psi, 100).is_ok());
        assert_eq!(classify(&psi, DEFAULT_TOL), ClassLabel::BiProximal);
        let p = c(0.3, 0.7);
        let q = c(-2.0, 0.1);
        let h = half_plane_transport(p, q).unwrap();
        let m = sl2_action(h, 3).unwrap();
        let img = m.apply(&ProjectivePoint::from_chart(&[p, cr(0.0), cr(0.0)]));
        assert!(img.approx_eq(&ProjectivePoint::from_chart(&[q, cr(0.0), cr(0.0)]), 1e-8));
    }

    #[test]
    fn standard_form_of_siegel_boost_is_identity() {
        let siegel = Domain::Quadric(QuadricDomain::siegel(3));
        let t: f64 = 0.8;
        let phi = diag(&[t.exp(), (-t).exp(), 1.0, 1.0]);
        let sf = standard_form(&siegel, &phi, DEFAULT_TOL).unwrap();
        assert!(sf.basis.approx_eq(&ProjectiveMap::identity(3), 1e-10));
        assert!(sf.off_block < 1e-12);
    }

    #[test]
    fn standard_form_of_conjugated_ball_boost() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ball = Domain::ball(3);
        let phi = sampling::random_biproximal_ball_map(3, 0.4, 1.5, &mut rng);
        let sf = standard_form(&ball, &phi, DEFAULT_TOL).unwrap();
        assert!(sf.off_block < 1e-8, "{}", sf.off_block);
    }
}
