//! Hessian quadrics of scaling-invariant boundary graphs and their normal
//! form `Σ |z_j|^2 + Re(Σ β_j z_j^2)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{circularity, quadric_height, real_form_matrix, Domain, QuadricDomain};
use crate::error::{Error, Result};
use crate::linalg::{self, c, cr, CMat, CVec};
use crate::projective::{line_through, ProjectivePoint};

/// Finite-difference step for the Hessian.
pub const FD_STEP: f64 = 1e-4;
pub const DEFAULT_BALL_TOL: f64 = 1e-6;
const TAKAGI_RESIDUAL: f64 = 1e-8;

/// `a_t (x, z) = (e^{-2t} x, e^{-t} z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingAction {
    pub t: f64,
}

impl ScalingAction {
    pub fn apply(&self, x: f64, z: &[Complex64]) -> (f64, Vec<Complex64>) {
        let s = (-self.t).exp();
        (x * s * s, z.iter().map(|w| w * s).collect())
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { t: self.t + other.t }
    }
}

/// A sample point `(x, z)` of the boundary graph domain.
pub type GraphPoint = (f64, Vec<Complex64>);

/// Seeded points with `x ∈ [-1, 1]` and `z` in the unit ball of `C^m`.
pub fn unit_grid(m: usize, n: usize, seed: u64) -> Vec<GraphPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            // Include the x-axis endpoints so x-dependence is always probed.
            let x = match k {
                0 => 1.0,
                1 => -1.0,
                _ => rng.random_range(-1.0..=1.0),
            };
            (x, crate::sampling::random_in_ball(m.max(1), 1.0, &mut rng)[..m].to_vec())
        })
        .collect()
}

/// `max |F(x, z) - e^{2t} F(e^{-2t} x, e^{-t} z)|` over the grid and `t` values.
pub fn scaling_invariance_residual(
    f: &dyn Fn(f64, &[Complex64]) -> f64,
    grid: &[GraphPoint],
    t_values: &[f64],
) -> Result<f64> {
    if grid.len() < 2 || t_values.is_empty() {
        return Err(Error::GridTooCoarse(format!("{} grid points, {} scales", grid.len(), t_values.len())));
    }
    let mut worst: f64 = 0.0;
    for &t in t_values {
        let a = ScalingAction { t };
        for (x, z) in grid {
            let (xs, zs) = a.apply(*x, z);
            let r = (f(*x, z) - (2.0 * t).exp() * f(xs, &zs)).abs();
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

/// `H = 𝓛 + Re(𝒬)`; `betas` is set once the pair is in normal form.
#[derive(Clone, Debug, Serialize)]
pub struct HessianQuadric {
    #[serde(skip)]
    pub l: CMat,
    #[serde(skip)]
    pub q: CMat,
    pub betas: Option<Vec<f64>>,
}

impl HessianQuadric {
    pub fn new(l: CMat, q: CMat) -> Result<Self> {
        let n = l.nrows();
        if !l.is_square() || q.shape() != (n, n) {
            return Err(Error::DimensionMismatch { expected: n, got: q.nrows() });
        }
        if linalg::hermitian_inv_sqrt(&l).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        if n > 0 && real_form_matrix(&l, &q).cholesky().is_none() {
            return Err(Error::NotDominant);
        }
        Ok(Self { l, q, betas: None })
    }

    /// Already-diagonal quadric `L = I`, `Q = diag(betas)`.
    pub fn from_betas(betas: &[f64]) -> Result<Self> {
        if betas.iter().any(|b| !(0.0..1.0).contains(b)) {
            return Err(Error::NotDominant);
        }
        let n = betas.len();
        let q = CMat::from_diagonal(&CVec::from_iterator(n, betas.iter().map(|&b| cr(b))));
        let mut h = Self::new(CMat::identity(n, n), q)?;
        let mut sorted = betas.to_vec();
        sorted.sort_by(f64::total_cmp);
        h.betas = Some(sorted);
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn value(&self, z: &[Complex64]) -> f64 {
        quadric_height(&self.l, &self.q, z)
    }

    /// `min (𝓛(z) - |𝒬(z)|)` over unit vectors `z` in `samples`.
    pub fn min_dominance(&self, samples: &[Vec<Complex64>]) -> f64 {
        samples
            .iter()
            .map(|z| {
                let n: f64 = z.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
                let u: Vec<Complex64> = z.iter().map(|w| w / n).collect();
                let herm = quadric_height(&self.l, &CMat::zeros(self.dim(), self.dim()), &u);
                let mut sym = c(0.0, 0.0);
                for i in 0..self.dim() {
                    for j in 0..self.dim() {
                        sym += u[i] * self.q[(i, j)] * u[j];
                    }
                }
                herm - sym.norm()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn hessian(f: &dyn Fn(f64, &[Complex64]) -> f64, m: usize, h: f64) -> DMatrix<f64> {
    let n = 2 * m;
    let point = |coords: &[f64]| -> Vec<Complex64> { (0..m).map(|j| c(coords[j], coords[m + j])).collect() };
    let eval = |coords: &[f64]| f(0.0, &point(coords));
    let mut out = DMatrix::<f64>::zeros(n, n);
    let mut e = vec![0.0; n];
    let f0 = eval(&e);
    for i in 0..n {
        e[i] = h;
        let fp = eval(&e);
        e[i] = -h;
        let fm = eval(&e);
        e[i] = 0.0;
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in (i + 1)..n {
            let mut corner = |si: f64, sj: f64| {
                e[i] = si * h;
                e[j] = sj * h;
                let v = eval(&e);
                e[i] = 0.0;
                e[j] = 0.0;
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Recovers `(𝓛, 𝒬)` from the Hessian of `F(0, ·)` at the origin.
pub fn extract_quadric(f: &dyn Fn(f64, &[Complex64]) -> f64, m: usize, tol: f64) -> Result<HessianQuadric> {
    let grid = unit_grid(m, 64, 0x5ca1e);
    let residual = scaling_invariance_residual(f, &grid, &[0.5, 1.0, 2.0])?;
    let scale = grid.iter().map(|(x, z)| f(*x, z).abs()).fold(1.0, f64::max);
    if residual > tol * scale {
        return Err(Error::NotScalingInvariant { residual });
    }
    let zero = vec![c(0.0, 0.0); m];
    let dx = (f(FD_STEP, &zero) - f(-FD_STEP, &zero)) / (2.0 * FD_STEP);
    if dx.abs() > tol {
        return Err(Error::XDependence { derivative: dx });
    }
    // Richardson extrapolation of the second differences.
    let coarse = hessian(f, m, FD_STEP);
    let fine = hessian(f, m, FD_STEP / 2.0);
    let hess = (fine * 4.0 - coarse) / 3.0;
    let hess = (&hess + hess.transpose()) * 0.5;
    let muu = hess.view((0, 0), (m, m)).into_owned();
    let mvv = hess.view((m, m), (m, m)).into_owned();
    let muv = hess.view((0, m), (m, m)).into_owned();
    let a = (&muu + &mvv) / 4.0;
    let cm = (&muu - &mvv) / 4.0;
    let d = -(&muv + muv.transpose()) / 4.0;
    let b = -(&muv - muv.transpose()) / 4.0;
    let l = CMat::from_fn(m, m, |i, j| c(a[(i, j)], b[(i, j)]));
    let q = CMat::from_fn(m, m, |i, j| c(cm[(i, j)], d[(i, j)]));
    HessianQuadric::new(l, q)
}

#[derive(Clone, Debug)]
pub struct Diagonalization {
    /// `P` with `H(P w) = Σ |w_j|^2 + Re(Σ β_j w_j^2)`.
    pub basis: CMat,
    pub betas: Vec<f64>,
    pub quadric: HessianQuadric,
}

/// Takagi factorization `Q = V diag(σ) V^T` with `V` unitary, `σ >= 0`.
pub fn takagi(q: &CMat) -> Result<(CMat, Vec<f64>)> {
    let m = q.nrows();
    if m == 0 {
        return Ok((CMat::zeros(0, 0), Vec::new()));
    }
    let cm = q.map(|z| z.re);
    let dm = q.map(|z| z.im);
    let mut real = DMatrix::<f64>::zeros(2 * m, 2 * m);
    real.view_mut((0, 0), (m, m)).copy_from(&cm);
    real.view_mut((0, m), (m, m)).copy_from(&dm);
    real.view_mut((m, 0), (m, m)).copy_from(&dm);
    real.view_mut((m, m), (m, m)).copy_from(&(-&cm));
    let real = (&real + real.transpose()) * 0.5;
    let eig = real.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let scale = linalg::operator_norm(q).max(1.0);
    let zero_tol = 1e-10 * scale;
    let mut cols: Vec<CVec> = Vec::new();
    let mut sigmas = Vec::new();
    for &i in order.iter().take(m) {
        let s = eig.eigenvalues[i];
        if s <= zero_tol {
            break;
        }
        let v = eig.eigenvectors.column(i);
        let cv = CVec::from_fn(m, |r, _| c(v[r], v[m + r]));
        let n = cv.norm();
        cols.push(cv / cr(n));
        sigmas.push(s);
    }
    // Complete with the kernel of Q by complex Gram-Schmidt.
    let mut candidates = cols.clone();
    for j in 0..m {
        let mut e = CVec::zeros(m);
        e[j] = cr(1.0);
        candidates.push(e);
    }
    let basis = linalg::orthonormalize(&candidates, 1e-8);
    if basis.len() != m {
        return Err(Error::TakagiFailure { residual: f64::NAN });
    }
    while sigmas.len() < m {
        sigmas.push(0.0);
    }
    let v = linalg::columns_to_matrix(m, &basis);
    let sig = CMat::from_diagonal(&CVec::from_iterator(m, sigmas.iter().map(|&s| cr(s))));
    let residual = (&v * sig * v.transpose() - q).norm();
    if residual > TAKAGI_RESIDUAL * scale {
        return Err(Error::TakagiFailure { residual });
    }
    Ok((v, sigmas))
}

/// Congruence to `L = I` followed by a Takagi factorization of the
/// transformed `Q`; betas sorted ascending.
pub fn diagonalize_quadric(quad: &HessianQuadric) -> Result<Diagonalization> {
    let m = quad.dim();
    let t = linalg::hermitian_inv_sqrt(&quad.l).ok_or(Error::NotPositiveDefinite)?;
    let q1 = t.transpose() * &quad.q * &t;
    let q1 = (&q1 + q1.transpose()) * cr(0.5);
    let (v, sigmas) = takagi(&q1)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| sigmas[i].total_cmp(&sigmas[j]));
    let betas: Vec<f64> = order.iter().map(|&i| sigmas[i]).collect();
    if betas.iter().any(|&b| !(b < 1.0)) {
        return Err(Error::NotDominant);
    }
    let v_sorted = CMat::from_fn(m, m, |r, k| v[(r, order[k])]);
    let basis = &t * v_sorted.map(|z| z.conj());
    let mut quadric = HessianQuadric::from_betas(&betas)?;
    quadric.betas = Some(betas.clone());
    Ok(Diagonalization { basis, betas, quadric })
}

/// Semi-axes of `{(1 + β) x^2 + (1 - β) y^2 < ε}` along `x` and `y`:
/// `(sqrt(ε / (1 + β)), sqrt(ε / (1 - β)))`.
pub fn slice_ellipse_axes(beta: f64, eps: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&beta) || !(eps > 0.0) {
        return Err(Error::PreconditionViolated(format!("need 0 <= beta < 1 and eps > 0, got {beta}, {eps}")));
    }
    Ok(((eps / (1.0 - beta)).sqrt(), (eps / (1.0 + beta)).sqrt()))
}

#[derive(Clone, Debug, Serialize)]
pub struct BallTest {
    pub betas: Vec<f64>,
    pub is_ball: bool,
    /// Axis ratio `sqrt((1 + β) / (1 - β))` for the largest β.
    pub witness_slice_ratio: f64,
    /// Circularity of the sampled slice at height `ε` in the largest-β direction.
    pub sampled_slice_ratio: f64,
    pub tol: f64,
}

const WITNESS_HEIGHT: f64 = 0.25;
const WITNESS_SAMPLES: usize = 512;

/// `true` iff every β is at most `tol`; cross-checked by slicing the
/// normal-form domain along the largest-β coordinate.
pub fn ball_test(quad: &HessianQuadric, tol: f64) -> Result<BallTest> {
    let betas = quad.betas.clone().ok_or(Error::NotDiagonalized)?;
    let (j, beta) = betas
        .iter()
        .cloned()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    let (a, b) = slice_ellipse_axes(beta, WITNESS_HEIGHT)?;
    let sampled = if betas.is_empty() {
        1.0
    } else {
        witness_slice_circularity(&betas, j, WITNESS_HEIGHT)?
    };
    Ok(BallTest {
        is_ball: beta <= tol,
        witness_slice_ratio: a / b,
        sampled_slice_ratio: sampled,
        betas,
        tol,
    })
}

/// Circularity of the slice of the normal-form domain by the line
/// `{[1 : iε : z e_j]}`.
pub fn witness_slice_circularity(betas: &[f64], j: usize, eps: f64) -> Result<f64> {
    let m = betas.len();
    let dom = Domain::Quadric(QuadricDomain::normal_form(betas)?);
    let mut p = vec![c(0.0, eps)];
    p.extend(std::iter::repeat(c(0.0, 0.0)).take(m));
    let p = ProjectivePoint::from_chart(&p);
    let mut dir = CVec::zeros(m + 2);
    dir[2 + j] = cr(1.0);
    let q = ProjectivePoint::new(dir)?;
    let slice = dom.slice(&line_through(&p, &q)?, WITNESS_SAMPLES)?;
    Ok(circularity(slice.domain.points()))
}

/// Circularity of the slice of a quadric domain through `center` along `direction`.
pub fn slice_circularity(domain: &QuadricDomain, center: &[Complex64], direction: &[Complex64]) -> Result<f64> {
    let dom = Domain::Quadric(domain.clone());
    let p = ProjectivePoint::from_chart(center);
    let mut v = vec![c(0.0, 0.0)];
    v.extend_from_slice(direction);
    let q = ProjectivePoint::from_slice(&v)?;
    let slice = dom.slice(&line_through(&p, &q)?, WITNESS_SAMPLES)?;
    Ok(circularity(slice.domain.points()))
}

/// Seeded pair `(L, Q)` with `L` positive definite and `‖L^{-1/2}ᵀ Q L^{-1/2}‖ < max_beta`.
pub fn random_quadric<R: Rng + ?Sized>(m: usize, max_beta: f64, rng: &mut R) -> (CMat, CMat, Vec<f64>) {
    let g = linalg::random_complex_matrix(m, m, rng);
    let l = &g * g.adjoint() + CMat::identity(m, m) * cr(0.5);
    let mut betas: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * max_beta).collect();
    betas.sort_by(f64::total_cmp);
    let u = linalg::random_unitary(m, rng);
    let d = CMat::from_diagonal(&CVec::from_iterator(m, betas.iter().map(|&b| cr(b))));
    // With L = S^2 (S Hermitian), z = S^{-1} U w gives H = |w|^2 + Re(w^T D w)
    // when Q = S̄ Ū D U^† S.
    let s_inv = linalg::hermitian_inv_sqrt(&l).expect("positive definite");
    let s = s_inv.clone().try_inverse().expect("invertible");
    let q = s.transpose() * u.map(|z| z.conj()) * d * u.adjoint() * &s;
    let q = (&q + q.transpose()) * cr(0.5);
    (l, q, betas)
}
