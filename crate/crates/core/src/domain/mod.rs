//! Model domains: the projective ball, sampled planar Jordan domains, and
//! quadric (Siegel-type) domains `{Im z_1 > H(z)}`.

mod planar;

pub use planar::{periodic_derivative, PlanarDomain, DEFAULT_SAMPLES};

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, c, cr, CMat, CVec};
use crate::projective::{
    intersect_line_hyperplane, DualFunctional, ProjectiveLine, ProjectiveMap, ProjectivePoint,
};

/// Boundary tolerance.
pub const EPS_BD: f64 = 1e-8;

/// Fixed seed for the deterministic boundary and dual samples.
const SAMPLE_SEED: u64 = 0x5eed_0f_d0a1;

const CHART_EPS: f64 = 1e-14;

/// The ball `{[1 : z] : |z| < 1}` in `P(C^{d+1})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BallDomain {
    dim: usize,
}

impl BallDomain {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDomain("ball dimension must be at least 1".into()));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Signature `(1, d)` Hermitian form `v_0 w̄_0 - Σ v_i w̄_i`.
    pub fn form(v: &CVec, w: &CVec) -> Complex64 {
        let mut acc = v[0] * w[0].conj();
        for i in 1..v.len() {
            acc -= v[i] * w[i].conj();
        }
        acc
    }

    /// Homogeneous defining function, negative inside.
    fn defining(&self, v: &CVec) -> f64 {
        -Self::form(v, v).re / v.norm_squared()
    }

    /// `diag(1, -1, ..., -1)`.
    pub fn form_matrix(&self) -> CMat {
        let mut j = CMat::identity(self.dim + 1, self.dim + 1);
        for i in 1..=self.dim {
            j[(i, i)] = cr(-1.0);
        }
        j
    }
}

/// `{[1 : z_1 : z] : Im z_1 > H(z)}` with `H(z) = z^* L z + Re(z^T Q z)`.
///
/// `L` is Hermitian positive definite and dominates `Q` (`H > 0` away from
/// 0). For `d = 1` both matrices are empty and the domain is the upper half-plane.
#[derive(Clone, Debug)]
pub struct QuadricDomain {
    l: CMat,
    q: CMat,
}

impl QuadricDomain {
    pub fn new(l: CMat, q: CMat) -> Result<Self> {
        let n = l.nrows();
        if !l.is_square() || q.shape() != (n, n) {
            return Err(Error::InvalidDomain("L and Q must be square of equal size".into()));
        }
        if !linalg::is_finite(&l) || !linalg::is_finite(&q) {
            return Err(Error::InvalidDomain("non-finite quadric entries".into()));
        }
        let scale = l.norm().max(q.norm()).max(1.0);
        if (&l - l.adjoint()).norm() > 1e-10 * scale {
            return Err(Error::InvalidDomain("L is not Hermitian".into()));
        }
        if (&q - q.transpose()).norm() > 1e-10 * scale {
            return Err(Error::InvalidDomain("Q is not symmetric".into()));
        }
        if n > 0 {
            let herm = (&l + l.adjoint()) * cr(0.5);
            if herm.symmetric_eigen().eigenvalues.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::InvalidDomain("L is not positive definite".into()));
            }
            if real_form_matrix(&l, &q).cholesky().is_none() {
                return Err(Error::InvalidDomain("L(z) > |Q(z)| fails".into()));
            }
        }
        Ok(Self { l, q })
    }

    /// The Siegel model `Im z_1 > |z|^2` of the ball.
    pub fn siegel(dim: usize) -> Self {
        let n = dim.saturating_sub(1);
        Self::new(CMat::identity(n, n), CMat::zeros(n, n)).expect("identity is valid")
    }

    /// Normal form `L = I`, `Q = diag(betas)`.
    pub fn normal_form(betas: &[f64]) -> Result<Self> {
        let n = betas.len();
        let q = CMat::from_diagonal(&CVec::from_iterator(n, betas.iter().map(|&b| cr(b))));
        Self::new(CMat::identity(n, n), q)
    }

    pub fn l_matrix(&self) -> &CMat {
        &self.l
    }

    pub fn q_matrix(&self) -> &CMat {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.l.nrows() + 1
    }

    /// `H(z) = z^* L z + Re(z^T Q z)`.
    pub fn height(&self, z: &[Complex64]) -> f64 {
        quadric_height(&self.l, &self.q, z)
    }

    fn defining(&self, v: &CVec) -> f64 {
        if v[0].norm() <= 1e-300 {
            return 1.0;
        }
        let z: Vec<Complex64> = v.iter().skip(1).map(|x| x / v[0]).collect();
        let scale = 1.0 + z.iter().map(|x| x.norm_sqr()).sum::<f64>();
        (self.height(&z[1..]) - z[0].im) / scale
    }

    fn infinity_point(&self) -> ProjectivePoint {
        let mut v = CVec::zeros(self.dim() + 1);
        v[1] = cr(1.0);
        ProjectivePoint::new(v).expect("nonzero")
    }
}

/// `z^* L z + Re(z^T Q z)`.
pub fn quadric_height(l: &CMat, q: &CMat, z: &[Complex64]) -> f64 {
    let n = l.nrows();
    let mut herm = 0.0;
    let mut sym = c(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            herm += (z[i].conj() * l[(i, j)] * z[j]).re;
            sym += z[i] * q[(i, j)] * z[j];
        }
    }
    herm + sym.re
}

/// Real symmetric matrix `M` with `H(u + iv) = [u; v]^T M [u; v]`.
pub fn real_form_matrix(l: &CMat, q: &CMat) -> DMatrix<f64> {
    let n = l.nrows();
    let a = l.map(|z| z.re);
    let b = l.map(|z| z.im);
    let cm = q.map(|z| z.re);
    let d = q.map(|z| z.im);
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let uu = &a + &cm;
    let vv = &a - &cm;
    let uv = -(&b + &d);
    m.view_mut((0, 0), (n, n)).copy_from(&uu);
    m.view_mut((n, n), (n, n)).copy_from(&vv);
    m.view_mut((0, n), (n, n)).copy_from(&uv);
    m.view_mut((n, 0), (n, n)).copy_from(&uv.transpose());
    (&m + m.transpose()) * 0.5
}

/// A set of functionals nonvanishing on the domain.
#[derive(Clone, Debug)]
pub struct DualSampleSet {
    pub functionals: Vec<DualFunctional>,
}

impl DualSampleSet {
    /// Rank of the matrix whose rows are the sampled functionals.
    pub fn rank(&self) -> usize {
        if self.functionals.is_empty() {
            return 0;
        }
        let n = self.functionals[0].coeffs().len();
        let mut m = CMat::zeros(self.functionals.len(), n);
        for (i, f) in self.functionals.iter().enumerate() {
            m.set_row(i, &f.coeffs().transpose());
        }
        linalg::rank_above(&m, 1e-10)
    }

    /// Smallest `|f(p)|` over the functionals and points (unit representatives).
    pub fn min_abs_on(&self, points: &[ProjectivePoint]) -> f64 {
        let mut worst = f64::INFINITY;
        for f in &self.functionals {
            for p in points {
                worst = worst.min(f.eval(p).norm());
            }
        }
        worst
    }
}

/// The intersection of a domain with a complex line, as a planar domain in
/// the line's chart `t -> [origin + t infinity]`.
#[derive(Clone, Debug)]
pub struct Slice {
    pub domain: PlanarDomain,
    pub line: ProjectiveLine,
}

impl Slice {
    /// Chart coordinate of a point on the slice line.
    pub fn coordinate(&self, p: &ProjectivePoint) -> Result<Complex64> {
        self.line
            .coordinate_of(p)?
            .ok_or_else(|| Error::PreconditionViolated("point is the chart's point at infinity".into()))
    }

    pub fn point(&self, t: Complex64) -> ProjectivePoint {
        self.line.point_at(t)
    }
}

/// Domain tagged union.
#[derive(Clone, Debug)]
pub enum Domain {
    Ball(BallDomain),
    Planar(PlanarDomain),
    Quadric(QuadricDomain),
}

/// Planar domains live in the chart `z -> [z : 1]`.
pub fn planar_point(z: Complex64) -> ProjectivePoint {
    ProjectivePoint::from_slice(&[z, cr(1.0)]).expect("nonzero")
}

pub fn planar_coordinate(p: &ProjectivePoint) -> Option<Complex64> {
    let v = p.coords();
    if v.len() != 2 || v[1].norm() <= CHART_EPS {
        return None;
    }
    Some(v[0] / v[1])
}

impl From<BallDomain> for Domain {
    fn from(b: BallDomain) -> Self {
        Domain::Ball(b)
    }
}

impl From<PlanarDomain> for Domain {
    fn from(p: PlanarDomain) -> Self {
        Domain::Planar(p)
    }
}

impl From<QuadricDomain> for Domain {
    fn from(q: QuadricDomain) -> Self {
        Domain::Quadric(q)
    }
}

impl Domain {
    pub fn ball(dim: usize) -> Self {
        Domain::Ball(BallDomain::new(dim).expect("dim >= 1"))
    }

    /// Projective dimension `d`.
    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball(b) => b.dim(),
            Domain::Planar(_) => 1,
            Domain::Quadric(q) => q.dim(),
        }
    }

    fn check_dim(&self, p: &ProjectivePoint) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: p.dim() });
        }
        Ok(())
    }

    /// Strict membership.
    pub fn contains(&self, p: &ProjectivePoint) -> Result<bool> {
        self.check_dim(p)?;
        match self {
            Domain::Ball(_) => {
                let z = p.chart().ok_or(Error::OutsideChart)?;
                Ok(z.iter().map(|x| x.norm_sqr()).sum::<f64>() < 1.0)
            }
            Domain::Planar(d) => {
                let z = planar_coordinate(p).ok_or(Error::OutsideChart)?;
                Ok(d.contains_point(z))
            }
            Domain::Quadric(q) => {
                let z = p.chart().ok_or(Error::OutsideChart)?;
                Ok(z[0].im > q.height(&z[1..]))
            }
        }
    }

    /// Like [`Domain::contains`] but treats chart errors as "outside".
    pub fn contains_lenient(&self, p: &ProjectivePoint) -> bool {
        self.contains(p).unwrap_or(false)
    }

    /// Sign-carrying defining function on raw vectors (negative inside).
    pub fn defining_value(&self, v: &CVec) -> f64 {
        match self {
            Domain::Ball(b) => b.defining(v),
            Domain::Planar(d) => {
                if v[1].norm() <= CHART_EPS * v.norm() {
                    return 1.0;
                }
                if d.contains_point(v[0] / v[1]) {
                    -1.0
                } else {
                    1.0
                }
            }
            Domain::Quadric(q) => q.defining(v),
        }
    }

    /// Distance-like measure of how far `x` is from the boundary.
    pub fn boundary_defect(&self, x: &ProjectivePoint) -> Result<f64> {
        self.check_dim(x)?;
        match self {
            Domain::Ball(_) => {
                let z = x.chart().ok_or(Error::OutsideChart)?;
                Ok((z.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs())
            }
            Domain::Planar(d) => {
                let z = planar_coordinate(x).ok_or(Error::OutsideChart)?;
                let k = d.nearest_sample(z);
                // Distance to the Hermite curve near the nearest sample.
                let mut best = (d.points()[k] - z).norm();
                for i in 0..=64 {
                    let pos = k as f64 - 1.0 + 2.0 * i as f64 / 64.0;
                    best = best.min((d.boundary_at(pos) - z).norm());
                }
                Ok(best)
            }
            Domain::Quadric(q) => {
                if x.approx_eq(&q.infinity_point(), 1e-12) {
                    return Ok(0.0);
                }
                let z = x.chart().ok_or(Error::OutsideChart)?;
                let scale = 1.0 + z.iter().map(|w| w.norm_sqr()).sum::<f64>();
                Ok((z[0].im - q.height(&z[1..])).abs() / scale)
            }
        }
    }

    pub fn is_on_boundary(&self, x: &ProjectivePoint) -> bool {
        matches!(self.boundary_defect(x), Ok(d) if d <= EPS_BD)
    }

    /// Nearest boundary point in the domain's natural chart.
    pub fn project_to_boundary(&self, p: &ProjectivePoint) -> Result<ProjectivePoint> {
        self.check_dim(p)?;
        match self {
            Domain::Ball(_) => {
                let z = p.chart().ok_or(Error::OutsideChart)?;
                let r = z.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
                if r == 0.0 {
                    return Err(Error::PreconditionViolated("centre has no nearest boundary point".into()));
                }
                let zs: Vec<Complex64> = z.iter().map(|w| w / r).collect();
                Ok(ProjectivePoint::from_chart(&zs))
            }
            Domain::Planar(d) => {
                let z = planar_coordinate(p).ok_or(Error::OutsideChart)?;
                let k = d.nearest_sample(z);
                let mut best = d.points()[k];
                for i in 0..=256 {
                    let pos = k as f64 - 1.0 + 2.0 * i as f64 / 256.0;
                    let b = d.boundary_at(pos);
                    if (b - z).norm() < (best - z).norm() {
                        best = b;
                    }
                }
                Ok(planar_point(best))
            }
            Domain::Quadric(q) => {
                if p.approx_eq(&q.infinity_point(), 1e-9) {
                    return Ok(q.infinity_point());
                }
                let mut z = p.chart().ok_or(Error::OutsideChart)?;
                let h = q.height(&z[1..]);
                z[0] = c(z[0].re, h);
                Ok(ProjectivePoint::from_chart(&z))
            }
        }
    }

    /// The complex tangent hyperplane at a boundary point.
    pub fn tangent_hyperplane(&self, x: &ProjectivePoint) -> Result<DualFunctional> {
        let defect = self.boundary_defect(x)?;
        if defect > EPS_BD {
            return Err(Error::NotOnBoundary { defect });
        }
        match self {
            Domain::Ball(_) => {
                let z = x.chart().ok_or(Error::OutsideChart)?;
                let mut coeffs = Vec::with_capacity(z.len() + 1);
                coeffs.push(cr(-1.0));
                coeffs.extend(z.iter().map(|w| w.conj()));
                DualFunctional::from_slice(&coeffs)
            }
            Domain::Planar(_) => {
                let b = planar_coordinate(x).ok_or(Error::OutsideChart)?;
                DualFunctional::from_slice(&[cr(1.0), -b])
            }
            Domain::Quadric(q) => {
                let n = q.dim() + 1;
                if x.approx_eq(&q.infinity_point(), 1e-12) {
                    let mut coeffs = CVec::zeros(n);
                    coeffs[0] = cr(1.0);
                    return DualFunctional::new(coeffs);
                }
                let z = x.chart().ok_or(Error::OutsideChart)?;
                let zv = &z[1..];
                let m = zv.len();
                let mut grad = vec![c(0.0, 0.5)];
                for j in 0..m {
                    let mut g = c(0.0, 0.0);
                    for a in 0..m {
                        g += zv[a].conj() * q.l[(a, j)] + q.q[(j, a)] * zv[a];
                    }
                    grad.push(g);
                }
                let offset: Complex64 = grad.iter().zip(&z).map(|(g, w)| g * w).sum();
                let mut coeffs = CVec::zeros(n);
                coeffs[0] = -offset;
                for (j, g) in grad.into_iter().enumerate() {
                    coeffs[j + 1] = g;
                }
                DualFunctional::new(coeffs)
            }
        }
    }

    /// A functional whose kernel misses the closed domain. For the ball it is
    /// the form-dual of `center`, which makes slices through `center` round
    /// disks centred at the chart origin.
    pub fn interior_functional(&self, center: &ProjectivePoint) -> DualFunctional {
        match self {
            Domain::Ball(_) => {
                let v = center.coords();
                let coeffs: Vec<Complex64> = v
                    .iter()
                    .enumerate()
                    .map(|(i, z)| if i == 0 { z.conj() } else { -z.conj() })
                    .collect();
                DualFunctional::from_slice(&coeffs).expect("nonzero")
            }
            Domain::Planar(_) => DualFunctional::from_real(&[0.0, 1.0]).expect("nonzero"),
            Domain::Quadric(q) => {
                let mut coeffs = CVec::zeros(q.dim() + 1);
                coeffs[0] = c(0.0, 1.0);
                coeffs[1] = cr(1.0);
                DualFunctional::new(coeffs).expect("nonzero")
            }
        }
    }

    /// `n` deterministic boundary points (seeded).
    pub fn boundary_samples(&self, n: usize, seed: u64) -> Vec<ProjectivePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            Domain::Ball(b) => (0..n)
                .map(|_| {
                    let mut z = linalg::random_complex_vector(b.dim(), &mut rng);
                    z /= cr(z.norm());
                    ProjectivePoint::from_chart(z.as_slice())
                })
                .collect(),
            Domain::Planar(d) => {
                let m = d.len();
                (0..n).map(|k| planar_point(d.points()[(k * m / n.max(1)) % m])).collect()
            }
            Domain::Quadric(q) => {
                let mut out = Vec::with_capacity(n);
                if n > 0 {
                    out.push(q.infinity_point());
                }
                while out.len() < n {
                    let zv: Vec<Complex64> =
                        (0..q.dim() - 1).map(|_| linalg::random_complex_normal(&mut rng)).collect();
                    let x: f64 = rng.sample(StandardNormal);
                    let mut z = vec![c(x, q.height(&zv))];
                    z.extend(zv);
                    out.push(ProjectivePoint::from_chart(&z));
                }
                out
            }
        }
    }

    /// `n` deterministic interior points (seeded), kept away from the boundary.
    pub fn interior_samples(&self, n: usize, seed: u64) -> Vec<ProjectivePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            Domain::Ball(b) => (0..n)
                .map(|_| {
                    let mut z = linalg::random_complex_vector(b.dim(), &mut rng);
                    let r = 0.9 * rng.random::<f64>().powf(1.0 / (2 * b.dim()) as f64);
                    z *= cr(r / z.norm());
                    ProjectivePoint::from_chart(z.as_slice())
                })
                .collect(),
            Domain::Planar(d) => d.interior_samples(n, seed, 0.02).into_iter().map(planar_point).collect(),
            Domain::Quadric(q) => (0..n)
                .map(|_| {
                    let zv: Vec<Complex64> = (0..q.dim() - 1)
                        .map(|_| linalg::random_complex_normal(&mut rng) * 0.7)
                        .collect();
                    let x: f64 = rng.sample(StandardNormal);
                    let e: f64 = rng.sample(StandardNormal);
                    let y = q.height(&zv) + 0.05 + 0.5 * (0.5 * e).exp();
                    let mut z = vec![c(x, y)];
                    z.extend(zv);
                    ProjectivePoint::from_chart(&z)
                })
                .collect(),
        }
    }

    /// Functionals nonvanishing on the domain, each annihilating a boundary point.
    ///
    /// Planar: `z_1 - b z_2` for `n` boundary samples `b` plus `z_2` (the point
    /// at infinity). Ball: tangent functionals at `n` boundary points.
    /// Quadric: tangent functionals at `n` boundary points plus `z_0`.
    pub fn dual_samples(&self, n: usize) -> DualSampleSet {
        let functionals = match self {
            Domain::Ball(b) => {
                let pts: Vec<ProjectivePoint> = if b.dim() == 1 {
                    (0..n)
                        .map(|k| ProjectivePoint::from_chart(&[Complex64::from_polar(1.0, TAU * k as f64 / n as f64)]))
                        .collect()
                } else {
                    self.boundary_samples(n, SAMPLE_SEED)
                };
                pts.iter().map(|x| self.tangent_hyperplane(x).expect("sample is on the boundary")).collect()
            }
            Domain::Planar(d) => {
                let m = d.len();
                let mut fs: Vec<DualFunctional> = (0..n)
                    .map(|k| {
                        let b = d.points()[(k * m / n.max(1)) % m];
                        DualFunctional::from_slice(&[cr(1.0), -b]).expect("nonzero")
                    })
                    .collect();
                fs.push(DualFunctional::from_real(&[0.0, 1.0]).expect("nonzero"));
                fs
            }
            Domain::Quadric(q) => {
                let mut pts = self.boundary_samples(n + 1, SAMPLE_SEED);
                // Index 0 is the point at infinity, whose tangent is z_0.
                let inf = pts.remove(0);
                let mut fs: Vec<DualFunctional> = pts
                    .iter()
                    .map(|x| self.tangent_hyperplane(x).expect("sample is on the boundary"))
                    .collect();
                fs.push(self.tangent_hyperplane(&inf).expect("infinity is on the boundary"));
                let _ = q;
                fs
            }
        };
        DualSampleSet { functionals }
    }

    /// Boundary samples lying on the tangent hyperplane at `x`, out of `n`
    /// samples that include `x` itself.
    pub fn tangent_contact_count(&self, x: &ProjectivePoint, n: usize) -> Result<usize> {
        let f = self.tangent_hyperplane(x)?;
        let mut samples = vec![x.clone()];
        samples.extend(
            self.boundary_samples(n.saturating_sub(1), SAMPLE_SEED ^ 0xc0_7ac7)
                .into_iter()
                .filter(|b| b.chordal_distance(x) > 1e-12),
        );
        Ok(count_contacts(&f, &samples, EPS_BD))
    }

    /// Checks that `phi` and its inverse map sampled interior points inside.
    pub fn check_automorphism(&self, phi: &ProjectiveMap, samples: usize) -> Result<()> {
        if phi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: phi.dim() });
        }
        let inv = phi.inverse();
        for (k, p) in self.interior_samples(samples, SAMPLE_SEED ^ 0xa070).iter().enumerate() {
            if !self.contains_lenient(&phi.apply(p)) {
                return Err(Error::NotAnAutomorphism(format!("sample {k} leaves the domain")));
            }
            if !self.contains_lenient(&inv.apply(p)) {
                return Err(Error::NotAnAutomorphism(format!("inverse moves sample {k} outside")));
            }
        }
        Ok(())
    }

    /// Finds an interior point on `line`, trying the chart origin first.
    fn interior_point_on(&self, line: &ProjectiveLine) -> Result<ProjectivePoint> {
        if self.contains_lenient(line.origin()) {
            return Ok(line.origin().clone());
        }
        for ring in 0..48 {
            let r = 10f64.powf(-3.0 + ring as f64 / 8.0);
            for k in 0..64 {
                let t = Complex64::from_polar(r, TAU * (k as f64 + 0.5 * (ring % 2) as f64) / 64.0);
                let p = line.point_at(t);
                if self.contains_lenient(&p) {
                    return Ok(p);
                }
            }
        }
        Err(Error::EmptySlice)
    }

    /// `Ω ∩ L` as a planar domain, boundary located by ray bisection from an
    /// interior point, `m` samples.
    pub fn slice(&self, line: &ProjectiveLine, m: usize) -> Result<Slice> {
        if line.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: line.dim() });
        }
        let center = self.interior_point_on(line)?;
        let f = self.interior_functional(&center);
        let infinity = intersect_line_hyperplane(line, &f)?;
        let chart = line.rebased(center, infinity)?;

        if let Domain::Planar(d) = self {
            // Chart is [z_c + t : 1], a translation of the planar coordinate.
            let zc = planar_coordinate(chart.origin()).ok_or(Error::OutsideChart)?;
            let e = chart.at_infinity().coords();
            let o = chart.origin().coords();
            // t-coordinate of z: [z:1] = [o + t e] with e = [1:0] up to phase.
            let scale = e[0] / o[1];
            let domain = d.map_holomorphic(|b| (b - zc) / scale, |_| cr(1.0) / scale)?;
            return Ok(Slice { domain, line: chart });
        }

        let o = chart.origin().coords().clone();
        let e = chart.at_infinity().coords().clone();
        let radius = |theta: f64| -> Result<f64> {
            let dir = Complex64::from_polar(1.0, theta);
            let inside = |r: f64| self.defining_value(&(&o + &e * (dir * r))) < 0.0;
            let mut hi = 1.0;
            let mut doublings = 0;
            while inside(hi) {
                hi *= 2.0;
                doublings += 1;
                if doublings > 64 {
                    return Err(Error::InvalidDomain("slice is unbounded in its chart".into()));
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if inside(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            Ok(0.5 * (lo + hi))
        };
        let thetas: Vec<f64> = (0..m).map(|k| TAU * k as f64 / m as f64).collect();
        let radii: Vec<f64> = thetas.iter().map(|&t| radius(t)).collect::<Result<_>>()?;
        let radii_c: Vec<Complex64> = radii.iter().map(|&r| cr(r)).collect();
        let dr = periodic_derivative(&radii_c);
        let points = thetas.iter().zip(&radii).map(|(&t, &r)| Complex64::from_polar(r, t)).collect();
        let tangents = thetas
            .iter()
            .zip(radii.iter().zip(&dr))
            .map(|(&t, (&r, d))| (cr(d.re) + c(0.0, r)) * Complex64::from_polar(1.0, t))
            .collect();
        let domain = PlanarDomain::new(points, tangents)?;
        Ok(Slice { domain, line: chart })
    }
}

/// Number of samples `b` with `|f(b)| < eps` (unit representatives).
pub fn count_contacts(f: &DualFunctional, samples: &[ProjectivePoint], eps: f64) -> usize {
    samples.iter().filter(|b| f.eval(b).norm() < eps).count()
}

/// Circularity of a closed sampled curve: ratio of the largest to smallest
/// distance from the least-squares (Kåsa) circle centre.
pub fn circularity(points: &[Complex64]) -> f64 {
    // Fit x^2 + y^2 + D x + E y + F = 0.
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for p in points {
        let row = nalgebra::Vector3::new(p.re, p.im, 1.0);
        ata += row * row.transpose();
        atb += row * (-(p.re * p.re + p.im * p.im));
    }
    let sol = ata.lu().solve(&atb).unwrap_or_else(nalgebra::Vector3::zeros);
    let center = c(-sol[0] / 2.0, -sol[1] / 2.0);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for p in points {
        let r = (p - center).norm();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::line_through;

    fn chart(z: &[Complex64]) -> ProjectivePoint {
        ProjectivePoint::from_chart(z)
    }

    #[test]
    fn ball_contains_examples() {
        let b = Domain::ball(2);
        assert!(b.contains(&chart(&[cr(0.0), cr(0.0)])).unwrap());
        assert!(!b.contains(&chart(&[cr(1.0), cr(0.0)])).unwrap());
        let at_inf = ProjectivePoint::from_real(&[0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(b.contains(&at_inf), Err(Error::OutsideChart)));
    }

    #[test]
    fn ball_tangent_example() {
        let b = Domain::ball(3);
        let x = chart(&[cr(1.0), cr(0.0), cr(0.0)]);
        let f = b.tangent_hyperplane(&x).unwrap();
        let expected = DualFunctional::from_real(&[-1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(f.approx_eq(&expected, 1e-14));
        assert!(matches!(
            b.tangent_hyperplane(&chart(&[cr(0.5), cr(0.0), cr(0.0)])),
            Err(Error::NotOnBoundary { .. })
        ));
    }

    #[test]
    fn quadric_tangent_at_origin() {
        let q = Domain::Quadric(QuadricDomain::siegel(3));
        let x = chart(&[cr(0.0), cr(0.0), cr(0.0)]);
        let f = q.tangent_hyperplane(&x).unwrap();
        let expected = DualFunctional::from_real(&[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(f.approx_eq(&expected, 1e-14));
    }

    #[test]
    fn tangent_functionals_avoid_interior() {
        let quad = QuadricDomain::new(
            CMat::from_row_slice(2, 2, &[cr(2.0), c(0.3, 0.2), c(0.3, -0.2), cr(1.0)]),
            CMat::from_row_slice(2, 2, &[c(0.4, 0.1), cr(0.2), cr(0.2), c(-0.1, 0.3)]),
        )
        .unwrap();
        for dom in [Domain::ball(2), Domain::Quadric(quad), Domain::Planar(PlanarDomain::ellipse(1.0, 0.5, 256).unwrap())] {
            let duals = dom.dual_samples(40);
            let interior = dom.interior_samples(200, 9);
            assert_eq!(interior.len(), 200);
            assert!(duals.min_abs_on(&interior) > 0.0);
            for (f, x) in duals.functionals.iter().zip(dom.boundary_samples(40, SAMPLE_SEED)) {
                let _ = (f, x);
            }
            assert_eq!(duals.rank(), dom.dim() + 1);
        }
    }

    #[test]
    fn planar_dual_samples_for_unit_disk() {
        let d = Domain::Planar(PlanarDomain::unit_disk(512));
        let duals = d.dual_samples(4);
        assert_eq!(duals.functionals.len(), 5);
        let expected = [cr(1.0), c(0.0, 1.0), cr(-1.0), c(0.0, -1.0)];
        for (f, b) in duals.functionals.iter().zip(expected) {
            let want = DualFunctional::from_slice(&[cr(1.0), -b]).unwrap();
            assert!(f.approx_eq(&want, 1e-12));
        }
        assert!(duals.functionals[4].approx_eq(&DualFunctional::from_real(&[0.0, 1.0]).unwrap(), 1e-15));
    }

    #[test]
    fn ball_one_dual_samples_vanish_on_boundary() {
        let d = Domain::ball(1);
        let duals = d.dual_samples(2);
        assert_eq!(duals.functionals.len(), 2);
        let pts = [chart(&[cr(1.0)]), chart(&[cr(-1.0)])];
        for (f, x) in duals.functionals.iter().zip(&pts) {
            assert!(f.eval(x).norm() < 1e-14);
        }
    }

    #[test]
    fn coordinate_slice_of_ball_is_unit_disk() {
        let b = Domain::ball(2);
        let line = line_through(&chart(&[cr(0.0), cr(0.0)]), &ProjectivePoint::from_real(&[0.0, 1.0, 0.0]).unwrap()).unwrap();
        let s = b.slice(&line, 256).unwrap();
        for p in s.domain.points() {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oblique_slice_of_ball_is_round() {
        let b = Domain::ball(2);
        let q = ProjectivePoint::from_slice(&[cr(0.0), cr(1.0), cr(1.0)]).unwrap();
        let line = line_through(&chart(&[cr(0.0), cr(0.0)]), &q).unwrap();
        let s = b.slice(&line, 256).unwrap();
        for p in s.domain.points() {
            assert!((p.norm() - 1.0).abs() < 1e-8);
        }
        // Off-centre slices are round too.
        let p = chart(&[c(0.3, 0.1), c(-0.2, 0.4)]);
        let q = chart(&[c(-0.5, 0.2), c(0.1, -0.1)]);
        let s = b.slice(&line_through(&p, &q).unwrap(), 512).unwrap();
        assert!(circularity(s.domain.points()) < 1.0 + 1e-6);
    }

    #[test]
    fn quadric_distinguished_slice_is_half_plane() {
        let q = Domain::Quadric(QuadricDomain::siegel(3));
        let p = chart(&[c(0.0, 1.0), cr(0.0), cr(0.0)]);
        let r = chart(&[c(2.0, 3.0), cr(0.0), cr(0.0)]);
        let s = q.slice(&line_through(&p, &r).unwrap(), 256).unwrap();
        // Every slice boundary point maps to a real number in the z_1 chart.
        for &t in s.domain.points() {
            let Some(z) = s.point(t).affine(0, 1e-6) else { continue };
            assert!(z[0].im.abs() < 1e-9 * (1.0 + z[0].norm_sqr()), "{:?}", z[0]);
            assert!(z[1].norm() < 1e-12 && z[2].norm() < 1e-12);
        }
    }

    #[test]
    fn contact_counts() {
        let b = Domain::ball(2);
        let x = chart(&[c(0.6, 0.0), c(0.0, 0.8)]);
        assert_eq!(b.tangent_contact_count(&x, 10_000).unwrap(), 1);
        let q = Domain::Quadric(QuadricDomain::siegel(3));
        assert_eq!(q.tangent_contact_count(&chart(&[cr(0.0), cr(0.0), cr(0.0)]), 2000).unwrap(), 1);
    }

    #[test]
    fn bidisk_face_has_many_contacts() {
        // D x D has the flat face {1} x D on the hyperplane z_1 = z_0.
        let mut samples = Vec::new();
        for i in 0..32 {
            let a = Complex64::from_polar(1.0, TAU * i as f64 / 32.0);
            for j in 0..8 {
                let w = Complex64::from_polar(0.9 * j as f64 / 8.0, 0.7 * j as f64);
                samples.push(chart(&[a, w]));
                samples.push(chart(&[w, a]));
            }
        }
        let f = DualFunctional::from_real(&[-1.0, 1.0, 0.0]).unwrap();
        assert!(count_contacts(&f, &samples, EPS_BD) > 1);
    }

    #[test]
    fn contains_is_invariant_under_ball_automorphisms() {
        use rand::SeedableRng;
        let b = Domain::ball(2);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..100 {
            let phi = crate::sampling::random_ball_automorphism(2, 1.5, &mut rng);
            let p = chart(&[
                linalg::random_complex_normal(&mut rng) * 0.8,
                linalg::random_complex_normal(&mut rng) * 0.8,
            ]);
            let before = b.contains(&p).unwrap();
            let after = b.contains(&phi.apply(&p)).unwrap();
            let margin = (1.0 - p.chart().unwrap().iter().map(|z| z.norm_sqr()).sum::<f64>()).abs();
            if margin > 1e-9 {
                assert_eq!(before, after, "trial {trial}");
            }
        }
    }

    #[test]
    fn quadric_validation() {
        assert!(QuadricDomain::normal_form(&[0.3, 0.0]).is_ok());
        assert!(QuadricDomain::normal_form(&[1.0]).is_err());
        let not_herm = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.5), cr(0.0), cr(1.0)]);
        assert!(QuadricDomain::new(not_herm, CMat::zeros(2, 2)).is_err());
    }
}
