//! Homogeneous-coordinate arithmetic in `P(C^{d+1})` and its dual.
//!
//! Points and functionals are stored as unit vectors whose first nonzero
//! coordinate is real and positive, so two representatives of the same class
//! compare equal up to rounding. Maps are stored with `|det| = 1`.

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, c, cr, CMat, CVec};

/// Default point-equality tolerance on `1 - |<v, w>|`.
pub const EPS_PT: f64 = 1e-9;
/// Default threshold below which a functional is treated as vanishing.
pub const EPS_EVAL: f64 = 1e-12;

/// Coordinates whose magnitude is below this are skipped when choosing the
/// phase-fixing coordinate.
const PHASE_PIVOT: f64 = 1e-12;

fn normalize(v: CVec) -> Result<CVec> {
    if v.is_empty() || v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::ZeroVector);
    }
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let mut v = v / cr(norm);
    if let Some(pivot) = v.iter().find(|z| z.norm() > PHASE_PIVOT).copied() {
        let phase = pivot.conj() / pivot.norm();
        v *= phase;
    }
    Ok(v)
}

fn serialize_coords<S: Serializer>(v: &CVec, s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
    pairs.serialize(s)
}

/// A point `[v]` of complex projective space.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
pub struct ProjectivePoint {
    #[serde(serialize_with = "serialize_coords")]
    coords: CVec,
}

impl ProjectivePoint {
    pub fn new(coords: CVec) -> Result<Self> {
        Ok(Self { coords: normalize(coords)? })
    }

    pub fn from_slice(coords: &[Complex64]) -> Result<Self> {
        Self::new(CVec::from_column_slice(coords))
    }

    pub fn from_real(coords: &[f64]) -> Result<Self> {
        Self::new(CVec::from_iterator(coords.len(), coords.iter().map(|&x| cr(x))))
    }

    /// The point `[1 : z_1 : ... : z_d]` of the standard affine chart.
    pub fn from_chart(z: &[Complex64]) -> Self {
        let mut v = CVec::zeros(z.len() + 1);
        v[0] = cr(1.0);
        for (i, zi) in z.iter().enumerate() {
            v[i + 1] = *zi;
        }
        Self::new(v).expect("chart point is nonzero")
    }

    /// Unit representative.
    pub fn coords(&self) -> &CVec {
        &self.coords
    }

    /// Projective dimension `d` (the vector has length `d + 1`).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Affine coordinates obtained by dividing by coordinate `index`; `None`
    /// if that coordinate vanishes (relative to `eps`).
    pub fn affine(&self, index: usize, eps: f64) -> Option<Vec<Complex64>> {
        let pivot = self.coords[index];
        if pivot.norm() <= eps {
            return None;
        }
        Some(
            self.coords
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != index)
                .map(|(_, z)| z / pivot)
                .collect(),
        )
    }

    /// Standard chart `[1 : z]`, i.e. divide by the first coordinate.
    pub fn chart(&self) -> Option<Vec<Complex64>> {
        self.affine(0, 1e-14)
    }

    /// `|<v, w>|` for unit representatives; 1 means equal points.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.coords.dotc(&other.coords).norm().min(1.0)
    }

    /// Fubini-Study chordal distance `sqrt(1 - |<v,w>|^2)`, chart independent.
    pub fn chordal_distance(&self, other: &Self) -> f64 {
        // Norm of the orthogonal residual; stays accurate near zero.
        let proj = other.coords.dotc(&self.coords);
        (&self.coords - &other.coords * proj).norm().min(1.0)
    }

    pub fn approx_eq(&self, other: &Self, eps: f64) -> bool {
        self.coords.len() == other.coords.len() && self.overlap(other) >= 1.0 - eps
    }
}

impl PartialEq for ProjectivePoint {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other, EPS_PT)
    }
}

/// A linear functional on `C^{d+1}` up to scale; its kernel is a complex hyperplane.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
pub struct DualFunctional {
    #[serde(serialize_with = "serialize_coords")]
    coeffs: CVec,
}

impl DualFunctional {
    pub fn new(coeffs: CVec) -> Result<Self> {
        Ok(Self { coeffs: normalize(coeffs)? })
    }

    pub fn from_slice(coeffs: &[Complex64]) -> Result<Self> {
        Self::new(CVec::from_column_slice(coeffs))
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(CVec::from_iterator(coeffs.len(), coeffs.iter().map(|&x| cr(x))))
    }

    pub fn coeffs(&self) -> &CVec {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `f(v) = sum_i f_i v_i` on a raw vector (bilinear, no conjugation).
    pub fn eval_vec(&self, v: &CVec) -> Complex64 {
        self.coeffs.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
    }

    /// Evaluation on the unit representative of `p`.
    pub fn eval(&self, p: &ProjectivePoint) -> Complex64 {
        self.eval_vec(p.coords())
    }

    pub fn approx_eq(&self, other: &Self, eps: f64) -> bool {
        self.coeffs.len() == other.coeffs.len()
            && self.coeffs.dotc(&other.coeffs).norm() >= 1.0 - eps
    }
}

/// `log(|f(v) g(w)| / |f(w) g(v)|)`, the kernel of the Hilbert metric.
pub fn log_ratio(
    f: &DualFunctional,
    g: &DualFunctional,
    v: &ProjectivePoint,
    w: &ProjectivePoint,
) -> Result<f64> {
    log_ratio_with(f, g, v, w, EPS_EVAL)
}

pub fn log_ratio_with(
    f: &DualFunctional,
    g: &DualFunctional,
    v: &ProjectivePoint,
    w: &ProjectivePoint,
    eps_eval: f64,
) -> Result<f64> {
    let vals = [f.eval(v), g.eval(w), f.eval(w), g.eval(v)];
    for z in &vals {
        let magnitude = z.norm();
        if !(magnitude >= eps_eval) {
            return Err(Error::NearKernel { magnitude, eps: eps_eval });
        }
    }
    let num = vals[0].norm().ln() + vals[1].norm().ln();
    let den = vals[2].norm().ln() + vals[3].norm().ln();
    Ok(num - den)
}

/// A complex projective line with affine parametrization `t -> [p + t q]`.
///
/// `q` is the point at infinity of the chart.
#[derive(Clone, Debug)]
pub struct ProjectiveLine {
    p: ProjectivePoint,
    q: ProjectivePoint,
    /// Orthonormal basis of the underlying 2-plane.
    frame: CMat,
}

impl ProjectiveLine {
    pub fn new(p: ProjectivePoint, q: ProjectivePoint) -> Result<Self> {
        if p.dim() != q.dim() {
            return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
        }
        if p.approx_eq(&q, EPS_PT) {
            return Err(Error::DegeneratePair);
        }
        let basis = linalg::orthonormalize(&[p.coords().clone(), q.coords().clone()], 1e-14);
        if basis.len() != 2 {
            return Err(Error::DegeneratePair);
        }
        let frame = linalg::columns_to_matrix(p.coords().len(), &basis);
        Ok(Self { p, q, frame })
    }

    /// Chart origin.
    pub fn origin(&self) -> &ProjectivePoint {
        &self.p
    }

    /// Chart point at infinity.
    pub fn at_infinity(&self) -> &ProjectivePoint {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    pub fn point_vec(&self, t: Complex64) -> CVec {
        self.p.coords() + self.q.coords() * t
    }

    pub fn point_at(&self, t: Complex64) -> ProjectivePoint {
        ProjectivePoint::new(self.point_vec(t)).expect("distinct basis points span a plane")
    }

    /// Whether `x` lies on the line within `eps` (residual of projection onto the plane).
    pub fn contains(&self, x: &ProjectivePoint, eps: f64) -> bool {
        linalg::distance_to_span(&self.frame, x.coords()) <= eps
    }

    /// Chart coordinate `t` of `x`, or `None` for the point at infinity.
    /// Fails when `x` is not on the line.
    pub fn coordinate_of(&self, x: &ProjectivePoint) -> Result<Option<Complex64>> {
        if !self.contains(x, 1e-8) {
            return Err(Error::PreconditionViolated("point is not on the line".into()));
        }
        // Solve x = a p + b q in least squares via the 2x2 normal equations.
        let pv = self.p.coords();
        let qv = self.q.coords();
        let g11 = pv.dotc(pv);
        let g12 = pv.dotc(qv);
        let g21 = qv.dotc(pv);
        let g22 = qv.dotc(qv);
        let r1 = pv.dotc(x.coords());
        let r2 = qv.dotc(x.coords());
        let det = g11 * g22 - g12 * g21;
        let a = (r1 * g22 - g12 * r2) / det;
        let b = (g11 * r2 - g21 * r1) / det;
        if a.norm() <= 1e-14 * b.norm().max(1e-300) {
            return Ok(None);
        }
        Ok(Some(b / a))
    }

    /// Same line with a new chart `t -> [origin + t infinity]`.
    pub fn rebased(&self, origin: ProjectivePoint, infinity: ProjectivePoint) -> Result<Self> {
        if !self.contains(&origin, 1e-8) || !self.contains(&infinity, 1e-8) {
            return Err(Error::PreconditionViolated("rebased chart points must lie on the line".into()));
        }
        Self::new(origin, infinity)
    }
}

/// The line through two distinct points.
pub fn line_through(p: &ProjectivePoint, q: &ProjectivePoint) -> Result<ProjectiveLine> {
    ProjectiveLine::new(p.clone(), q.clone())
}

/// The point where `line` meets `[ker f]`.
pub fn intersect_line_hyperplane(line: &ProjectiveLine, f: &DualFunctional) -> Result<ProjectivePoint> {
    let fp = f.eval(line.origin());
    let fq = f.eval(line.at_infinity());
    if fp.norm() < EPS_EVAL && fq.norm() < EPS_EVAL {
        return Err(Error::LineInHyperplane);
    }
    let v = line.origin().coords() * fq - line.at_infinity().coords() * fp;
    ProjectivePoint::new(v)
}

/// An invertible projective transformation, stored with `|det| = 1`.
#[derive(Clone, Debug)]
pub struct ProjectiveMap {
    matrix: CMat,
}

impl ProjectiveMap {
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() || matrix.is_empty() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        if !linalg::is_finite(&matrix) {
            return Err(Error::SingularMatrix);
        }
        let n = matrix.nrows();
        let scale = linalg::operator_norm(&matrix);
        if !(scale > 0.0) {
            return Err(Error::SingularMatrix);
        }
        let scaled = &matrix / cr(scale);
        let det = linalg::determinant(&scaled).norm();
        if !(det > 1e-200) || !det.is_finite() {
            return Err(Error::SingularMatrix);
        }
        let factor = det.powf(1.0 / n as f64);
        Ok(Self { matrix: scaled / cr(factor) })
    }

    pub fn from_rows(n: usize, entries: &[Complex64]) -> Result<Self> {
        Self::new(CMat::from_row_slice(n, n, entries))
    }

    pub fn from_real_rows(n: usize, entries: &[f64]) -> Result<Self> {
        let e: Vec<Complex64> = entries.iter().map(|&x| cr(x)).collect();
        Self::from_rows(n, &e)
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Result<Self> {
        Self::new(CMat::from_diagonal(&CVec::from_column_slice(diag)))
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: CMat::identity(dim + 1, dim + 1) }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn apply(&self, p: &ProjectivePoint) -> ProjectivePoint {
        ProjectivePoint::new(&self.matrix * p.coords()).expect("invertible map keeps vectors nonzero")
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(&self.matrix * &other.matrix).expect("product of invertible maps")
    }

    pub fn inverse(&self) -> Self {
        let inv = self.matrix.clone().try_inverse().expect("stored maps are invertible");
        Self::new(inv).expect("inverse is invertible")
    }

    /// Transpose map; acts on functionals by `f -> f ∘ self`.
    pub fn transpose(&self) -> Self {
        Self { matrix: self.matrix.transpose() }
    }

    /// `f ∘ self`, i.e. the transpose applied to the coefficient vector.
    pub fn pull_back(&self, f: &DualFunctional) -> DualFunctional {
        DualFunctional::new(self.matrix.transpose() * f.coeffs()).expect("invertible")
    }

    pub fn power(&self, k: u32) -> Self {
        let mut acc = CMat::identity(self.matrix.nrows(), self.matrix.ncols());
        let mut base = self.matrix.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        Self::new(acc).expect("power of invertible map")
    }

    /// `‖φ‖ ‖φ^{-1}‖` in the operator 2-norm (the condition number).
    pub fn norm_product(&self) -> f64 {
        let sv = linalg::singular_values(&self.matrix);
        sv[0] / sv[sv.len() - 1]
    }

    pub fn conjugate_by(&self, g: &Self) -> Self {
        g.compose(self).compose(&g.inverse())
    }

    pub fn approx_eq(&self, other: &Self, eps: f64) -> bool {
        // Compare up to a unimodular scalar.
        let a = &self.matrix;
        let b = &other.matrix;
        if a.shape() != b.shape() {
            return false;
        }
        let inner: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
        let phase = if inner.norm() > 0.0 { inner / inner.norm() } else { c(1.0, 0.0) };
        (a * phase - b).norm() <= eps * a.norm().max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> ProjectivePoint {
        ProjectivePoint::from_real(v).unwrap()
    }

    #[test]
    fn normalization_fixes_phase() {
        let p = ProjectivePoint::from_slice(&[c(0.0, 2.0), c(0.0, 2.0)]).unwrap();
        assert!((p.coords()[0] - cr(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!(ProjectivePoint::from_real(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn log_ratio_trivial_cases() {
        let f = DualFunctional::from_real(&[1.0, -1.0]).unwrap();
        let v = pt(&[1.0, 0.0]);
        let w = pt(&[1.0, 0.5]);
        assert_eq!(log_ratio(&f, &f, &v, &w).unwrap(), 0.0);
        let g = DualFunctional::from_real(&[1.0, 0.3]).unwrap();
        assert!(log_ratio(&f, &g, &v, &v).unwrap().abs() < 1e-15);
    }

    #[test]
    fn log_ratio_hand_example() {
        let f = DualFunctional::from_real(&[1.0, -1.0]).unwrap();
        let g = DualFunctional::from_real(&[1.0, 0.0]).unwrap();
        let v = pt(&[1.0, 0.0]);
        let w = pt(&[1.0, 0.5]);
        let val = log_ratio(&f, &g, &v, &w).unwrap();
        assert!((val - 2f64.ln()).abs() < 1e-14);
        // g = (0, 1) vanishes at [1:0].
        let g0 = DualFunctional::from_real(&[0.0, 1.0]).unwrap();
        assert!(matches!(log_ratio(&f, &g0, &v, &w), Err(Error::NearKernel { .. })));
    }

    #[test]
    fn line_through_coordinate_axes() {
        let p = pt(&[1.0, 0.0, 0.0]);
        let q = pt(&[0.0, 1.0, 0.0]);
        let line = line_through(&p, &q).unwrap();
        assert!(line.contains(&pt(&[2.0, -3.0, 0.0]), 1e-12));
        assert!(!line.contains(&pt(&[1.0, 0.0, 1.0]), 1e-6));
        assert!(matches!(line_through(&p, &p), Err(Error::DegeneratePair)));
    }

    #[test]
    fn random_lines_contain_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p = ProjectivePoint::new(linalg::random_complex_vector(4, &mut rng)).unwrap();
            let q = ProjectivePoint::new(linalg::random_complex_vector(4, &mut rng)).unwrap();
            let line = line_through(&p, &q).unwrap();
            assert!(line.contains(&p, EPS_PT) && line.contains(&q, EPS_PT));
            let t = linalg::random_complex_normal(&mut rng);
            let x = line.point_at(t);
            let back = line.coordinate_of(&x).unwrap().unwrap();
            assert!((back - t).norm() < 1e-9 * (1.0 + t.norm()));
        }
    }

    #[test]
    fn apply_diagonal_example() {
        let phi = ProjectiveMap::from_diagonal(&[cr(2.0), cr(0.5)]).unwrap();
        let img = phi.apply(&pt(&[1.0, 1.0]));
        assert!(img.approx_eq(&pt(&[4.0, 1.0]), 1e-14));
        let id = ProjectiveMap::identity(1);
        let p = pt(&[0.3, 0.7]);
        assert!(id.apply(&p).approx_eq(&p, 1e-15));
    }

    #[test]
    fn adjoint_identity_and_double_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = ProjectiveMap::new(linalg::random_complex_matrix(3, 3, &mut rng)).unwrap();
            let v = linalg::random_complex_vector(3, &mut rng);
            let f = linalg::random_complex_vector(3, &mut rng);
            let lhs: Complex64 = f.iter().zip((m.matrix() * &v).iter()).map(|(a, b)| a * b).sum();
            let tf = m.matrix().transpose() * &f;
            let rhs: Complex64 = tf.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).norm() < 1e-12);
            assert!(m.transpose().transpose().approx_eq(&m, 1e-15));
        }
    }

    #[test]
    fn hyperplane_intersection() {
        let line = line_through(&pt(&[1.0, 0.0, 0.0]), &pt(&[0.0, 1.0, 0.0])).unwrap();
        let f = DualFunctional::from_real(&[1.0, -2.0, 5.0]).unwrap();
        let x = intersect_line_hyperplane(&line, &f).unwrap();
        assert!(f.eval(&x).norm() < EPS_EVAL);
        assert!(line.contains(&x, 1e-12));
        let g = DualFunctional::from_real(&[0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(intersect_line_hyperplane(&line, &g), Err(Error::LineInHyperplane)));
    }

    #[test]
    fn determinant_normalization() {
        let m = ProjectiveMap::from_diagonal(&[cr(8.0), cr(1.0), cr(1.0)]).unwrap();
        assert!((linalg::determinant(m.matrix()).norm() - 1.0).abs() < 1e-12);
        assert!(ProjectiveMap::from_diagonal(&[cr(1.0), cr(0.0)]).is_err());
    }
}
