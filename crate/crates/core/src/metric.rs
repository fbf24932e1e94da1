//! Hilbert metric on domains and the Apollonian metric on planar domains.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::Serialize;

use crate::domain::{planar_coordinate, planar_point, BallDomain, Domain, DualSampleSet, PlanarDomain};
use crate::error::{Error, Result};
use crate::projective::{line_through, ProjectiveMap, ProjectivePoint, EPS_PT};

/// Boundary samples per slice.
pub const SLICE_SAMPLES: usize = 1024;
/// Dual functionals used for the lower-bound cross-check.
pub const DUAL_SAMPLES: usize = 64;
const GOLDEN_ITERS: usize = 40;

/// Where a one-sided sup is attained, in the planar (or slice) chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    Finite(Complex64),
    Infinity,
}

#[derive(Clone, Debug, Serialize)]
pub struct Maximizers {
    /// Maximizer of `log |z_1 - b| / |z_2 - b|`.
    pub b1: Witness,
    /// Maximizer of `log |z_2 - b| / |z_1 - b|`.
    pub b2: Witness,
    /// The same points in homogeneous coordinates, for line slices.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projective: Option<[ProjectivePoint; 2]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceResult {
    pub value: f64,
    pub maximizers: Maximizers,
    pub refinement_error: f64,
    /// Sampled-dual lower bound, when computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
}

impl DistanceResult {
    fn zero(at: Complex64) -> Self {
        Self {
            value: 0.0,
            maximizers: Maximizers { b1: Witness::Finite(at), b2: Witness::Finite(at), projective: None },
            refinement_error: 0.0,
            lower_bound: None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MetricOptions {
    pub slice_samples: usize,
    pub dual_samples: usize,
    /// Compute the dual-sample lower bound and reject inconsistent results.
    pub dual_check: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self { slice_samples: SLICE_SAMPLES, dual_samples: DUAL_SAMPLES, dual_check: true }
    }
}

struct OneSided {
    value: f64,
    witness: Witness,
    error: f64,
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_ITERS {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `sup_b log |u - b| / |w - b|` over the sampled boundary and `∞`.
fn one_sided_sup(domain: &PlanarDomain, u: Complex64, w: Complex64) -> OneSided {
    let g = |b: Complex64| (u - b).norm().ln() - (w - b).norm().ln();
    let pts = domain.points();
    let m = pts.len();
    let mut best_k = 0;
    let mut best = f64::NEG_INFINITY;
    for (k, &b) in pts.iter().enumerate() {
        let v = g(b);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let prev = g(pts[(best_k + m - 1) % m]);
    let next = g(pts[(best_k + 1) % m]);
    let error = (prev - 2.0 * best + next).abs();
    let (pos, refined) = golden_max(|s| g(domain.boundary_at(s)), best_k as f64 - 1.0, best_k as f64 + 1.0);
    let (value, witness) = if refined > best {
        (refined, Witness::Finite(domain.boundary_at(pos)))
    } else {
        (best, Witness::Finite(pts[best_k]))
    };
    // The point at infinity contributes log 1 = 0.
    if value < 0.0 {
        return OneSided { value: 0.0, witness: Witness::Infinity, error: 0.0 };
    }
    OneSided { value, witness, error }
}

/// Apollonian (planar Hilbert) distance between two interior points.
pub fn apollonian_distance(domain: &PlanarDomain, z1: Complex64, z2: Complex64) -> Result<DistanceResult> {
    if !domain.contains_point(z1) || !domain.contains_point(z2) {
        return Err(Error::PointOutsideDomain);
    }
    if z1 == z2 {
        return Ok(DistanceResult::zero(z1));
    }
    let s1 = one_sided_sup(domain, z1, z2);
    let s2 = one_sided_sup(domain, z2, z1);
    Ok(DistanceResult {
        value: s1.value + s2.value,
        maximizers: Maximizers { b1: s1.witness, b2: s2.witness, projective: None },
        refinement_error: s1.error + s2.error,
        lower_bound: None,
    })
}

/// Value and refinement error without containment checks.
pub(crate) fn apollonian_unchecked(domain: &PlanarDomain, z1: Complex64, z2: Complex64) -> (f64, f64) {
    if z1 == z2 {
        return (0.0, 0.0);
    }
    let s1 = one_sided_sup(domain, z1, z2);
    let s2 = one_sided_sup(domain, z2, z1);
    (s1.value + s2.value, s1.error + s2.error)
}

fn canonical_order(p: &ProjectivePoint, q: &ProjectivePoint) -> Ordering {
    for (a, b) in p.coords().iter().zip(q.coords().iter()) {
        match a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// `max_f log|f(p)/f(q)| + max_g log|g(q)/g(p)|` over the sampled duals.
pub fn dual_lower_bound(duals: &DualSampleSet, p: &ProjectivePoint, q: &ProjectivePoint) -> f64 {
    let mut a = f64::NEG_INFINITY;
    let mut b = f64::NEG_INFINITY;
    for f in &duals.functionals {
        let t = f.eval(p).norm().ln() - f.eval(q).norm().ln();
        a = a.max(t);
        b = b.max(-t);
    }
    a + b
}

/// Hilbert distance with default options.
pub fn hilbert_distance(domain: &Domain, p: &ProjectivePoint, q: &ProjectivePoint) -> Result<DistanceResult> {
    hilbert_distance_with(domain, p, q, &MetricOptions::default())
}

/// Hilbert distance computed on the slice by the complex line through `p`
/// and `q`.
pub fn hilbert_distance_with(
    domain: &Domain,
    p: &ProjectivePoint,
    q: &ProjectivePoint,
    opts: &MetricOptions,
) -> Result<DistanceResult> {
    if !domain.contains(p)? || !domain.contains(q)? {
        return Err(Error::PointOutsideDomain);
    }
    if p.approx_eq(q, EPS_PT) {
        let mut r = DistanceResult::zero(Complex64::new(0.0, 0.0));
        r.maximizers.projective = None;
        return Ok(r);
    }
    // Evaluate in a canonical order so the result is exactly symmetric.
    let swapped = canonical_order(p, q) == Ordering::Greater;
    let (a, b) = if swapped { (q, p) } else { (p, q) };

    let mut result = match domain {
        Domain::Planar(d) => {
            let za = planar_coordinate(a).ok_or(Error::OutsideChart)?;
            let zb = planar_coordinate(b).ok_or(Error::OutsideChart)?;
            let mut r = apollonian_distance(d, za, zb)?;
            let lift = |w: Witness| match w {
                Witness::Finite(z) => planar_point(z),
                Witness::Infinity => ProjectivePoint::from_real(&[1.0, 0.0]).expect("nonzero"),
            };
            r.maximizers.projective = Some([lift(r.maximizers.b1), lift(r.maximizers.b2)]);
            r
        }
        _ => {
            let slice = domain.slice(&line_through(a, b)?, opts.slice_samples)?;
            let ta = slice.coordinate(a)?;
            let tb = slice.coordinate(b)?;
            let mut r = apollonian_distance(&slice.domain, ta, tb)?;
            let lift = |w: Witness| match w {
                Witness::Finite(t) => slice.point(t),
                Witness::Infinity => slice.line.at_infinity().clone(),
            };
            r.maximizers.projective = Some([lift(r.maximizers.b1), lift(r.maximizers.b2)]);
            r
        }
    };

    if opts.dual_check {
        let duals = domain.dual_samples(opts.dual_samples);
        let lower = dual_lower_bound(&duals, a, b);
        let slack = 1e-9 * (1.0 + result.value);
        if lower > result.value + result.refinement_error + slack {
            return Err(Error::InconsistentBounds {
                lower,
                value: result.value,
                error: result.refinement_error,
            });
        }
        result.lower_bound = Some(lower);
    }

    if swapped {
        let m = &mut result.maximizers;
        std::mem::swap(&mut m.b1, &mut m.b2);
        if let Some(pr) = m.projective.as_mut() {
            pr.swap(0, 1);
        }
    }
    Ok(result)
}

/// Closed-form distance on the ball, normalized so that
/// `d(0, r e_1) = log((1 + r) / (1 - r))`.
pub fn complex_hyperbolic_oracle(p: &ProjectivePoint, q: &ProjectivePoint) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let (v, w) = (p.coords(), q.coords());
    let pp = BallDomain::form(v, v).re;
    let qq = BallDomain::form(w, w).re;
    if pp <= 0.0 || qq <= 0.0 {
        return Err(Error::PointOutsideDomain);
    }
    let pq = BallDomain::form(v, w).norm_sqr();
    let s = (1.0 - pp * qq / pq).max(0.0).sqrt();
    Ok(2.0 * s.atanh())
}

/// Chart point `p + s (x - p)` in the domain's natural chart.
fn chart_interpolate(domain: &Domain, p: &ProjectivePoint, x: &ProjectivePoint, s: f64) -> Result<ProjectivePoint> {
    match domain {
        Domain::Planar(_) => {
            let zp = planar_coordinate(p).ok_or(Error::OutsideChart)?;
            let zx = planar_coordinate(x).ok_or(Error::OutsideChart)?;
            Ok(planar_point(zp + (zx - zp) * s))
        }
        _ => {
            let zp = p.chart().ok_or(Error::OutsideChart)?;
            let zx = x.chart().ok_or(Error::OutsideChart)?;
            let z: Vec<Complex64> = zp.iter().zip(&zx).map(|(a, b)| a + (b - a) * s).collect();
            Ok(ProjectivePoint::from_chart(&z))
        }
    }
}

/// `d(p, q_k)` for `q_k = p + (1 - 2^{-k})(x - p)`, `k = 0..=steps`.
pub fn boundary_divergence_profile(
    domain: &Domain,
    p: &ProjectivePoint,
    x: &ProjectivePoint,
    steps: usize,
) -> Result<Vec<f64>> {
    if !domain.contains(p)? {
        return Err(Error::PointOutsideDomain);
    }
    let defect = domain.boundary_defect(x)?;
    if defect > crate::domain::EPS_BD {
        return Err(Error::NotOnBoundary { defect });
    }
    (0..=steps)
        .map(|k| {
            let q = chart_interpolate(domain, p, x, 1.0 - 0.5f64.powi(k as i32))?;
            Ok(hilbert_distance(domain, p, &q)?.value)
        })
        .collect()
}

/// Limit points of two sequences with `d(p_n, q_n) < bound`, and whether
/// the tangent hyperplane at the first limit contains the second.
#[derive(Clone, Debug, Serialize)]
pub struct TangentPairCheck {
    pub x: ProjectivePoint,
    pub y: ProjectivePoint,
    pub tangent_value: f64,
    pub max_distance: f64,
    pub contains: bool,
}

/// Sequences whose last step (chordal) exceeds this are treated as not converging.
pub const CONVERGENCE_STEP: f64 = 1e-3;

pub fn bounded_pair_tangent_check(
    domain: &Domain,
    p_seq: &[ProjectivePoint],
    q_seq: &[ProjectivePoint],
    bound: f64,
    eps_check: f64,
) -> Result<TangentPairCheck> {
    if p_seq.len() != q_seq.len() || p_seq.len() < 2 {
        return Err(Error::PreconditionViolated("sequences need equal length of at least 2".into()));
    }
    let mut max_distance: f64 = 0.0;
    for (p, q) in p_seq.iter().zip(q_seq) {
        let d = hilbert_distance(domain, p, q)?.value;
        if !(d < bound) {
            return Err(Error::PreconditionViolated(format!("pair distance {d} is not below {bound}")));
        }
        max_distance = max_distance.max(d);
    }
    let n = p_seq.len();
    for seq in [p_seq, q_seq] {
        let step = seq[n - 1].chordal_distance(&seq[n - 2]);
        if step > CONVERGENCE_STEP {
            return Err(Error::SequenceNotConverging { step });
        }
    }
    let x = domain.project_to_boundary(&p_seq[n - 1])?;
    let y = domain.project_to_boundary(&q_seq[n - 1])?;
    let f = domain.tangent_hyperplane(&x)?;
    let tangent_value = f.eval(&y).norm();
    Ok(TangentPairCheck { x, y, tangent_value, max_distance, contains: tangent_value < eps_check })
}

#[derive(Clone, Debug, Serialize)]
pub struct TranslationBound {
    pub lhs: f64,
    pub rhs: f64,
    /// `4 Ĉ` with `Ĉ = max_f -log |f(x̂_0)|` over unit sampled duals.
    pub r_hat: f64,
    /// `log(‖φ‖ ‖φ^{-1}‖)`.
    pub log_norm_product: f64,
    pub holds: bool,
}

/// Compares `d(φ x_0, x_0)` with `R̂ + log(‖φ‖ ‖φ^{-1}‖)`.
pub fn translation_bound_check(domain: &Domain, phi: &ProjectiveMap, x0: &ProjectivePoint) -> Result<TranslationBound> {
    domain.check_automorphism(phi, 64)?;
    if !domain.contains(x0)? {
        return Err(Error::PointOutsideDomain);
    }
    let lhs = hilbert_distance(domain, &phi.apply(x0), x0)?.value;
    let duals = domain.dual_samples(DUAL_SAMPLES.max(256));
    let c_hat = duals
        .functionals
        .iter()
        .map(|f| -f.eval(x0).norm().ln())
        .fold(0.0f64, f64::max);
    let r_hat = 4.0 * c_hat;
    let log_norm_product = phi.norm_product().ln();
    let rhs = r_hat + log_norm_product;
    Ok(TranslationBound { lhs, rhs, r_hat, log_norm_product, holds: lhs <= rhs })
}

/// Poincaré distance on the unit disk.
pub fn poincare_distance(z1: Complex64, z2: Complex64) -> f64 {
    let rho = ((z1 - z2) / (Complex64::new(1.0, 0.0) - z2.conj() * z1)).norm();
    2.0 * rho.atanh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PlanarDomain;
    use crate::linalg::{c, cr};
    use crate::sampling;
    use approx::assert_abs_diff_eq;

    #[test]
    fn disk_example_is_log_three() {
        let disk = PlanarDomain::unit_disk(512);
        let r = apollonian_distance(&disk, cr(0.0), cr(0.5)).unwrap();
        assert_abs_diff_eq!(r.value, 3f64.ln(), epsilon = 1e-9);
        match (r.maximizers.b1, r.maximizers.b2) {
            (Witness::Finite(b1), Witness::Finite(b2)) => {
                assert!((b1 - cr(1.0)).norm() < 1e-4, "{b1}");
                assert!((b2 - cr(-1.0)).norm() < 1e-4, "{b2}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn outside_points_are_rejected() {
        let disk = PlanarDomain::unit_disk(128);
        assert!(matches!(apollonian_distance(&disk, cr(0.0), cr(1.5)), Err(Error::PointOutsideDomain)));
    }

    #[test]
    fn ball_example_is_log_three() {
        let ball = Domain::ball(2);
        let p = ProjectivePoint::from_chart(&[cr(0.0), cr(0.0)]);
        let q = ProjectivePoint::from_chart(&[cr(0.5), cr(0.0)]);
        let r = hilbert_distance(&ball, &p, &q).unwrap();
        assert_abs_diff_eq!(r.value, 3f64.ln(), epsilon = 1e-9);
        assert!(r.lower_bound.unwrap() <= r.value + r.refinement_error);
        assert_abs_diff_eq!(complex_hyperbolic_oracle(&p, &q).unwrap(), 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn ball_matches_oracle_off_centre() {
        let ball = Domain::ball(3);
        let p = ProjectivePoint::from_chart(&[c(0.3, -0.2), c(0.1, 0.4), c(-0.2, 0.0)]);
        let q = ProjectivePoint::from_chart(&[c(-0.5, 0.1), c(0.2, -0.3), c(0.05, 0.6)]);
        let d = hilbert_distance(&ball, &p, &q).unwrap().value;
        assert_abs_diff_eq!(d, complex_hyperbolic_oracle(&p, &q).unwrap(), epsilon = 1e-6);
        let back = hilbert_distance(&ball, &q, &p).unwrap().value;
        assert_eq!(d, back);
    }

    #[test]
    fn divergence_profile_on_disk() {
        let disk = Domain::Planar(PlanarDomain::unit_disk(1024));
        let prof = boundary_divergence_profile(&disk, &planar_point(cr(0.0)), &planar_point(cr(1.0)), 16).unwrap();
        assert_eq!(prof[0], 0.0);
        assert!(*prof.last().unwrap() > 10.0);
        for (k, v) in prof.iter().enumerate() {
            let r = 1.0 - 0.5f64.powi(k as i32);
            assert!((v - ((1.0 + r) / (1.0 - r)).ln()).abs() < 1e-6, "k={k}");
        }
    }

    #[test]
    fn boost_translation_bound() {
        let disk = Domain::Planar(PlanarDomain::unit_disk(1024));
        let t = 0.7;
        let boost = sampling::disk_automorphism_planar(&sampling::ball_boost(1, t));
        let r = translation_bound_check(&disk, &boost, &planar_point(cr(0.0))).unwrap();
        assert_abs_diff_eq!(r.lhs, 2.0 * t, epsilon = 1e-8);
        assert_abs_diff_eq!(r.log_norm_product, 2.0 * t, epsilon = 1e-10);
        assert_abs_diff_eq!(r.r_hat, 2.0 * 2f64.ln(), epsilon = 1e-10);
        assert!(r.holds);
    }

    #[test]
    fn non_automorphism_is_rejected() {
        let disk = Domain::Planar(PlanarDomain::unit_disk(256));
        let phi = ProjectiveMap::from_real_rows(2, &[3.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            translation_bound_check(&disk, &phi, &planar_point(cr(0.0))),
            Err(Error::NotAnAutomorphism(_))
        ));
    }
}
