//! Bi-Lipschitz maps between planar domains, the quasi-isometry defect of
//! the Apollonian metric, radial collar maps, and geodesicity-defect search.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::PlanarDomain;
use crate::error::{Error, Result};
use crate::linalg::c;
use crate::metric::{apollonian_distance, apollonian_unchecked};

/// Tolerance added to `4 log k` for metric discretization.
pub const METRIC_TOL: f64 = 1e-3;
const MIN_PAIR_GAP: f64 = 1e-7;
/// Refinement stops shrinking pairs below this separation.
const MIN_REFINE_GAP: f64 = 1e-5;

type MapFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A map sampled on points of a source domain.
#[derive(Clone)]
pub struct PlanarMap {
    forward: MapFn,
    samples: Vec<Complex64>,
}

impl fmt::Debug for PlanarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarMap").field("samples", &self.samples.len()).finish()
    }
}

impl PlanarMap {
    pub fn new(forward: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static, samples: Vec<Complex64>) -> Self {
        Self { forward: Arc::new(forward), samples }
    }

    /// Samples every boundary point of `domain` plus `interior` seeded interior points.
    pub fn on_domain(
        forward: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        domain: &PlanarDomain,
        interior: usize,
        seed: u64,
    ) -> Self {
        let mut samples = domain.points().to_vec();
        samples.extend(domain.interior_samples(interior, seed, 0.0));
        Self::new(forward, samples)
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.forward)(z)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Image of a planar domain; tangents re-estimated from the mapped samples.
    pub fn image(&self, domain: &PlanarDomain) -> Result<PlanarDomain> {
        domain.map_points(|z| self.apply(z))
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BiLipschitz {
    pub k_fwd: f64,
    pub k_bwd: f64,
    pub k: f64,
}

fn stretch(f: &PlanarMap, x: Complex64, y: Complex64) -> Option<(f64, f64)> {
    let d = (x - y).norm();
    if d < MIN_PAIR_GAP {
        return None;
    }
    let image = (f.apply(x) - f.apply(y)).norm();
    if image == 0.0 {
        return Some((0.0, f64::INFINITY));
    }
    Some((image / d, d / image))
}

/// Sampled lower bound on the bi-Lipschitz constant, refined by shrinking the
/// extremal pairs.
pub fn bilipschitz_estimate(f: &PlanarMap, pairs: usize, seed: u64) -> BiLipschitz {
    let s = &f.samples;
    if s.len() < 2 {
        return BiLipschitz { k_fwd: 1.0, k_bwd: 1.0, k: 1.0 };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_fwd = (0.0, s[0], s[1]);
    let mut best_bwd = (0.0, s[0], s[1]);
    let consider = |x: Complex64, y: Complex64, fwd: &mut (f64, Complex64, Complex64), bwd: &mut (f64, Complex64, Complex64)| {
        if let Some((a, b)) = stretch(f, x, y) {
            if a > fwd.0 {
                *fwd = (a, x, y);
            }
            if b > bwd.0 {
                *bwd = (b, x, y);
            }
        }
    };
    // Neighbouring samples probe local derivatives, random pairs probe global stretch.
    for w in s.windows(2) {
        consider(w[0], w[1], &mut best_fwd, &mut best_bwd);
    }
    for _ in 0..pairs {
        let i = rng.random_range(0..s.len());
        let j = rng.random_range(0..s.len());
        consider(s[i], s[j], &mut best_fwd, &mut best_bwd);
    }
    let refine = |mut best: (f64, Complex64, Complex64), pick: fn((f64, f64)) -> f64| {
        for _ in 0..60 {
            let (_, x, y) = best;
            if (x - y).norm() < MIN_REFINE_GAP {
                break;
            }
            let mid = (x + y) * 0.5;
            let mut improved = false;
            for (a, b) in [(x, mid), (mid, y), (x, x + (y - x) * 0.9), (y + (x - y) * 0.9, y)] {
                if let Some(r) = stretch(f, a, b) {
                    let v = pick(r);
                    if v > best.0 {
                        best = (v, a, b);
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        best.0
    };
    let k_fwd = refine(best_fwd, |r| r.0).max(1e-300);
    let k_bwd = refine(best_bwd, |r| r.1).max(1e-300);
    let k = k_fwd.max(k_bwd).max(1.0);
    BiLipschitz { k_fwd, k_bwd, k }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DefectReport {
    pub defect: f64,
    pub k: f64,
    /// `4 log k`.
    pub bound: f64,
    pub max_refinement_error: f64,
    pub pairs: usize,
    pub holds: bool,
}

/// `max |d_2(F x, F y) - d_1(x, y)|` over sampled interior pairs of `source`.
pub fn quasi_isometry_defect(
    f: &PlanarMap,
    source: &PlanarDomain,
    target: &PlanarDomain,
    pairs: usize,
    seed: u64,
) -> Result<DefectReport> {
    let pts = source.interior_samples(2 * pairs, seed, 0.02);
    if pts.len() < 2 * pairs {
        return Err(Error::GridTooCoarse("not enough interior samples".into()));
    }
    let rows: Vec<Result<(f64, f64)>> = pts
        .par_chunks(2)
        .map(|pair| {
            let (x, y) = (pair[0], pair[1]);
            let d1 = apollonian_distance(source, x, y)?;
            let d2 = apollonian_distance(target, f.apply(x), f.apply(y))?;
            Ok(((d2.value - d1.value).abs(), d1.refinement_error + d2.refinement_error))
        })
        .collect();
    let mut defect: f64 = 0.0;
    let mut err: f64 = 0.0;
    for r in rows {
        let (d, e) = r?;
        defect = defect.max(d);
        err = err.max(e);
    }
    let k = bilipschitz_estimate(f, 4 * pairs, seed ^ 0xb11).k;
    let bound = 4.0 * k.ln();
    Ok(DefectReport { defect, k, bound, max_refinement_error: err, pairs, holds: defect <= bound + METRIC_TOL })
}

/// Radial distance from `center` to the boundary in direction `theta`,
/// located on the Hermite boundary curve.
pub fn radial_function(domain: &PlanarDomain, center: Complex64, theta: f64) -> Result<f64> {
    let dir = Complex64::from_polar(1.0, theta);
    let pts = domain.points();
    let m = pts.len();
    // Find the chord crossing the ray.
    let cross = |z: Complex64| ((z - center) * dir.conj()).im;
    let mut seg = None;
    for k in 0..m {
        let (a, b) = (pts[k], pts[(k + 1) % m]);
        let (ca, cb) = (cross(a), cross(b));
        let ahead = ((a + b) * 0.5 - center).re * dir.re + ((a + b) * 0.5 - center).im * dir.im > 0.0;
        // Half-open test so a vertex on the ray is counted once.
        let crosses = (ca <= 0.0 && cb > 0.0) || (cb <= 0.0 && ca > 0.0);
        if crosses && ahead {
            if seg.is_some() {
                return Err(Error::NotStarShaped);
            }
            seg = Some(k);
        }
    }
    let k = seg.ok_or(Error::NotStarShaped)?;
    let start = cross(domain.boundary_at(k as f64));
    if start == 0.0 {
        return Ok((pts[k] - center).norm());
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let sign_lo = start.signum();
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cross(domain.boundary_at(k as f64 + mid)).signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((domain.boundary_at(k as f64 + 0.5 * (lo + hi)) - center).norm())
}

/// Radial rescaling `z -> c + (z - c) r_g(θ) / r_f(θ)` taking `∂Ω_f` to `∂Ω_g`.
pub fn collar_map(source: &PlanarDomain, target: &PlanarDomain, center: Complex64) -> Result<PlanarMap> {
    if source.polar_angles(center).is_none() || target.polar_angles(center).is_none() {
        return Err(Error::NotStarShaped);
    }
    let (src, tgt) = (source.clone(), target.clone());
    let forward = move |z: Complex64| {
        let w = z - center;
        if w.norm() == 0.0 {
            return center;
        }
        let theta = w.arg();
        match (radial_function(&src, center, theta), radial_function(&tgt, center, theta)) {
            (Ok(rf), Ok(rg)) => center + w * (rg / rf),
            _ => z,
        }
    };
    let mut samples = source.points().to_vec();
    samples.extend(source.interior_samples(source.len(), 0xc011a2, 0.0));
    Ok(PlanarMap::new(forward, samples))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuasiGeodesicCheck {
    pub holds: bool,
    /// Largest violation of `d >= |i - j| / A - B` (negative when satisfied).
    pub lower_slack: f64,
    /// Largest violation of `d <= A |i - j| + B` (negative when satisfied).
    pub upper_slack: f64,
}

/// Checks `|i - j| / A - B <= d(x_i, x_j) <= A |i - j| + B` for all pairs.
pub fn verify_quasi_geodesic(domain: &PlanarDomain, seq: &[Complex64], a: f64, b: f64) -> Result<QuasiGeodesicCheck> {
    if let Some(_) = seq.iter().find(|z| !domain.contains_point(**z)) {
        return Err(Error::PointOutsideDomain);
    }
    let n = seq.len();
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for j in (i + 1)..n {
                let gap = (j - i) as f64;
                let d = apollonian_unchecked(domain, seq[i], seq[j]).0;
                lo = lo.max((gap / a - b) - d);
                hi = hi.max(d - (a * gap + b));
            }
            (lo, hi)
        })
        .collect();
    let lower_slack = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let upper_slack = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(QuasiGeodesicCheck { holds: lower_slack <= 0.0 && upper_slack <= 0.0, lower_slack, upper_slack })
}

/// Points `tanh(i / 2) e^{iα}`, `i = -n..=n`: unit-spaced along a disk geodesic.
pub fn disk_geodesic(n: i64, angle: f64) -> Vec<Complex64> {
    let dir = Complex64::from_polar(1.0, angle);
    (-n..=n).map(|i| dir * (i as f64 / 2.0).tanh()).collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MidpointDefect {
    pub defect: f64,
    pub midpoint: Complex64,
    pub distance: f64,
    pub grid: usize,
}

/// `min_m max(|d(x, m) - D/2|, |d(y, m) - D/2|)` with `D = d(x, y)`, over a
/// `grid × grid` lattice on the bounding box followed by local pattern search
/// and a search along the equidistant curve.
pub fn midpoint_defect(domain: &PlanarDomain, x: Complex64, y: Complex64, grid: usize) -> Result<MidpointDefect> {
    let total = apollonian_distance(domain, x, y)?.value;
    if total == 0.0 {
        return Ok(MidpointDefect { defect: 0.0, midpoint: x, distance: 0.0, grid });
    }
    let half = 0.5 * total;
    let objective = |m: Complex64| -> f64 {
        if !domain.contains_point(m) {
            return f64::INFINITY;
        }
        let a = apollonian_unchecked(domain, x, m).0;
        let b = apollonian_unchecked(domain, y, m).0;
        (a - half).abs().max((b - half).abs())
    };
    let [x0, x1, y0, y1] = domain.bounding_box();
    let g = grid.max(2);
    let hx = (x1 - x0) / (g - 1) as f64;
    let hy = (y1 - y0) / (g - 1) as f64;
    let mut values: Vec<(f64, Complex64)> = (0..g * g)
        .into_par_iter()
        .map(|idx| {
            let m = c(x0 + hx * (idx % g) as f64, y0 + hy * (idx / g) as f64);
            (objective(m), m)
        })
        .filter(|v| v.0.is_finite())
        .collect();
    if values.is_empty() {
        return Err(Error::GridTooCoarse("no grid point inside the domain".into()));
    }
    values.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.re.total_cmp(&b.1.re)).then(a.1.im.total_cmp(&b.1.im)));
    let dirs: Vec<Complex64> = (0..8).map(|k| Complex64::from_polar(1.0, k as f64 * std::f64::consts::FRAC_PI_4)).collect();
    let refined: Vec<(f64, Complex64)> = values
        .iter()
        .take(5)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&(v0, m0)| {
            let (mut best, mut m) = (v0, m0);
            let mut step = hx.max(hy);
            while step > 1e-12 {
                let mut moved = false;
                for d in &dirs {
                    let cand = m + d * step;
                    let v = objective(cand);
                    if v < best {
                        best = v;
                        m = cand;
                        moved = true;
                        break;
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
            (best, m)
        })
        .collect();
    let (mut defect, mut midpoint) = refined
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one candidate");
    let gap = |m: Complex64| -> f64 {
        if !domain.contains_point(m) {
            return f64::NAN;
        }
        apollonian_unchecked(domain, x, m).0 - apollonian_unchecked(domain, y, m).0
    };
    if let Some((v, m)) = bisector_search(&objective, &gap, x, y, midpoint, 3.0 * hx.max(hy)) {
        if v < defect {
            (defect, midpoint) = (v, m);
        }
    }
    Ok(MidpointDefect { defect, midpoint, distance: total, grid })
}

/// Minimizes `objective` along the curve `gap = 0`, parametrized by offset
/// along the normal to `y - x` through `start`. Compass search stalls on the
/// kink of the max, which lies on this curve.
fn bisector_search(
    objective: &dyn Fn(Complex64) -> f64,
    gap: &dyn Fn(Complex64) -> f64,
    x: Complex64,
    y: Complex64,
    start: Complex64,
    reach: f64,
) -> Option<(f64, Complex64)> {
    let e = (y - x) / (y - x).norm();
    let n = e * c(0.0, 1.0);
    let at = |v: f64| -> Option<Complex64> {
        let base = start + n * v;
        let g = |u: f64| gap(base + e * u);
        let (mut lo, mut hi) = (-reach, reach);
        let (glo, ghi) = (g(lo), g(hi));
        if !(glo * ghi <= 0.0) {
            return None;
        }
        let rising = ghi > glo;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if (g(mid) < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(base + e * (0.5 * (lo + hi)))
    };
    let value = |v: f64| at(v).map_or(f64::INFINITY, objective);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-reach, reach);
    let (mut p, mut q) = (b - ratio * (b - a), a + ratio * (b - a));
    let (mut fp, mut fq) = (value(p), value(q));
    for _ in 0..60 {
        if fp < fq {
            b = q;
            (q, fq) = (p, fp);
            p = b - ratio * (b - a);
            fp = value(p);
        } else {
            a = p;
            (p, fp) = (q, fq);
            q = a + ratio * (b - a);
            fq = value(q);
        }
    }
    let v = 0.5 * (a + b);
    at(v).map(|m| (objective(m), m)).filter(|r| r.0.is_finite())
}
