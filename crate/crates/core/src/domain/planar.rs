//! Bounded planar domains given by a sampled `C^1` Jordan boundary.
//!
//! Samples are taken at uniform parameter values `θ_k = 2πk/M`; tangents are
//! derivatives with respect to `θ`. Between samples the boundary is the cubic
//! Hermite interpolant of the samples and tangents.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::c;

/// Default number of boundary samples.
pub const DEFAULT_SAMPLES: usize = 512;
const MIN_SAMPLES: usize = 8;

#[derive(Clone, Debug)]
pub struct PlanarDomain {
    points: Vec<Complex64>,
    tangents: Vec<Complex64>,
    ccw: bool,
    bbox: [f64; 4],
}

impl PlanarDomain {
    /// Builds a domain from boundary samples and their `θ`-derivatives.
    ///
    /// Checks sizes, finiteness, nonzero tangents and distinct consecutive
    /// samples. The O(M²) simplicity test is [`PlanarDomain::check_simple`].
    pub fn new(points: Vec<Complex64>, tangents: Vec<Complex64>) -> Result<Self> {
        if points.len() != tangents.len() {
            return Err(Error::InvalidDomain(format!(
                "{} boundary points but {} tangents",
                points.len(),
                tangents.len()
            )));
        }
        if points.len() < MIN_SAMPLES {
            return Err(Error::InvalidDomain(format!(
                "need at least {MIN_SAMPLES} boundary samples, got {}",
                points.len()
            )));
        }
        for (k, (p, t)) in points.iter().zip(&tangents).enumerate() {
            if !(p.re.is_finite() && p.im.is_finite() && t.re.is_finite() && t.im.is_finite()) {
                return Err(Error::InvalidDomain(format!("non-finite boundary data at sample {k}")));
            }
            if !(t.norm() > 0.0) {
                return Err(Error::InvalidDomain(format!("zero tangent at sample {k}")));
            }
        }
        let m = points.len();
        for k in 0..m {
            if points[k] == points[(k + 1) % m] {
                return Err(Error::InvalidDomain(format!("repeated boundary sample at {k}")));
            }
        }
        let area2: f64 = (0..m)
            .map(|k| {
                let a = points[k];
                let b = points[(k + 1) % m];
                a.re * b.im - a.im * b.re
            })
            .sum();
        if area2.abs() <= 0.0 {
            return Err(Error::InvalidDomain("boundary encloses no area".into()));
        }
        let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in &points {
            bbox[0] = bbox[0].min(p.re);
            bbox[1] = bbox[1].max(p.re);
            bbox[2] = bbox[2].min(p.im);
            bbox[3] = bbox[3].max(p.im);
        }
        Ok(Self { points, tangents, ccw: area2 > 0.0, bbox })
    }

    /// Samples a parametrized curve `θ -> f(θ)` with derivative `df`.
    pub fn from_curve(
        m: usize,
        f: impl Fn(f64) -> Complex64,
        df: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let thetas = (0..m).map(|k| TAU * k as f64 / m as f64);
        let (points, tangents) = thetas.map(|t| (f(t), df(t))).unzip();
        Self::new(points, tangents)
    }

    /// Builds a domain from samples alone; tangents come from a fourth-order
    /// periodic central difference.
    pub fn from_points(points: Vec<Complex64>) -> Result<Self> {
        let tangents = periodic_derivative(&points);
        Self::new(points, tangents)
    }

    pub fn circle(center: Complex64, radius: f64, m: usize) -> Result<Self> {
        Self::from_curve(
            m,
            |t| center + c(t.cos(), t.sin()) * radius,
            |t| c(-t.sin(), t.cos()) * radius,
        )
    }

    pub fn unit_disk(m: usize) -> Self {
        Self::circle(c(0.0, 0.0), 1.0, m).expect("unit circle is valid")
    }

    /// Ellipse centred at 0 with semi-axes `a` (real) and `b` (imaginary).
    pub fn ellipse(a: f64, b: f64, m: usize) -> Result<Self> {
        Self::from_curve(m, |t| c(a * t.cos(), b * t.sin()), |t| c(-a * t.sin(), b * t.cos()))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn tangents(&self) -> &[Complex64] {
        &self.tangents
    }

    pub fn is_ccw(&self) -> bool {
        self.ccw
    }

    /// `[min re, max re, min im, max im]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        self.bbox
    }

    /// Parameter spacing `2π/M`.
    pub fn step(&self) -> f64 {
        TAU / self.points.len() as f64
    }

    /// Boundary point at fractional sample position `pos` (periodic), using
    /// the cubic Hermite interpolant.
    pub fn boundary_at(&self, pos: f64) -> Complex64 {
        let m = self.points.len();
        let fl = pos.floor();
        let s = pos - fl;
        let k = (fl as i64).rem_euclid(m as i64) as usize;
        let k1 = (k + 1) % m;
        if s == 0.0 {
            return self.points[k];
        }
        let h = self.step();
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        self.points[k] * h00
            + self.tangents[k] * (h10 * h)
            + self.points[k1] * h01
            + self.tangents[k1] * (h11 * h)
    }

    /// Winding number of the sampled polygon around `z`.
    pub fn winding_number(&self, z: Complex64) -> f64 {
        let m = self.points.len();
        let mut total = 0.0;
        for k in 0..m {
            let a = self.points[k] - z;
            let b = self.points[(k + 1) % m] - z;
            if a.norm() == 0.0 || b.norm() == 0.0 {
                return 0.0;
            }
            total += (b / a).arg();
        }
        total / TAU
    }

    /// Strict containment by winding number; points on a sample are outside.
    pub fn contains_point(&self, z: Complex64) -> bool {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return false;
        }
        if z.re < self.bbox[0] || z.re > self.bbox[1] || z.im < self.bbox[2] || z.im > self.bbox[3] {
            return false;
        }
        self.winding_number(z).abs() > 0.5
    }

    /// Euclidean distance from `z` to the boundary polygon.
    pub fn distance_to_boundary(&self, z: Complex64) -> f64 {
        let m = self.points.len();
        (0..m)
            .map(|k| segment_distance(z, self.points[k], self.points[(k + 1) % m]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the boundary sample nearest to `z`.
    pub fn nearest_sample(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, p) in self.points.iter().enumerate() {
            let d = (p - z).norm();
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        best
    }

    /// Rejects self-intersecting polygons (non-adjacent chords crossing).
    pub fn check_simple(&self) -> Result<()> {
        let m = self.points.len();
        for i in 0..m {
            let a0 = self.points[i];
            let a1 = self.points[(i + 1) % m];
            for j in (i + 2)..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                let b0 = self.points[j];
                let b1 = self.points[(j + 1) % m];
                if segments_cross(a0, a1, b0, b1) {
                    return Err(Error::InvalidDomain(format!(
                        "boundary chords {i} and {j} intersect"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Image under a holomorphic map `f` with derivative `df`.
    pub fn map_holomorphic(
        &self,
        f: impl Fn(Complex64) -> Complex64,
        df: impl Fn(Complex64) -> Complex64,
    ) -> Result<Self> {
        let points = self.points.iter().map(|&b| f(b)).collect();
        let tangents = self.points.iter().zip(&self.tangents).map(|(&b, &t)| df(b) * t).collect();
        Self::new(points, tangents)
    }

    /// Image under an arbitrary map; tangents are re-estimated from samples.
    pub fn map_points(&self, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        Self::from_points(self.points.iter().map(|&b| f(b)).collect())
    }

    /// Image under the Möbius map `z -> (a z + b) / (c z + d)`; the pole must
    /// lie outside the closed domain.
    pub fn mobius(&self, m: [Complex64; 4]) -> Result<Self> {
        let [a, b, cc, d] = m;
        let det = a * d - b * cc;
        if det.norm() == 0.0 {
            return Err(Error::SingularMatrix);
        }
        if cc.norm() > 0.0 {
            let pole = -d / cc;
            if self.contains_point(pole) || self.distance_to_boundary(pole) < 1e-9 {
                return Err(Error::PreconditionViolated("Möbius pole lies in the closed domain".into()));
            }
        }
        self.map_holomorphic(move |z| (a * z + b) / (cc * z + d), move |z| det / ((cc * z + d) * (cc * z + d)))
    }

    /// `n` seeded interior points whose boundary distance is at least
    /// `margin` times the bounding-box diameter.
    pub fn interior_samples(&self, n: usize, seed: u64, margin: f64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [x0, x1, y0, y1] = self.bbox;
        let diam = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0usize;
        while out.len() < n && attempts < 10_000 * n.max(1) {
            attempts += 1;
            let z = c(rng.random_range(x0..x1), rng.random_range(y0..y1));
            if self.contains_point(z) && self.distance_to_boundary(z) >= margin * diam {
                out.push(z);
            }
        }
        out
    }

    /// Polar angles of the samples about `center`, unwrapped; `None` if they
    /// are not strictly monotone with total turn `±2π`.
    pub fn polar_angles(&self, center: Complex64) -> Option<Vec<f64>> {
        let m = self.points.len();
        let mut angles = Vec::with_capacity(m);
        let first = (self.points[0] - center).arg();
        angles.push(first);
        let mut prev = first;
        let mut sign = 0.0;
        for k in 1..=m {
            let z = self.points[k % m] - center;
            if z.norm() == 0.0 {
                return None;
            }
            let mut a = z.arg();
            while a - prev > PI {
                a -= TAU;
            }
            while a - prev < -PI {
                a += TAU;
            }
            let delta = a - prev;
            if delta == 0.0 {
                return None;
            }
            let s = delta.signum();
            if sign == 0.0 {
                sign = s;
            } else if s != sign {
                return None;
            }
            if k < m {
                angles.push(a);
            }
            prev = a;
        }
        if ((prev - first).abs() - TAU).abs() > 1e-6 {
            return None;
        }
        Some(angles)
    }
}

/// Fourth-order periodic central difference with step `2π/M`.
pub fn periodic_derivative(values: &[Complex64]) -> Vec<Complex64> {
    let m = values.len();
    if m < 5 {
        return vec![c(0.0, 0.0); m];
    }
    let h = TAU / m as f64;
    (0..m)
        .map(|k| {
            let at = |off: isize| values[((k as isize + off).rem_euclid(m as isize)) as usize];
            (at(-2) - at(-1) * 8.0 + at(1) * 8.0 - at(2)) / (12.0 * h)
        })
        .collect()
}

fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_cross(a0: Complex64, a1: Complex64, b0: Complex64, b1: Complex64) -> bool {
    let d1 = cross(a1 - a0, b0 - a0);
    let d2 = cross(a1 - a0, b1 - a0);
    let d3 = cross(b1 - b0, a0 - b0);
    let d4 = cross(b1 - b0, a1 - b0);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}
