//! Seeded property suites and report emission.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::domain::{Domain, PlanarDomain};
use crate::error::{Error, Result};
use crate::growth::{binomial, compositions_count, loglog_slope, verify_growth, UnipotentUpper};
use crate::linalg::{self, c, cr, CMat, CVec};
use crate::metric::{apollonian_distance, complex_hyperbolic_oracle, hilbert_distance, poincare_distance, translation_bound_check};
use crate::normal_form::{
    ball_test, diagonalize_quadric, extract_quadric, random_quadric, scaling_invariance_residual, slice_ellipse_axes,
    unit_grid, HessianQuadric, DEFAULT_BALL_TOL,
};
use crate::projective::{ProjectiveMap, ProjectivePoint};
use crate::qgeo::{midpoint_defect, quasi_isometry_defect, PlanarMap};
use crate::sampling;
use crate::spectral::{classify, north_south_iterate, spectral_data, ClassLabel};

pub const SUITES: [&str; 5] = ["metric", "dynamics", "growth", "qgeo", "normalform"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteConfig {
    /// Cases per property.
    pub cases: usize,
    /// Boundary samples for planar domains and slices.
    pub samples: usize,
    /// Spectral clustering tolerance.
    pub tol: f64,
    /// Midpoint search lattice size.
    pub grid: usize,
    /// Point pairs per quasi-isometry case.
    pub pairs: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { cases: 6, samples: 2048, tol: 1e-8, grid: 40, pairs: 12 }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::ConfigInvalid { field: field.to_string(), message: message.into() }
}

fn read_count(v: &Value, field: &str, range: std::ops::RangeInclusive<usize>) -> Result<usize> {
    let n = v
        .as_u64()
        .ok_or_else(|| invalid(field, "expected a non-negative integer"))? as usize;
    if !range.contains(&n) {
        return Err(invalid(field, format!("must lie in {}..={}", range.start(), range.end())));
    }
    Ok(n)
}

impl SuiteConfig {
    /// Overlays the fields of a JSON object on `self`.
    pub fn overlay_json(&mut self, text: &str) -> Result<()> {
        let v: Value = serde_json::from_str(text).map_err(|e| invalid("<root>", e.to_string()))?;
        self.overlay(&v)
    }

    pub fn overlay(&mut self, v: &Value) -> Result<()> {
        let obj = v.as_object().ok_or_else(|| invalid("<root>", "expected a JSON object"))?;
        for (key, val) in obj {
            match key.as_str() {
                "cases" => self.cases = read_count(val, key, 1..=10_000)?,
                "samples" => self.samples = read_count(val, key, 64..=crate::io::MAX_SAMPLES)?,
                "grid" => self.grid = read_count(val, key, 4..=1000)?,
                "pairs" => self.pairs = read_count(val, key, 1..=10_000)?,
                "tol" => {
                    let t = val.as_f64().ok_or_else(|| invalid(key, "expected a number"))?;
                    if !(t > 0.0 && t <= 1e-2) {
                        return Err(invalid(key, "must lie in (0, 1e-2]"));
                    }
                    self.tol = t;
                }
                // Accepted so one file can configure both the runner and the CLI.
                "seed" | "format" => {}
                _ => return Err(invalid(key, "unknown field")),
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseResult {
    pub id: String,
    pub property: String,
    pub inputs: Value,
    pub expected_bound: f64,
    pub observed: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub version: String,
    pub config: SuiteConfig,
    pub cases_run: usize,
    pub cases: Vec<CaseResult>,
    pub failures: Vec<CaseResult>,
    /// Not part of the emitted bytes, so reports stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SuiteReport {
    pub fn empty(suite: &str, seed: u64, config: SuiteConfig) -> Self {
        Self {
            suite: suite.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            cases_run: 0,
            cases: Vec::new(),
            failures: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            _ => Err(invalid("format", format!("unknown format `{s}`"))),
        }
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        String::new()
    }
}

/// Serializes a report. JSON is lossless, CSV has one row per case.
pub fn emit(report: &SuiteReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["id", "property", "expected_bound", "observed", "passed"]).expect("in-memory write");
            for case in &report.cases {
                w.write_record([
                    case.id.as_str(),
                    case.property.as_str(),
                    &num(case.expected_bound),
                    &num(case.observed),
                    if case.passed { "true" } else { "false" },
                ])
                .expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "suite {} (seed {}, version {}): {} cases, {} failures",
                report.suite,
                report.seed,
                report.version,
                report.cases_run,
                report.failures.len()
            );
            for f in &report.failures {
                let _ = writeln!(
                    s,
                    "  FAIL {}: observed {} vs bound {}{}",
                    f.id,
                    num(f.observed),
                    num(f.expected_bound),
                    f.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default()
                );
            }
            s.into_bytes()
        }
    }
}

/// Deterministic per-case seed.
fn case_seed(seed: u64, id: &str) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for b in id.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    // splitmix64 finalizer
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

struct Outcome {
    inputs: Value,
    bound: f64,
    observed: f64,
    passed: bool,
}

impl Outcome {
    fn at_most(inputs: Value, observed: f64, bound: f64) -> Self {
        Self { inputs, bound, observed, passed: observed <= bound }
    }
}

type CaseFn = fn(&mut ChaCha8Rng, &SuiteConfig) -> Result<Outcome>;

struct Property {
    name: &'static str,
    run: CaseFn,
    /// Cases as a multiple of `config.cases`; zero means a single case.
    weight: usize,
}

fn properties(suite: &str) -> Result<Vec<Property>> {
    let p = |name, run, weight| Property { name, run, weight };
    Ok(match suite {
        "metric" => vec![
            p("poincare", metric_poincare as CaseFn, 1),
            p("ball_oracle", metric_ball_oracle, 1),
            p("symmetry", metric_symmetry, 1),
            p("triangle", metric_triangle, 1),
            p("invariance", metric_invariance, 1),
            p("translation", metric_translation, 1),
        ],
        "dynamics" => vec![
            p("conjugation", dyn_conjugation as CaseFn, 1),
            p("inverse", dyn_inverse, 1),
            p("det_product", dyn_det_product, 1),
            p("north_south", dyn_north_south, 1),
        ],
        "growth" => vec![
            p("product", growth_product as CaseFn, 2),
            p("jordan", growth_jordan, 1),
            p("compositions", growth_compositions, 0),
        ],
        "qgeo" => vec![
            p("quadratic_defect", qgeo_quadratic as CaseFn, 1),
            p("similarity_defect", qgeo_similarity, 1),
            p("disk_midpoint", qgeo_midpoint, 0),
        ],
        "normalform" => vec![
            p("round_trip", nf_round_trip as CaseFn, 1),
            p("ball_iff", nf_ball_iff, 1),
            p("hessian", nf_hessian, 1),
            p("scaling", nf_scaling, 1),
            p("witness", nf_witness, 0),
        ],
        other => return Err(Error::UnknownSuite(other.to_string())),
    })
}

/// Runs the named suite (or `all`) with randomness derived only from `seed`.
pub fn run_suite(name: &str, seed: u64, config: &SuiteConfig) -> Result<SuiteReport> {
    let suites: Vec<&str> = if name == "all" { SUITES.to_vec() } else { vec![name] };
    let mut specs: Vec<(String, &'static str, CaseFn)> = Vec::new();
    for s in &suites {
        for prop in properties(s)? {
            let n = if prop.weight == 0 { 1 } else { prop.weight * config.cases };
            for k in 0..n {
                specs.push((format!("{s}/{}/{k:04}", prop.name), prop.name, prop.run));
            }
        }
    }
    let start = Instant::now();
    let mut cases: Vec<CaseResult> = specs
        .par_iter()
        .map(|(id, property, run)| {
            let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, id));
            match run(&mut rng, config) {
                Ok(o) => CaseResult {
                    id: id.clone(),
                    property: property.to_string(),
                    inputs: o.inputs,
                    expected_bound: o.bound,
                    observed: o.observed,
                    passed: o.passed,
                    error: None,
                },
                Err(e) => CaseResult {
                    id: id.clone(),
                    property: property.to_string(),
                    inputs: Value::Null,
                    expected_bound: f64::NAN,
                    observed: f64::NAN,
                    passed: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    cases.sort_by(|a, b| a.id.cmp(&b.id));
    let mut report = SuiteReport::empty(name, seed, config.clone());
    report.cases_run = cases.len();
    report.failures = cases.iter().filter(|c| !c.passed).cloned().collect();
    report.cases = cases;
    report.wall_time = start.elapsed();
    Ok(report)
}

fn cjson(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn metric_poincare(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Outcome> {
    let disk = PlanarDomain::unit_disk(cfg.samples);
    let (z1, z2) = (sampling::random_in_disk(0.9, rng), sampling::random_in_disk(0.9, rng));
    let d = apollonian_distance(&disk, z1, z2)?.value;
    let e = (d - poincare_distance(z1, z2)).abs();
    Ok(Outcome::at_most(json!({"z1": cjson(z1), "z2": cjson(z2)}), e, 1e-6))
}

fn ball_point(dim: usize, r: f64, rng: &mut ChaCha8Rng) -> ProjectivePoint {
    ProjectivePoint::from_chart(&sampling::random_in_ball(dim, r, rng))
}

fn metric_ball_oracle(rng: &mut ChaCha8Rng, _cfg: &SuiteConfig) -> Result<Outcome> {
    let dim = rng.random_range(2..=3);
    let ball = Domain::ball(dim);
    let (p, q) = (ball_point(dim, 0.8, rng), ball_point(dim, 0.8, rng));
    let d = hilbert_distance(&ball, &p, &q)?.value;
    let e = (d - complex_hyperbolic_oracle(&p, &q)?).abs();
    Ok(Outcome::at_most(json!({"dim": dim}), e, 1e-6))
}

fn metric_symmetry(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Outcome> {
    let ell = PlanarDomain::ellipse(2.0, 1.0, cfg.samples)?;
    let pts = ell.interior_samples(2, rng.random(), 0.02);
    let a = apollonian_distance(&ell, pts[0], pts[1])?.value;
    let b = apollonian_distance(&ell, pts[1], pts[0])?.value;
    Ok(Outcome::at_most(json!({"x": cjson(pts[0]), "y": cjson(pts[1])}), (a - b).abs(), 1e-10))
}

fn metric_triangle(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Outcome> {
    let ell = PlanarDomain::ellipse(2.0, 1.0, cfg.samples)?;
    let pts = ell.interior_samples(3, rng.random(), 0.02);
    let xy = apollonian_distance(&ell, pts[0], pts[1])?;
    let yz = apollonian_distance(&ell, pts[1], pts[2])?;
    let xz = apollonian_distance(&ell, pts[0], pts[2])?;
    let excess = xz.value - xy.value - yz.value;
    let err = xy.refinement_error + yz.refinement_error + xz.refinement_error;
    Ok(Outcome::at_most(json!({"points": pts.iter().map(|&z| cjson(z)).collect::<Vec<_>>()}), excess, 3.0 * err + 1e-12))
}

fn metric_invariance(rng: &mut ChaCha8Rng, _cfg: &SuiteConfig) -> Result<Outcome> {
    let ball = Domain::ball(2);
    let phi = sampling::random_ball_automorphism(2, 1.5, rng);
    let (p, q) = (ball_point(2, 0.7, rng), ball_point(2, 0.7, rng));
    let before = hilbert_distance(&ball, &p, &q)?.value;
    let after = hilbert_distance(&ball, &phi.apply(&p), &phi.apply(&q))?.value;
    Ok(Outcome::at_most(json!({"before": before}), (after - before).abs(), 1e-6))
}

fn metric_translation(rng: &mut ChaCha8Rng, _cfg: &SuiteConfig) -> Result<Outcome> {
    let dim = rng.random_range(1..=2);
    let ball = Domain::ball(dim);
    let phi = sampling::random_ball_automorphism(dim, 2.0, rng);
    let x0 = ball_point(dim, 0.5, rng);
    let b = translation_bound_check(&ball, &phi, &x0)?;
    Ok(Outcome::at_most(json!({"dim": dim, "lhs": b.lhs, "rhs": b.rhs}), b.lhs - b.rhs, 0.0))
}

fn random_phase(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

/// A diagonal map from one of the three canonical families, conjugated.
fn canonical_map(kind: usize, rng: &mut ChaCha8Rng) -> Result<(ProjectiveMap, ClassLabel)> {
    let (diag, label) = match kind % 3 {
        0 => (vec![cr(2.0), random_phase(rng), cr(0.5)], ClassLabel::BiProximal),
        1 => (vec![random_phase(rng), random_phase(rng), random_phase(rng)], ClassLabel::AlmostUnipotent),
        _ => (vec![cr(2.0), random_phase(rng) * 2.0, cr(0.25)], ClassLabel::InverseProximalOnly),
    };
    let d = CMat::from_diagonal(&CVec::from_vec(diag));
    let g = sampling::random_well_conditioned(3, 1e3, rng);
    let inv = g.clone().try_inverse().ok_or(Error::SingularMatrix)?;
    Ok((ProjectiveMap::new(&g * d * inv)?, label))
}

fn dyn_conjugation(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Outcome> {
    let kind = rng.random_range(0..3usize);
    let (phi, expected) = canonical_map(kind, rng)?;
    let g = ProjectiveMap::new(sampling::random_well_conditioned(3, 1e3, rng))?;
    let a = classify(&phi, cfg.tol);
    let b = classify(&phi.conjugate_by(&g), cfg.tol);
    let mismatch = (a != expected || b != expected) as u8 as f64;
    Ok(Outcome::at_most(json!({"expected": expected.to_string(), "label": a.to_string(), "conjugated": b.to_string()}), mismatch, 0.0))
}

fn dyn_inverse(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Outcome> {
    let kind = rng.random_range(0..3usize);
    let (phi, _) = canonical_map(kind, rng)?;
    let a = classify(&phi, cfg.tol) == ClassLabel::BiProximal;
    let b = classify(&phi.inverse(), cfg.tol) == ClassLabel::BiProximal;
    Ok(Outcome::at_most(json!({"forward": a, "inverse": b}), (a != b) as u8 as f64, 0.0))
}

fn dyn_det_product(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Outcome> {
    let n = rng.random_range(2..=5);
    let m = sampling::random_well_conditioned(n, 1e3, rng);
    let det = linalg::determinant(&m).norm();
    let m = m * cr(det.powf(-1.0 / n as f64));
    let sd = spectral_data(&ProjectiveMap::new(m)?, cfg.tol)?;
    let prod: f64 = sd.sigmas.iter().product();
    Ok(Outcome::at_most(json!({"n": n}), (prod - 1.0).abs(), 1e-9))
}

fn dyn_north_south(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Outcome> {
    let ball = Domain::ball(2);
    let phi = sampling::random_biproximal_ball_map(2, 0.5, 1.5, rng);
    let x = ball.boundary_samples(1, rng.random())[0].clone();
    let t = north_south_iterate(&ball, &phi, &x, 60, 1e-3, cfg.tol)?;
    let err = t.rate_error().unwrap_or(f64::INFINITY);
    let contacts_ok = t.contacts_plus == 1 && t.contacts_minus == 1;
    let observed = if contacts_ok { err } else { f64::INFINITY };
    Ok(Outcome::at_most(
        json!({"expected_rate": t.expected_rate, "fitted_rate": t.fitted_rate, "contacts": [t.contacts_plus, t.contacts_minus]}),
        observed,
        0.1,
    ))
}

fn growth_product(rng: &mut ChaCha8Rng, _cfg: &SuiteConfig) -> Result<Outcome> {
    let d = rng.random_range(1..=5usize);
    let n = rng.random_range(1..=200usize);
    let seq: Vec<UnipotentUpper> = (0..n).map(|_| UnipotentUpper::random(d + 1, 2.0, rng)).collect();
    let g = verify_growth(&seq)?;
    Ok(Outcome::at_most(json!({"d": d, "n": n, "lhs": g.lhs, "rhs": g.rhs}), g.lhs / g.rhs, 1.0))
}

fn growth_jordan(rng: &mut ChaCha8Rng, _cfg: &SuiteConfig) -> Result<Outcome> {
    let d = rng.random_range(1..=5usize);
    let ns: Vec<usize> = (10..=20).map(|k| 10 * k).collect();
    let mut lhs = Vec::new();
    let mut shortfall: f64 = 0.0;
    for &n in &ns {
        let seq = vec![UnipotentUpper::jordan(d + 1); n];
        let g = verify_growth(&seq)?;
        shortfall = shortfall.max(binomial(n as u64, d as u64) / g.lhs);
        lhs.push(g.lhs);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&xs, &lhs);
    // Slope over N in [100, 200], where the local slope of binom(N, d) is
    // within 0.1 of d. Infinity if the lower bound binom(N, d) is missed.
    let observed = if shortfall <= 1.0 + 1e-12 { slope - d as f64 } else { f64::INFINITY };
    Ok(Outcome::at_most(json!({"d": d, "slope": slope}), observed, 0.1))
}

fn brute_compositions(k: u64, n: u64) -> u64 {
    if n == 0 {
        return (k == 0) as u64;
    }
    (1..=k).map(|first| brute_compositions(k - first, n - 1)).sum()
}

fn growth_compositions(_rng: &mut ChaCha8Rng, _cfg: &SuiteConfig) -> Result<Outcome> {
    let mut mismatches = 0u64;
    for k in 0..=8 {
        for n in 0..=8 {
            mismatches += (compositions_count(k, n) != brute_compositions(k, n)) as u64;
        }
    }
    Ok(Outcome::at_most(json!({"max": 8}), mismatches as f64, 0.0))
}

fn qgeo_quadratic(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Outcome> {
    let cst = sampling::random_in_disk(0.2, rng);
    let disk = PlanarDomain::unit_disk(cfg.samples);
    let image = disk.map_holomorphic(move |z| z + cst * z * z, move |z| cr(1.0) + cst * z * 2.0)?;
    let seed = rng.random();
    let f = PlanarMap::on_domain(move |z| z + cst * z * z, &disk, 4 * cfg.pairs, seed);
    let r = quasi_isometry_defect(&f, &disk, &image, cfg.pairs, seed)?;
    Ok(Outcome::at_most(json!({"c": cjson(cst), "k": r.k}), r.defect, r.bound + crate::qgeo::METRIC_TOL))
}

fn qgeo_similarity(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Outcome> {
    let a = random_phase(rng) * rng.random_range(0.5..3.0);
    let b = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let disk = PlanarDomain::unit_disk(cfg.samples);
    let image = disk.map_holomorphic(move |z| a * z + b, move |_| a)?;
    let seed = rng.random();
    let f = PlanarMap::on_domain(move |z| a * z + b, &disk, 4 * cfg.pairs, seed);
    let r = quasi_isometry_defect(&f, &disk, &image, cfg.pairs, seed)?;
    Ok(Outcome::at_most(json!({"a": cjson(a), "b": cjson(b)}), r.defect, 1e-6))
}

fn qgeo_midpoint(_rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Outcome> {
    let disk = PlanarDomain::unit_disk(cfg.samples);
    let (x, y) = (c(-0.5, 0.1), c(0.4, 0.3));
    let r = midpoint_defect(&disk, x, y, cfg.grid)?;
    Ok(Outcome::at_most(json!({"x": cjson(x), "y": cjson(y), "grid": cfg.grid}), r.defect, 1e-3))
}

fn nf_round_trip(rng: &mut ChaCha8Rng, _cfg: &SuiteConfig) -> Result<Outcome> {
    let m = rng.random_range(1..=6usize);
    let (l, q, betas) = random_quadric(m, 0.95, rng);
    let diag = diagonalize_quadric(&HessianQuadric::new(l, q)?)?;
    let e = diag.betas.iter().zip(&betas).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Outcome::at_most(json!({"betas": betas}), e, 1e-6))
}

fn nf_ball_iff(rng: &mut ChaCha8Rng, _cfg: &SuiteConfig) -> Result<Outcome> {
    let m = rng.random_range(1..=6usize);
    let zero = rng.random::<bool>();
    let (l, q, betas) = if zero { random_quadric(m, 0.0, rng) } else { random_quadric(m, 0.9, rng) };
    let all_zero = betas.iter().all(|&b| b == 0.0);
    let mut h = HessianQuadric::new(l, q)?;
    h.betas = Some(diagonalize_quadric(&h)?.betas);
    let t = ball_test(&h, DEFAULT_BALL_TOL)?;
    Ok(Outcome::at_most(json!({"betas": betas, "is_ball": t.is_ball}), (t.is_ball != all_zero) as u8 as f64, 0.0))
}

fn nf_hessian(rng: &mut ChaCha8Rng, _cfg: &SuiteConfig) -> Result<Outcome> {
    let m = rng.random_range(1..=4usize);
    let (l, q, _) = random_quadric(m, 0.9, rng);
    let (l2, q2) = (l.clone(), q.clone());
    let f = move |_x: f64, z: &[Complex64]| crate::domain::quadric_height(&l2, &q2, z);
    let h = extract_quadric(&f, m, 1e-8)?;
    let scale = linalg::operator_norm(&l).max(1.0);
    let e = ((&h.l - &l).norm() + (&h.q - &q).norm()) / scale;
    Ok(Outcome::at_most(json!({"m": m}), e, 1e-6))
}

fn nf_scaling(rng: &mut ChaCha8Rng, _cfg: &SuiteConfig) -> Result<Outcome> {
    let m = rng.random_range(1..=6usize);
    let (l, q, _) = random_quadric(m, 0.9, rng);
    let f = move |_x: f64, z: &[Complex64]| crate::domain::quadric_height(&l, &q, z);
    let grid = unit_grid(m, 32, rng.random());
    let r = scaling_invariance_residual(&f, &grid, &[0.25, 1.0])?;
    Ok(Outcome::at_most(json!({"m": m}), r, 1e-12))
}

fn nf_witness(_rng: &mut ChaCha8Rng, _cfg: &SuiteConfig) -> Result<Outcome> {
    let (a, b) = slice_ellipse_axes(0.3, 1.0)?;
    let t = ball_test(&HessianQuadric::from_betas(&[0.3])?, DEFAULT_BALL_TOL)?;
    let expected = (13.0f64 / 7.0).sqrt();
    let e = (a / b - expected).abs().max((t.witness_slice_ratio - expected).abs());
    Ok(Outcome::at_most(json!({"beta": 0.3, "ratio": t.witness_slice_ratio}), e, 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteConfig {
        SuiteConfig { cases: 2, samples: 512, grid: 20, pairs: 4, ..SuiteConfig::default() }
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("nope", 1, &small()), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn config_diagnostics() {
        let mut cfg = SuiteConfig::default();
        cfg.overlay_json(r#"{"cases": 3, "tol": 1e-9}"#).unwrap();
        assert_eq!((cfg.cases, cfg.tol), (3, 1e-9));
        let err = cfg.overlay_json(r#"{"samples": 2}"#).unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid { ref field, .. } if field == "samples"));
        let err = cfg.overlay_json(r#"{"colour": 1}"#).unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid { ref field, .. } if field == "colour"));
        assert!(cfg.overlay_json("[1]").is_err());
    }

    #[test]
    fn emit_formats() {
        let r = SuiteReport::empty("metric", 0, SuiteConfig::default());
        let v: Value = serde_json::from_slice(&emit(&r, Format::Json)).unwrap();
        assert_eq!(v["cases_run"], 0);
        assert_eq!(String::from_utf8(emit(&r, Format::Csv)).unwrap().lines().count(), 1);
        assert!(String::from_utf8(emit(&r, Format::Text)).unwrap().contains("0 failures"));
    }

    #[test]
    fn growth_suite_is_deterministic() {
        let a = run_suite("growth", 5, &small()).unwrap();
        let b = run_suite("growth", 5, &small()).unwrap();
        assert!(a.passed(), "{:?}", a.failures);
        assert_eq!(emit(&a, Format::Json), emit(&b, Format::Json));
        let rows = String::from_utf8(emit(&a, Format::Csv)).unwrap().lines().count() - 1;
        assert_eq!(rows, a.cases_run);
    }
}
