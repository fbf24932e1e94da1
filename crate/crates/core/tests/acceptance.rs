use std::f64::consts::TAU;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use pcx::domain::{planar_point, Domain, PlanarDomain};
use pcx::growth::{binomial, compositions_count, loglog_slope, verify_growth, UnipotentUpper};
use pcx::linalg::{self, c, cr};
use pcx::metric::{apollonian_distance, complex_hyperbolic_oracle, hilbert_distance, translation_bound_check};
use pcx::normal_form::{
    ball_test, diagonalize_quadric, extract_quadric, random_quadric, scaling_invariance_residual, slice_ellipse_axes,
    unit_grid, HessianQuadric, DEFAULT_BALL_TOL,
};
use pcx::projective::{line_through, ProjectiveMap, ProjectivePoint};
use pcx::qgeo::{midpoint_defect, quasi_isometry_defect, PlanarMap};
use pcx::sampling;
use pcx::spectral::{classify, north_south_iterate, spectral_data, ClassLabel};
use pcx::suite::{emit, run_suite, Format, SuiteConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Midpoint defect of the 2:1 ellipse for `x = -0.5`, `y = 0.5 + 0.3i` at
/// grid 200 with 2048 boundary samples.
const ELLIPSE_DEFECT: f64 = 0.012686967287507844;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

type Check = fn() -> pcx::Result<Verdict>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn poincare(z1: Complex64, z2: Complex64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    2.0 * ((z1 - z2).norm() / (one - z2.conj() * z1).norm()).atanh()
}

fn poincare_identity() -> pcx::Result<Verdict> {
    let start = Instant::now();
    let disk = PlanarDomain::unit_disk(4096);
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (z1, z2) = (sampling::random_in_disk(0.95, &mut r), sampling::random_in_disk(0.95, &mut r));
        worst = worst.max((apollonian_distance(&disk, z1, z2)?.value - poincare(z1, z2)).abs());
    }
    let t = start.elapsed();
    Ok(Verdict::new(worst < 1e-6 && within(t, 10.0), format!("max |err| {worst:.2e} over 200 pairs, M=4096")))
}

fn ball_point(dim: usize, radius: f64, r: &mut ChaCha8Rng) -> ProjectivePoint {
    ProjectivePoint::from_chart(&sampling::random_in_ball(dim, radius, r))
}

fn line_restriction() -> pcx::Result<Verdict> {
    let start = Instant::now();
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for dim in [2, 3] {
        let ball = Domain::ball(dim);
        for _ in 0..100 {
            let (p, q) = (ball_point(dim, 0.9, &mut r), ball_point(dim, 0.9, &mut r));
            let d = hilbert_distance(&ball, &p, &q)?.value;
            worst = worst.max((d - complex_hyperbolic_oracle(&p, &q)?).abs());
        }
    }
    let t = start.elapsed();
    Ok(Verdict::new(worst < 1e-6 && within(t, 30.0), format!("max |err| {worst:.2e} over 2x100 pairs in ball(2), ball(3)")))
}

fn metric_axioms() -> pcx::Result<Verdict> {
    let mut r = rng(3);
    let disk = PlanarDomain::unit_disk(2048);
    let ellipse = PlanarDomain::ellipse(2.0, 1.0, 2048)?;
    let ball = Domain::ball(2);
    let mut slices = Vec::new();
    while slices.len() < 17 {
        let line = line_through(&ball_point(2, 0.8, &mut r), &ball_point(2, 0.8, &mut r))?;
        slices.push(ball.slice(&line, 2048)?.domain);
    }
    let (mut asym, mut excess, mut violations) = (0.0f64, 0.0f64, 0);
    for k in 0..500 {
        let domain = match k % 3 {
            0 => &disk,
            1 => &ellipse,
            _ => &slices[(k / 3) % slices.len()],
        };
        let p = domain.interior_samples(3, r.random(), 0.02);
        let mut d = [0.0; 3];
        let mut err = 0.0;
        for (i, (a, b)) in [(0, 1), (1, 2), (0, 2)].into_iter().enumerate() {
            let fwd = apollonian_distance(domain, p[a], p[b])?;
            let back = apollonian_distance(domain, p[b], p[a])?.value;
            let s = (fwd.value - back).abs();
            asym = asym.max(s);
            violations += (s >= 1e-10) as usize;
            d[i] = fwd.value;
            err += fwd.refinement_error;
        }
        let e = d[2] - d[0] - d[1];
        excess = excess.max(e);
        violations += (e > 3.0 * err + 1e-12) as usize;
    }
    Ok(Verdict::new(
        violations == 0,
        format!("500 triples, max asymmetry {asym:.1e}, max triangle excess {excess:.1e}, {violations} violations"),
    ))
}

fn disk_mobius(r: &mut ChaCha8Rng) -> impl Fn(Complex64) -> Complex64 {
    let a = sampling::random_in_disk(0.7, r);
    let rot = Complex64::from_polar(1.0, r.random_range(0.0..TAU));
    move |z| rot * (z - a) / (cr(1.0) - a.conj() * z)
}

fn invariance() -> pcx::Result<Verdict> {
    let mut r = rng(4);
    let disk = PlanarDomain::unit_disk(4096);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let f = disk_mobius(&mut r);
        let (z1, z2) = (sampling::random_in_disk(0.7, &mut r), sampling::random_in_disk(0.7, &mut r));
        let before = apollonian_distance(&disk, z1, z2)?.value;
        let after = apollonian_distance(&disk, f(z1), f(z2))?.value;
        worst = worst.max((after - before).abs());
    }
    let ball = Domain::ball(2);
    for _ in 0..100 {
        let phi = sampling::random_ball_automorphism(2, 1.5, &mut r);
        let (p, q) = (ball_point(2, 0.7, &mut r), ball_point(2, 0.7, &mut r));
        let before = hilbert_distance(&ball, &p, &q)?.value;
        let after = hilbert_distance(&ball, &phi.apply(&p), &phi.apply(&q))?.value;
        worst = worst.max((after - before).abs());
    }
    Ok(Verdict::new(worst < 1e-6, format!("max |d(φp,φq) - d(p,q)| {worst:.2e} over 100 disk + 100 ball maps")))
}

fn translation() -> pcx::Result<Verdict> {
    let mut r = rng(5);
    let disk = Domain::Planar(PlanarDomain::unit_disk(2048));
    let ball = Domain::ball(2);
    let mut violations = 0;
    let mut slack = f64::INFINITY;
    for k in 0..100 {
        let b = if k % 2 == 0 {
            let phi = sampling::disk_automorphism_planar(&sampling::random_ball_automorphism(1, 2.0, &mut r));
            translation_bound_check(&disk, &phi, &planar_point(sampling::random_in_disk(0.5, &mut r)))?
        } else {
            let phi = sampling::random_ball_automorphism(2, 2.0, &mut r);
            translation_bound_check(&ball, &phi, &ball_point(2, 0.5, &mut r))?
        };
        violations += !b.holds as usize;
        slack = slack.min(b.rhs - b.lhs);
    }
    let mut boost_err: f64 = 0.0;
    for dim in 1..=3 {
        let ball = Domain::ball(dim);
        let origin = ProjectivePoint::from_chart(&vec![cr(0.0); dim]);
        for t in [0.1, 0.5, 1.0, 2.0, 3.0] {
            let b = translation_bound_check(&ball, &sampling::ball_boost(dim, t), &origin)?;
            violations += !b.holds as usize;
            boost_err = boost_err.max((b.lhs - 2.0 * t).abs());
        }
    }
    Ok(Verdict::new(
        violations == 0 && boost_err < 1e-6,
        format!("{violations} violations over 100 maps + 15 boosts, min slack {slack:.3}, boost |lhs - 2t| {boost_err:.1e}"),
    ))
}

fn gaussian_conjugator(r: &mut ChaCha8Rng) -> ProjectiveMap {
    loop {
        let g = linalg::random_complex_matrix(3, 3, r);
        let sv = linalg::singular_values(&g);
        if sv[0] / sv[2] < 1e6 {
            return ProjectiveMap::new(g).expect("invertible");
        }
    }
}

fn classification() -> pcx::Result<Verdict> {
    let tol = 1e-8;
    let mut r = rng(6);
    let diag = |d: [Complex64; 3]| ProjectiveMap::from_diagonal(&d);
    let canonical = [
        (diag([cr(2.0), cr(1.0), cr(0.5)])?, ClassLabel::BiProximal),
        (ProjectiveMap::new(linalg::random_unitary(3, &mut r))?, ClassLabel::AlmostUnipotent),
        (diag([cr(2.0), cr(2.0), cr(0.25)])?, ClassLabel::InverseProximalOnly),
    ];
    let mut mislabeled = 0;
    for (phi, label) in &canonical {
        mislabeled += (classify(phi, tol) != *label) as usize;
    }
    let (mut mismatches, mut det_err) = (0, 0.0f64);
    for k in 0..100 {
        let phi = if k % 4 == 3 {
            ProjectiveMap::new(linalg::random_complex_matrix(3, 3, &mut r))?
        } else {
            canonical[k % 4].0.conjugate_by(&gaussian_conjugator(&mut r))
        };
        let g = gaussian_conjugator(&mut r);
        let conj = phi.conjugate_by(&g);
        mismatches += (classify(&phi, tol) != classify(&conj, tol)) as usize;
        for m in [&phi, &conj] {
            let sd = spectral_data(m, tol)?;
            det_err = det_err.max((sd.sigmas.iter().product::<f64>() - 1.0).abs());
        }
    }
    Ok(Verdict::new(
        mislabeled == 0 && mismatches == 0 && det_err < 1e-9,
        format!("{mismatches}/100 conjugation mismatches, {mislabeled}/3 canonical mislabels, max |Πσ - 1| {det_err:.1e}"),
    ))
}

fn north_south() -> pcx::Result<Verdict> {
    let mut r = rng(7);
    let (mut worst, mut bad_contacts, mut unfitted) = (0.0f64, 0, 0);
    for k in 0..20 {
        let dim = 2 + k % 2;
        let ball = Domain::ball(dim);
        let phi = sampling::random_biproximal_ball_map(dim, 0.5, 1.5, &mut r);
        let x = ball.boundary_samples(1, r.random())[0].clone();
        let t = north_south_iterate(&ball, &phi, &x, 60, 1e-3, 1e-8)?;
        match t.rate_error() {
            Some(e) => worst = worst.max(e),
            None => unfitted += 1,
        }
        bad_contacts += (t.contacts_plus != 1 || t.contacts_minus != 1) as usize;
    }
    Ok(Verdict::new(
        worst <= 0.1 && bad_contacts == 0 && unfitted == 0,
        format!("max relative rate error {worst:.2e}, {bad_contacts} contact failures, {unfitted} unfitted over 20 maps"),
    ))
}

fn brute_compositions(k: u64, n: u64) -> u64 {
    if n == 0 {
        return (k == 0) as u64;
    }
    (1..=k).map(|first| brute_compositions(k - first, n - 1)).sum()
}

fn growth() -> pcx::Result<Verdict> {
    let start = Instant::now();
    let mut r = rng(8);
    let mut violations = 0;
    for _ in 0..1000 {
        let d = r.random_range(1..=5usize);
        let n = r.random_range(1..=200usize);
        let seq: Vec<UnipotentUpper> = (0..n).map(|_| UnipotentUpper::random(d + 1, 2.0, &mut r)).collect();
        violations += !verify_growth(&seq)?.holds as usize;
    }
    let ns: Vec<usize> = (1..=20).map(|k| 10 * k).collect();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let (mut slope_excess, mut jordan_short) = (f64::NEG_INFINITY, 0);
    for d in 1..=5usize {
        let mut peak = vec![0.0f64; ns.len()];
        for _ in 0..5 {
            let seq: Vec<UnipotentUpper> = (0..200).map(|_| UnipotentUpper::random(d + 1, 2.0, &mut r)).collect();
            for (i, &n) in ns.iter().enumerate() {
                peak[i] = peak[i].max(verify_growth(&seq[..n])?.lhs);
            }
        }
        slope_excess = slope_excess.max(loglog_slope(&xs, &peak) - d as f64);
        for &n in &ns {
            let lhs = verify_growth(&vec![UnipotentUpper::jordan(d + 1); n])?.lhs;
            jordan_short += (lhs < binomial(n as u64, d as u64)) as usize;
        }
    }
    let mut comp_mismatch = 0;
    for k in 0..=8 {
        for n in 0..=8 {
            comp_mismatch += (compositions_count(k, n) != brute_compositions(k, n)) as usize;
        }
    }
    let t = start.elapsed();
    Ok(Verdict::new(
        violations == 0 && slope_excess <= 0.1 && jordan_short == 0 && comp_mismatch == 0 && within(t, 60.0),
        format!(
            "{violations}/1000 violations, max slope - d {slope_excess:.3}, {jordan_short} Jordan shortfalls, {comp_mismatch} composition mismatches"
        ),
    ))
}

fn quasi_isometry() -> pcx::Result<Verdict> {
    let disk = PlanarDomain::unit_disk(2048);
    let mut violations = 0;
    let mut worst_margin = f64::NEG_INFINITY;
    for k in 0..10 {
        let cst = Complex64::from_polar(0.02 * (k + 1) as f64, 0.7 * k as f64);
        let image = disk.map_holomorphic(move |z| z + cst * z * z, move |z| cr(1.0) + cst * z * 2.0)?;
        let f = PlanarMap::on_domain(move |z| z + cst * z * z, &disk, 800, 100 + k);
        let rep = quasi_isometry_defect(&f, &disk, &image, 200, 100 + k)?;
        violations += (rep.defect > rep.bound + 1e-3) as usize;
        worst_margin = worst_margin.max(rep.defect - rep.bound);
    }
    let mut r = rng(9);
    let mut sim: f64 = 0.0;
    for k in 0..5 {
        let a = Complex64::from_polar(r.random_range(0.5..3.0), r.random_range(0.0..TAU));
        let b = c(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let image = disk.map_holomorphic(move |z| a * z + b, move |_| a)?;
        let f = PlanarMap::on_domain(move |z| a * z + b, &disk, 800, 200 + k);
        sim = sim.max(quasi_isometry_defect(&f, &disk, &image, 200, 200 + k)?.defect);
    }
    Ok(Verdict::new(
        violations == 0 && sim < 1e-6,
        format!("{violations}/10 quadratic maps over bound, max defect - 4 log k {worst_margin:.3}, similarity defect {sim:.1e}"),
    ))
}

/// Independent Apollonian distance on the ellipse `(2 cos θ, sin θ)`.
fn ellipse_one_sided(x: Complex64, y: Complex64) -> f64 {
    let g = |t: f64| {
        let a = c(2.0 * t.cos(), t.sin());
        ((a - y).norm() / (a - x).norm()).ln()
    };
    let n = 4096;
    let (mut best, mut bt) = (f64::NEG_INFINITY, 0.0);
    for k in 0..n {
        let t = TAU * k as f64 / n as f64;
        let v = g(t);
        if v > best {
            best = v;
            bt = t;
        }
    }
    let h = TAU / n as f64;
    let (mut a, mut b) = (bt - h, bt + h);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (l, u) = (b - ratio * (b - a), a + ratio * (b - a));
        if g(l) > g(u) {
            b = u;
        } else {
            a = l;
        }
    }
    best.max(g(0.5 * (a + b))).max(0.0)
}

fn ellipse_dist(x: Complex64, y: Complex64) -> f64 {
    ellipse_one_sided(x, y) + ellipse_one_sided(y, x)
}

fn nelder_mead(f: &dyn Fn([f64; 2]) -> f64, start: [f64; 2], step: f64) -> (f64, [f64; 2]) {
    let mut s: Vec<([f64; 2], f64)> =
        [start, [start[0] + step, start[1]], [start[0], start[1] + step]].iter().map(|&p| (p, f(p))).collect();
    for _ in 0..400 {
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
        let cen = [(s[0].0[0] + s[1].0[0]) / 2.0, (s[0].0[1] + s[1].0[1]) / 2.0];
        let at = |t: f64| [cen[0] + t * (s[2].0[0] - cen[0]), cen[1] + t * (s[2].0[1] - cen[1])];
        let refl = at(-1.0);
        let fr = f(refl);
        if fr < s[0].1 {
            let exp = at(-2.0);
            let fe = f(exp);
            s[2] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < s[1].1 {
            s[2] = (refl, fr);
        } else {
            let con = at(0.5);
            let fc = f(con);
            if fc < s[2].1 {
                s[2] = (con, fc);
            } else {
                let best = s[0].0;
                for v in s.iter_mut().skip(1) {
                    v.0 = [(v.0[0] + best[0]) / 2.0, (v.0[1] + best[1]) / 2.0];
                    v.1 = f(v.0);
                }
            }
        }
    }
    s.sort_by(|a, b| a.1.total_cmp(&b.1));
    (s[0].1, s[0].0)
}

fn oracle_ellipse_defect(x: Complex64, y: Complex64) -> f64 {
    let half = 0.5 * ellipse_dist(x, y);
    let objective = |p: [f64; 2]| {
        let m = c(p[0], p[1]);
        if (p[0] / 2.0).powi(2) + p[1].powi(2) >= 0.98 {
            return f64::INFINITY;
        }
        (ellipse_dist(x, m) - half).abs().max((ellipse_dist(y, m) - half).abs())
    };
    let mut starts: Vec<(f64, [f64; 2])> = Vec::new();
    for i in 0..=20 {
        for j in 0..=20 {
            let p = [-2.0 + 0.2 * i as f64, -1.0 + 0.1 * j as f64];
            let v = objective(p);
            if v.is_finite() {
                starts.push((v, p));
            }
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    starts.iter().take(4).map(|&(_, p)| nelder_mead(&objective, p, 0.05).0).fold(f64::INFINITY, f64::min)
}

fn non_geodesicity() -> pcx::Result<Verdict> {
    let disk = PlanarDomain::unit_disk(2048);
    let ellipse = PlanarDomain::ellipse(2.0, 1.0, 2048)?;
    let base = midpoint_defect(&disk, c(-0.5, 0.1), c(0.4, 0.3), 200)?.defect;
    let (x, y) = (c(-0.5, 0.0), c(0.5, 0.3));
    let ell = midpoint_defect(&ellipse, x, y, 200)?;
    let half = 0.5 * ellipse_dist(x, y);
    let at_midpoint = (ellipse_dist(x, ell.midpoint) - half).abs().max((ellipse_dist(y, ell.midpoint) - half).abs());
    let oracle = oracle_ellipse_defect(x, y);
    let pass = base < 1e-3
        && ell.defect > base
        && (ell.defect - ELLIPSE_DEFECT).abs() < 1e-6
        && (at_midpoint - ell.defect).abs() < 1e-9
        && (oracle - ELLIPSE_DEFECT).abs() < 1e-6;
    Ok(Verdict::new(
        pass,
        format!("disk {base:.2e}, ellipse {:.12} (frozen {ELLIPSE_DEFECT:.12}, oracle {oracle:.12})", ell.defect),
    ))
}

fn normal_form() -> pcx::Result<Verdict> {
    let start = Instant::now();
    let mut r = rng(11);
    let (mut beta_err, mut ball_wrong, mut residual) = (0.0f64, 0, 0.0f64);
    for k in 0..100 {
        let m = 1 + k % 6;
        let zero = k % 4 == 0;
        let (l, q, betas) = random_quadric(m, if zero { 0.0 } else { 0.9 }, &mut r);
        let f = move |_x: f64, z: &[Complex64]| pcx::domain::quadric_height(&l, &q, z);
        residual = residual.max(scaling_invariance_residual(&f, &unit_grid(m, 32, k as u64), &[0.25, 0.5, 2.0])?);
        let mut h = extract_quadric(&f, m, 1e-8)?;
        let diag = diagonalize_quadric(&h)?;
        beta_err = beta_err.max(diag.betas.iter().zip(&betas).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        h.betas = Some(diag.betas);
        ball_wrong += (ball_test(&h, DEFAULT_BALL_TOL)?.is_ball != zero) as usize;
    }
    let expected = (13.0f64 / 7.0).sqrt();
    let (a, b) = slice_ellipse_axes(0.3, 1.0)?;
    let witness = ball_test(&HessianQuadric::from_betas(&[0.3])?, DEFAULT_BALL_TOL)?.witness_slice_ratio;
    let w_err = (a / b - expected).abs().max((witness - expected).abs());
    let t = start.elapsed();
    Ok(Verdict::new(
        beta_err < 1e-6 && ball_wrong == 0 && w_err < 1e-9 && residual < 1e-12 && within(t, 30.0),
        format!(
            "max beta err {beta_err:.1e}, {ball_wrong} ball_test errors, witness err {w_err:.1e}, scaling residual {residual:.1e}"
        ),
    ))
}

fn determinism() -> pcx::Result<Verdict> {
    let cfg = SuiteConfig::default();
    let a = run_suite("all", 2024, &cfg)?;
    let b = run_suite("all", 2024, &cfg)?;
    let same = [Format::Json, Format::Csv, Format::Text].iter().all(|&f| emit(&a, f) == emit(&b, f));
    Ok(Verdict::new(same, format!("{} cases, {} failures, reports identical: {same}", a.cases_run, a.failures.len())))
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 12] = [
        ("poincare identity", poincare_identity),
        ("line restriction", line_restriction),
        ("metric axioms", metric_axioms),
        ("invariance", invariance),
        ("translation bound", translation),
        ("classification", classification),
        ("north-south dynamics", north_south),
        ("growth bound", growth),
        ("quasi-isometry defect", quasi_isometry),
        ("non-geodesicity", non_geodesicity),
        ("normal form", normal_form),
        ("determinism", determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let verdict = match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => Verdict::new(false, format!("error: {e}")),
            Err(_) => Verdict::new(false, "panicked".into()),
        };
        failed += !verdict.pass as usize;
        let status = if verdict.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {status} {name}: {} ({:.1}s)", verdict.detail, start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
