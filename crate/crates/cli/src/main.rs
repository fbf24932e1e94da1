use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use pcx::domain::{Domain, PlanarDomain, QuadricDomain};
use pcx::growth::{growth_constant, UnipotentUpper};
use pcx::io::{parse_chart_coords, parse_complex, parse_domain, parse_matrix};
use pcx::linalg::{cr, CMat};
use pcx::metric::{complex_hyperbolic_oracle, hilbert_distance, translation_bound_check};
use pcx::normal_form::{ball_test, diagonalize_quadric, HessianQuadric, DEFAULT_BALL_TOL};
use pcx::projective::{ProjectiveMap, ProjectivePoint};
use pcx::qgeo::{collar_map, bilipschitz_estimate, midpoint_defect, quasi_isometry_defect, PlanarMap};
use pcx::spectral::{classify, north_south_iterate, spectral_data};
use pcx::suite::{emit, run_suite, Format, SuiteConfig};
use pcx::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "pcx", version, about = "Hilbert metrics and projective dynamics on complex domains")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Numerical tolerance (spectral clustering, ball test).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Boundary samples for planar domains and slices.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config; its fields override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Hilbert (or Apollonian) distance between two points.
    Dist {
        #[arg(long)]
        domain: String,
        /// Chart coordinates, e.g. `0.1+0.2i,0`.
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
    },
    /// Closed-form complex hyperbolic distance in the unit ball.
    Oracle {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
    },
    /// Translation-length bound for an automorphism at a base point.
    BoundCheck {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        map: String,
        #[arg(long)]
        x: String,
    },
    /// Spectral label of a projective map.
    Classify {
        #[arg(long)]
        map: String,
    },
    /// Boundary trajectory of a bi-proximal automorphism.
    Dynamics {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        map: String,
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 40)]
        steps: usize,
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
    },
    /// Norm growth of a seeded product of unipotent upper-triangular matrices.
    Growth {
        /// Matrix size minus one.
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Bound on the off-diagonal entries.
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// Use the Jordan block instead of random factors.
        #[arg(long)]
        jordan: bool,
    },
    /// Quasi-isometry experiments on planar domains.
    Qgeo {
        #[command(subcommand)]
        which: QgeoCommand,
    },
    /// Quadric normal form and ball test.
    NormalForm {
        /// Betas of an already diagonal quadric, e.g. `0.3,0`.
        #[arg(long, conflicts_with = "quadric")]
        betas: Option<String>,
        /// Quadric domain JSON with `L` and `Q`.
        #[arg(long)]
        quadric: Option<String>,
    },
    /// Run a seeded property suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Subcommand)]
enum QgeoCommand {
    /// Defect of `z -> z + c z^2` on the unit disk.
    Defect {
        #[arg(long, default_value = "0.1")]
        c: String,
        #[arg(long, default_value_t = 50)]
        pairs: usize,
    },
    /// Midpoint defect of a planar domain.
    Midpoint {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
    /// Bi-Lipschitz constant of the radial collar map between two domains.
    Collar {
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
        #[arg(long, default_value = "0")]
        center: String,
    },
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::ConfigInvalid { .. } | Error::UnknownSuite(_) => Failure::Usage(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

type Outcome = Result<(Vec<u8>, bool), Failure>;

struct Settings {
    seed: u64,
    tol: Option<f64>,
    samples: usize,
    format: OutFormat,
    suite: SuiteConfig,
}

fn read_source(arg: &str) -> Result<String, Failure> {
    if arg == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| Failure::Usage(format!("stdin: {e}")))?;
        return Ok(s);
    }
    if arg.trim_start().starts_with(['{', '[']) {
        return Ok(arg.to_string());
    }
    fs::read_to_string(arg).map_err(|e| Failure::Usage(format!("{arg}: {e}")))
}

fn numbers(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("cannot parse `{t}`"))))
        .collect()
}

fn load_domain(arg: &str, samples: usize) -> Result<Domain, Failure> {
    let (head, rest) = arg.split_once(':').unwrap_or((arg, ""));
    let dom = match head {
        "disk" => Domain::Planar(PlanarDomain::unit_disk(samples)),
        "ellipse" => {
            let v = numbers(rest)?;
            if v.len() != 2 {
                return Err(Failure::Usage("ellipse:A,B".into()));
            }
            Domain::Planar(PlanarDomain::ellipse(v[0], v[1], samples)?)
        }
        "ball" => Domain::ball(rest.parse().map_err(|_| Failure::Usage("ball:DIM".into()))?),
        "siegel" => Domain::Quadric(QuadricDomain::siegel(rest.parse().map_err(|_| Failure::Usage("siegel:DIM".into()))?)),
        _ => parse_domain(&read_source(arg)?)?,
    };
    Ok(dom)
}

fn load_map(arg: &str) -> Result<ProjectiveMap, Failure> {
    if let Some(rest) = arg.strip_prefix("diag:") {
        let d: Vec<Complex64> = parse_chart_coords(rest)?;
        return Ok(ProjectiveMap::from_diagonal(&d)?);
    }
    Ok(parse_matrix(&read_source(arg)?)?.to_map()?)
}

fn point_in(domain: &Domain, arg: &str) -> Result<ProjectivePoint, Failure> {
    let z = parse_chart_coords(arg)?;
    if z.len() != domain.dim() {
        return Err(Failure::Usage(format!("expected {} chart coordinates, got {}", domain.dim(), z.len())));
    }
    Ok(match domain {
        Domain::Planar(_) => pcx::domain::planar_point(z[0]),
        _ => ProjectivePoint::from_chart(&z),
    })
}

fn complex_arg(s: &str) -> Result<Complex64, Failure> {
    parse_complex(s).ok_or_else(|| Failure::Usage(format!("cannot parse complex number `{s}`")))
}

fn json_out(v: Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&v).expect("json value");
    out.push(b'\n');
    out
}

fn text_or_json(fmt: OutFormat, v: Value) -> Vec<u8> {
    match fmt {
        OutFormat::Text => {
            let mut s = String::new();
            if let Value::Object(map) = &v {
                for (k, x) in map {
                    s.push_str(&format!("{k}: {x}\n"));
                }
            }
            s.into_bytes()
        }
        _ => json_out(v),
    }
}

fn csv_out(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn run(cmd: Command, s: &Settings) -> Outcome {
    match cmd {
        Command::Dist { domain, p, q } => {
            let dom = load_domain(&domain, s.samples)?;
            let r = hilbert_distance(&dom, &point_in(&dom, &p)?, &point_in(&dom, &q)?)?;
            let v = json!({"value": r.value, "maximizers": r.maximizers, "error": r.refinement_error});
            Ok((text_or_json(s.format, v), true))
        }
        Command::Oracle { p, q } => {
            let (p, q) = (parse_chart_coords(&p)?, parse_chart_coords(&q)?);
            let d = complex_hyperbolic_oracle(&ProjectivePoint::from_chart(&p), &ProjectivePoint::from_chart(&q))?;
            Ok((text_or_json(s.format, json!({"value": d, "maximizers": null, "error": 0.0})), true))
        }
        Command::BoundCheck { domain, map, x } => {
            let dom = load_domain(&domain, s.samples)?;
            let b = translation_bound_check(&dom, &load_map(&map)?, &point_in(&dom, &x)?)?;
            let holds = b.holds;
            let v = json!({"value": b.lhs, "bound": b.rhs, "r_hat": b.r_hat, "log_norm_product": b.log_norm_product, "holds": holds});
            Ok((text_or_json(s.format, v), holds))
        }
        Command::Classify { map } => {
            let phi = load_map(&map)?;
            let tol = s.tol.unwrap_or(pcx::spectral::DEFAULT_TOL);
            let label = classify(&phi, tol);
            let sd = spectral_data(&phi, tol).ok();
            let v = json!({
                "label": label.to_string(),
                "sigmas": sd.as_ref().map(|d| d.sigmas.clone()),
                "m_plus": sd.as_ref().map(|d| d.m_plus),
                "jordan_blocks": sd.as_ref().map(|d| d.jordan_blocks.clone()),
            });
            Ok((text_or_json(s.format, v), true))
        }
        Command::Dynamics { domain, map, x, steps, delta } => {
            let dom = load_domain(&domain, s.samples)?;
            let x = point_in(&dom, &x)?;
            let tol = s.tol.unwrap_or(pcx::spectral::DEFAULT_TOL);
            let t = north_south_iterate(&dom, &load_map(&map)?, &x, steps, delta, tol)?;
            let out = match s.format {
                OutFormat::Csv => csv_out(
                    &["k", "distance", "predicted"],
                    t.distances.iter().enumerate().map(|(k, d)| {
                        let pred = t.fitted_constant.map(|c| c * t.expected_rate.powi(k as i32));
                        vec![k.to_string(), format!("{d:e}"), pred.map(|p| format!("{p:e}")).unwrap_or_default()]
                    }),
                ),
                fmt => text_or_json(
                    fmt,
                    json!({
                        "expected_rate": t.expected_rate,
                        "fitted_rate": t.fitted_rate,
                        "fitted_constant": t.fitted_constant,
                        "contacts_plus": t.contacts_plus,
                        "contacts_minus": t.contacts_minus,
                        "distances": t.distances,
                    }),
                ),
            };
            Ok((out, true))
        }
        Command::Growth { d, n, r, jordan } => {
            if d == 0 || n == 0 {
                return Err(Failure::Usage("d and n must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            let factors: Vec<UnipotentUpper> = (0..n)
                .map(|_| if jordan { UnipotentUpper::jordan(d + 1) } else { UnipotentUpper::random(d + 1, r, &mut rng) })
                .collect();
            let bound = factors.iter().map(|u| u.entry_bound()).fold(1.0, f64::max);
            let constant = growth_constant(bound, d as u64);
            let mut prod = CMat::identity(d + 1, d + 1);
            let mut rows = Vec::with_capacity(n);
            let mut holds = true;
            for (k, u) in factors.iter().enumerate() {
                prod = &prod * u.matrix();
                let lhs = pcx::growth::entrywise_sup_norm(&prod);
                let rhs = constant * ((k + 1) as f64).powi(d as i32);
                holds &= lhs <= rhs;
                rows.push(((k + 1), lhs, rhs));
            }
            let out = match s.format {
                OutFormat::Csv => csv_out(
                    &["N", "lhs", "rhs"],
                    rows.iter().map(|(k, l, r)| vec![k.to_string(), format!("{l:e}"), format!("{r:e}")]),
                ),
                fmt => text_or_json(
                    fmt,
                    json!({"constant": constant, "holds": holds, "rows": rows.iter().map(|(k, l, r)| json!([k, l, r])).collect::<Vec<_>>()}),
                ),
            };
            Ok((out, holds))
        }
        Command::Qgeo { which } => run_qgeo(which, s),
        Command::NormalForm { betas, quadric } => {
            let tol = s.tol.unwrap_or(DEFAULT_BALL_TOL);
            let h = match (betas, quadric) {
                (Some(b), _) => HessianQuadric::from_betas(&numbers(&b)?)?,
                (None, Some(q)) => match load_domain(&q, s.samples)? {
                    Domain::Quadric(qd) => {
                        let mut h = HessianQuadric::new(qd.l_matrix().clone(), qd.q_matrix().clone())?;
                        h.betas = Some(diagonalize_quadric(&h)?.betas);
                        h
                    }
                    _ => return Err(Failure::Usage("expected a quadric domain".into())),
                },
                (None, None) => return Err(Failure::Usage("pass --betas or --quadric".into())),
            };
            let t = ball_test(&h, tol)?;
            let v = json!({
                "betas": t.betas,
                "is_ball": t.is_ball,
                "witness_slice_ratio": t.witness_slice_ratio,
                "sampled_slice_ratio": t.sampled_slice_ratio,
            });
            Ok((text_or_json(s.format, v), true))
        }
        Command::Verify { suite } => {
            let report = run_suite(&suite, s.seed, &s.suite)?;
            eprintln!("{} cases in {:.2?}", report.cases_run, report.wall_time);
            let fmt = match s.format {
                OutFormat::Json => Format::Json,
                OutFormat::Csv => Format::Csv,
                OutFormat::Text => Format::Text,
            };
            Ok((emit(&report, fmt), report.passed()))
        }
    }
}

fn run_qgeo(which: QgeoCommand, s: &Settings) -> Outcome {
    match which {
        QgeoCommand::Defect { c, pairs } => {
            let c = complex_arg(&c)?;
            let disk = PlanarDomain::unit_disk(s.samples);
            let image = disk.map_holomorphic(move |z| z + c * z * z, move |z| cr(1.0) + c * z * 2.0)?;
            let f = PlanarMap::on_domain(move |z| z + c * z * z, &disk, 4 * pairs, s.seed);
            let r = quasi_isometry_defect(&f, &disk, &image, pairs, s.seed)?;
            Ok((text_or_json(s.format, serde_json::to_value(r).expect("report")), r.holds))
        }
        QgeoCommand::Midpoint { domain, x, y, grid } => {
            let dom = match load_domain(&domain, s.samples)? {
                Domain::Planar(p) => p,
                _ => return Err(Failure::Usage("midpoint needs a planar domain".into())),
            };
            let r = midpoint_defect(&dom, complex_arg(&x)?, complex_arg(&y)?, grid)?;
            Ok((text_or_json(s.format, serde_json::to_value(r).expect("report")), true))
        }
        QgeoCommand::Collar { source, target, center } => {
            let planar = |arg: &str| -> Result<PlanarDomain, Failure> {
                match load_domain(arg, s.samples)? {
                    Domain::Planar(p) => Ok(p),
                    _ => Err(Failure::Usage("collar needs planar domains".into())),
                }
            };
            let (src, tgt) = (planar(&source)?, planar(&target)?);
            let f = collar_map(&src, &tgt, complex_arg(&center)?)?;
            let k = bilipschitz_estimate(&f, 2000, s.seed);
            let v = json!({"k": k.k, "k_forward": k.k_fwd, "k_backward": k.k_bwd, "defect_bound": 4.0 * k.k.ln()});
            Ok((text_or_json(s.format, v), true))
        }
    }
}

fn settings(g: &Global) -> Result<Settings, Failure> {
    let mut suite = SuiteConfig::default();
    let mut seed = g.seed;
    let mut format = g.format;
    if let Some(t) = g.tol {
        suite.overlay(&json!({"tol": t}))?;
    }
    if let Some(n) = g.samples {
        suite.overlay(&json!({"samples": n}))?;
    }
    let mut tol = g.tol;
    if let Some(path) = &g.config {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config: {e}")))?;
        suite.overlay(&v)?;
        if let Some(x) = v.get("seed") {
            seed = x.as_u64().ok_or_else(|| Failure::Usage("config field `seed`: expected an integer".into()))?;
        }
        if let Some(x) = v.get("tol") {
            tol = x.as_f64();
        }
        if let Some(x) = v.get("format") {
            format = match x.as_str() {
                Some("json") => OutFormat::Json,
                Some("csv") => OutFormat::Csv,
                Some("text") => OutFormat::Text,
                _ => return Err(Failure::Usage("config field `format`: expected json, csv or text".into())),
            };
        }
    }
    Ok(Settings { seed, tol, samples: suite.samples, format, suite })
}

fn init_pool() {
    if let Some(n) = std::env::var("PCX_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    init_pool();
    let result = settings(&cli.global).and_then(|s| {
        let out = cli.global.out.clone();
        run(cli.command, &s).map(|r| (r, out))
    });
    match result {
        Ok(((bytes, ok), out)) => {
            let written = match out {
                Some(path) => fs::write(&path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
                None => io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
