use std::fs;
use std::path::Path;

use pcx::domain::{Domain, PlanarDomain};
use pcx::io::{domain_to_json, parse_chart_coords, parse_complex, parse_domain, parse_matrix, parse_point};
use pcx::suite::SuiteConfig;
use pcx::Error;
use proptest::prelude::*;

fn corpus(target: &str) -> Vec<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut files: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.iter().map(|p| fs::read_to_string(p).unwrap()).collect()
}

#[test]
fn corpus_seeds_decode() {
    for s in corpus("parse_domain") {
        let d = parse_domain(&s).unwrap_or_else(|e| panic!("{s}: {e}"));
        assert_eq!(parse_domain(&domain_to_json(&d)).unwrap().dim(), d.dim());
    }
    for s in corpus("parse_matrix") {
        parse_matrix(&s).unwrap().to_map().unwrap();
    }
    for s in corpus("parse_point") {
        assert!(parse_point(&s).is_ok() || parse_chart_coords(&s).is_ok(), "{s}");
    }
    for s in corpus("parse_config") {
        SuiteConfig::default().overlay_json(&s).unwrap();
    }
}

#[test]
fn errors_carry_locations() {
    let e = parse_domain(r#"{"type":"ball"}"#).unwrap_err();
    assert!(matches!(e, Error::Parse { ref location, .. } if location == "dim"), "{e}");
    let e = parse_matrix(r#"{"matrix":[[1,2],[3]]}"#).unwrap_err();
    assert!(matches!(e, Error::Parse { ref location, .. } if location == "matrix[1]"), "{e}");
    let e = parse_domain("{\n  \"type\": ").unwrap_err();
    assert!(matches!(e, Error::Parse { ref location, .. } if location.starts_with("line 2")), "{e}");
    let e = parse_point(r#"[[1,0],[0,"x"]]"#).unwrap_err();
    assert!(matches!(e, Error::Parse { ref location, .. } if location == "point[1][1]"), "{e}");
}

#[test]
fn planar_round_trip_preserves_samples() {
    let disk = Domain::Planar(PlanarDomain::unit_disk(32));
    let back = parse_domain(&domain_to_json(&disk)).unwrap();
    match (disk, back) {
        (Domain::Planar(a), Domain::Planar(b)) => {
            for (x, y) in a.points().iter().zip(b.points()) {
                assert!((x - y).norm() < 1e-15);
            }
        }
        _ => unreachable!(),
    }
}

#[test]
fn complex_literals() {
    let z = parse_complex("1.5-2e-3i").unwrap();
    assert_eq!((z.re, z.im), (1.5, -2e-3));
    assert_eq!(parse_complex("-i").unwrap().im, -1.0);
    assert_eq!(parse_complex("1e+2").unwrap().re, 100.0);
    assert!(parse_complex("nan").is_none());
    assert!(parse_complex("1+").is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn decoders_never_panic(s in ".{0,200}") {
        let _ = parse_domain(&s);
        let _ = parse_matrix(&s);
        let _ = parse_point(&s);
        let _ = parse_chart_coords(&s);
        let _ = SuiteConfig::default().overlay_json(&s);
    }

    #[test]
    fn jsonish_input_never_panics(s in r#"\{"(type|matrix|dim|L|Q|boundary|tol|cases)":[\[\]0-9.,e\-" a-z{}]{0,60}\}"#) {
        let _ = parse_domain(&s);
        if let Ok(m) = parse_matrix(&s) {
            let _ = m.to_map();
        }
        let _ = SuiteConfig::default().overlay_json(&s);
    }

    #[test]
    fn complex_display_round_trip(re in -1e6f64..1e6, im in -1e6f64..1e6) {
        let text = format!("{re:e}{im:+e}i");
        let z = parse_complex(&text).unwrap();
        prop_assert_eq!((z.re, z.im), (re, im));
    }

    #[test]
    fn parsed_points_are_normalized(coords in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..6)) {
        let text = serde_json::to_string(&coords.iter().map(|(a, b)| [*a, *b]).collect::<Vec<_>>()).unwrap();
        match parse_point(&text) {
            Ok(p) => prop_assert!((p.coords().norm() - 1.0).abs() < 1e-12),
            Err(e) => prop_assert!(coords.iter().all(|(a, b)| *a == 0.0 && *b == 0.0), "{}", e),
        }
    }
}
