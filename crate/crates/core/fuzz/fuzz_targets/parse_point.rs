#![no_main]

use libfuzzer_sys::fuzz_target;
use pcx::io::{parse_chart_coords, parse_point};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_point(s) {
        let n = p.coords().norm();
        assert!((n - 1.0).abs() < 1e-9, "unnormalized point {n}");
    }
    if let Ok(z) = parse_chart_coords(s) {
        assert!(z.iter().all(|w| w.re.is_finite() && w.im.is_finite()));
    }
});
