#![no_main]

use libfuzzer_sys::fuzz_target;
use pcx::io::{domain_to_json, parse_domain};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data)
        && let Ok(domain) = parse_domain(s)
    {
        let again = parse_domain(&domain_to_json(&domain)).expect("round trip");
        assert_eq!(again.dim(), domain.dim());
    }
});
