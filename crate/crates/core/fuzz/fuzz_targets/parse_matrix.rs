#![no_main]

use libfuzzer_sys::fuzz_target;
use pcx::io::parse_matrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data)
        && let Ok(input) = parse_matrix(s)
    {
        // Singular input must surface as an error, never a panic.
        if let Ok(map) = input.to_map() {
            let _ = pcx::spectral::classify(&map, input.tol.unwrap_or(1e-8));
        }
    }
});
