#![no_main]

use libfuzzer_sys::fuzz_target;
use pcx::suite::SuiteConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let mut cfg = SuiteConfig::default();
        if cfg.overlay_json(s).is_ok() {
            assert!(cfg.cases >= 1 && cfg.samples >= 64 && cfg.tol > 0.0);
        }
    }
});
