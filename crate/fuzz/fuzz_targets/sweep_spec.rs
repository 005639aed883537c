//! `AXIS=v1,v2,...` strings from the command line.

#![no_main]

use libfuzzer_sys::fuzz_target;
use multirat::experiments::SweepSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = text.parse::<SweepSpec>() {
        assert!(!spec.values.is_empty());
        assert!(spec.values.iter().all(|v| v.is_finite() && *v >= 0.0));
    }
});
