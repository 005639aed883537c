#![no_main]

use libfuzzer_sys::fuzz_target;
use multirat::experiments::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_json_str(text) {
        cfg.points().expect("validated sweep points");
    }
});
