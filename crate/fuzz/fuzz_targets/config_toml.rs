//! TOML experiment configs: parsing and validation must never panic, and an
//! accepted config must survive a serialize/parse round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;
use multirat::experiments::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_toml_str(text) {
        cfg.points().expect("validated sweep points");
        let json = serde_json::to_string(&cfg).expect("serializable");
        assert_eq!(ExperimentConfig::from_json_str(&json).expect("round trip"), cfg);
    }
});
