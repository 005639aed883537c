#![no_main]

use libfuzzer_sys::fuzz_target;
use multirat::experiments::parse_scheme_list;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(list) = parse_scheme_list(text) {
        let joined: Vec<String> = list.iter().map(|s| s.to_string()).collect();
        assert_eq!(parse_scheme_list(&joined.join(",")).expect("round trip"), list);
    }
});
