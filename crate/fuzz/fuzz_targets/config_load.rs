#![no_main]

use libfuzzer_sys::fuzz_target;
use skycache::scenario::{load_config, validate};

// Any accepted config is valid and survives a serialize/parse round trip.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = load_config(text) else { return };
    assert!(validate(&cfg).is_empty());
    let again = load_config(&cfg.to_json()).expect("round trip parses");
    assert_eq!(again.to_json(), cfg.to_json());
});
