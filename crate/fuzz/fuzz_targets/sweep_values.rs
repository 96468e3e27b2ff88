#![no_main]

use libfuzzer_sys::fuzz_target;
use skycache::sim::{parse_values, SweepParam};

// Parsed values print back to a list that parses to the same values.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (param, values) = text.split_once('=').unwrap_or(("cache", text));
    if let Ok(p) = param.parse::<SweepParam>() {
        assert_eq!(p.to_string().parse::<SweepParam>(), Ok(p));
    }
    let Ok(v) = parse_values(values) else { return };
    assert!(!v.is_empty());
    let joined = v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    assert_eq!(parse_values(&joined), Ok(v));
});
