#![no_main]

use libfuzzer_sys::fuzz_target;
use skycache::cesn::{decode_model, encode_model};

// Decoding never panics, and a decoded model survives re-encoding: plain
// matrices exactly, conceptors (stored as eigenpairs) to rounding.
fuzz_target!(|data: &[u8]| {
    let Ok(model) = decode_model(data) else { return };
    let again = decode_model(&encode_model(&model)).expect("re-encoded model decodes");
    assert_eq!(again.w_in, model.w_in);
    assert_eq!(again.w, model.w);
    assert_eq!(again.bias, model.bias);
    assert_eq!(again.d, model.d);
    assert_eq!(again.w_out, model.w_out);
    assert_eq!(again.conceptors.len(), model.conceptors.len());
    for (a, b) in again.conceptors.iter().zip(&model.conceptors) {
        assert!((&a.m - &b.m).max_abs() <= 1e-9);
    }
});
