#![no_main]

use libfuzzer_sys::fuzz_target;
use sil_core::potentials::{parse_polynomial, ScalarPotential};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(coeffs) = parse_polynomial(text) {
        assert!(coeffs.iter().all(|c| c.is_finite()));
        let _ = ScalarPotential::from_polynomial("fuzz", &coeffs);
    }
});
