#![no_main]

use libfuzzer_sys::fuzz_target;
use sil_core::linode::parse_samples_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = parse_samples_csv(text) {
        assert!(s.dim >= 1 && s.z.len() >= 2);
        assert!(s.z.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.values.len(), s.z.len() * s.dim);
    }
});
