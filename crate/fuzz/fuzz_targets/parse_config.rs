#![no_main]

use libfuzzer_sys::fuzz_target;
use sil_core::config::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = parse_config(text) {
        // The canonical form must parse back to the same configuration.
        let again = parse_config(&c.to_canonical()).expect("canonical form parses");
        assert_eq!(again, c);
    }
});
