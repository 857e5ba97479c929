#![no_main]

use libfuzzer_sys::fuzz_target;
use rendezline::parse::{parse_u32_values, MAX_VALUES};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(values) = parse_u32_values(text) {
        assert!(!values.is_empty());
        assert!(values.len() <= MAX_VALUES);
    }
});
