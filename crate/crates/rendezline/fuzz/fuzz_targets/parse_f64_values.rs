#![no_main]

use libfuzzer_sys::fuzz_target;
use rendezline::parse::{parse_f64_values, MAX_VALUES};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(values) = parse_f64_values(text) {
        assert!(!values.is_empty());
        assert!(values.len() <= MAX_VALUES);
        // Finite inputs and bounded ranges can only expand to finite grids.
        assert!(values.iter().all(|v| v.is_finite()));
    }
});
