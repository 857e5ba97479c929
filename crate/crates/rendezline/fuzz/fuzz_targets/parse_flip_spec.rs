#![no_main]

use libfuzzer_sys::fuzz_target;
use rendezline::parse::{parse_flip_spec, parse_flips_args};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((robot, flips)) = parse_flip_spec(text) {
        assert!(robot >= 1);
        assert!(!flips.is_empty());
    }
    // The line-split form also exercises the duplicate-robot check.
    let specs: Vec<&str> = text.lines().collect();
    if let Ok(map) = parse_flips_args(&specs) {
        assert!(map.len() <= specs.len());
    }
});
