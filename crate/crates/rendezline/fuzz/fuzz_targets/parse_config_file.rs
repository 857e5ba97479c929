#![no_main]

use libfuzzer_sys::fuzz_target;
use rendezline::parse::parse_config_file;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(map) = parse_config_file(text) {
        for (key, value) in &map {
            assert!(!key.is_empty() && !value.is_empty());
        }
    }
});
