#![no_main]

use libfuzzer_sys::fuzz_target;
use rendezline::output::{parse_csv, rows_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_csv(text) {
        // Printing is a fixpoint: free-form numbers normalize once, after
        // which print -> parse -> print is byte-stable.
        let printed = rows_to_csv(&rows);
        let reparsed = parse_csv(&printed).expect("emitted CSV parses");
        assert_eq!(rows_to_csv(&reparsed), printed);
    }
});
