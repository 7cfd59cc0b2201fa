#![no_main]

use batchflow::trace::parse_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = parse_csv(text) {
            assert!(rows.windows(2).all(|w| w[0].tick <= w[1].tick));
        }
    }
});
