#![no_main]

use batchflow::scenario::{build, parse_syntax};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = parse_syntax(text) else {
        return;
    };
    // Canonical text must parse back to the same config.
    let again = parse_syntax(&cfg.to_string()).expect("canonical form parses");
    assert_eq!(again, cfg);
    if let Ok(mut engine) = build(&cfg) {
        let _ = engine.run(cfg.run.max_ticks.min(200));
    }
});
