//! Replays the fuzz corpus through the same checks the fuzz targets make.

use std::fs;
use std::path::Path;

use batchflow::scenario::{build, parse_syntax};
use batchflow::trace::parse_csv;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.display().to_string(),
                fs::read_to_string(&path).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn config_seeds() {
    let mut built = 0;
    for (name, text) in seeds("parse_config") {
        let Ok(cfg) = parse_syntax(&text) else {
            continue;
        };
        assert_eq!(parse_syntax(&cfg.to_string()).unwrap(), cfg, "{name}");
        if let Ok(mut engine) = build(&cfg) {
            engine.run(cfg.run.max_ticks.min(200)).unwrap();
            built += 1;
        }
    }
    assert!(built >= 3);
}

#[test]
fn trace_seeds() {
    let mut parsed = 0;
    for (_, text) in seeds("parse_trace") {
        if let Ok(rows) = parse_csv(&text) {
            assert!(rows.windows(2).all(|w| w[0].tick <= w[1].tick));
            parsed += 1;
        }
    }
    assert!(parsed >= 2);
}
