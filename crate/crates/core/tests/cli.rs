use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use batchflow::cli::{self, RunArgs, SweepArgs, EXIT_INVARIANT, EXIT_OK, EXIT_USAGE};
use batchflow::scenario::{HEATING_CFG, HEATING_LITERAL_CFG};
use tempfile::TempDir;

fn write_cfg(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run_cmd(args: &RunArgs) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::cmd_run(args, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn sweep_cmd(args: &SweepArgs) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::cmd_sweep(args, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn validate_cmd(path: &Path) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::cmd_validate(path, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

/// Summary figures recomputed from nothing but the trace CSV text.
#[derive(Debug)]
struct Reduced {
    cycles: u64,
    heat: Vec<(u64, f64)>,
    cl_min: f64,
    cl_max: f64,
    delivered: f64,
    requests: u64,
}

fn reduce(csv: &str) -> Reduced {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tick,object,section,value"));
    let mut cols: HashMap<(String, String), Vec<(u64, f64)>> = HashMap::new();
    let mut last = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let t: u64 = f[0].parse().unwrap();
        last = last.max(t);
        cols.entry((f[1].to_string(), f[2].to_string()))
            .or_default()
            .push((t, f[3].parse().unwrap()));
    }
    let get = |o: &str, s: &str| {
        cols.get(&(o.to_string(), s.to_string()))
            .cloned()
            .unwrap_or_default()
    };
    let groups = |s: Vec<(u64, f64)>| {
        let mut g: Vec<(u64, u64, f64)> = Vec::new();
        for (t, v) in s {
            match g.last_mut() {
                Some(r) if r.1 + 1 == t => {
                    r.1 = t;
                    r.2 += v;
                }
                _ => g.push((t, t, v)),
            }
        }
        g
    };
    let tank: HashMap<u64, f64> = get("mTmprA1", "CL").into_iter().collect();
    let cycles = groups(get("mTmprA1", "PT"))
        .into_iter()
        .filter(|g| tank[&g.1] == 0.0)
        .count() as u64;
    let heat = groups(get("sSrcP1", "PP"))
        .into_iter()
        .filter(|g| g.1 < last)
        .map(|g| (g.1 - g.0 + 1, g.2))
        .collect();
    let cl: Vec<f64> = get("sSepA1", "CL").into_iter().map(|p| p.1).collect();
    Reduced {
        cycles,
        heat,
        cl_min: cl.iter().copied().fold(f64::INFINITY, f64::min),
        cl_max: cl.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        delivered: get("sink1", "CL").last().map_or(0.0, |p| p.1),
        requests: get("sSepA1", "UTP").len() as u64,
    }
}

fn summary_rows(text: &str) -> Vec<HashMap<String, String>> {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    assert_eq!(header.join(","), cli::SUMMARY_HEADER);
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key]
        .parse()
        .unwrap_or_else(|_| panic!("{key} = `{}`", row[key]))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

#[test]
fn run_summary_matches_trace() {
    let dir = TempDir::new().unwrap();
    let config = write_cfg(&dir, "heating.cfg", HEATING_CFG);
    let (trace, summary) = (dir.path().join("t.csv"), dir.path().join("s.csv"));
    let (code, out, err) = run_cmd(&RunArgs {
        config,
        ticks: Some(50_000),
        trace: Some(trace.clone()),
        summary: Some(summary.clone()),
        set: vec![],
    });
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("cycles completed"));

    let r = reduce(&fs::read_to_string(&trace).unwrap());
    let rows = summary_rows(&fs::read_to_string(&summary).unwrap());
    let row = &rows[0];
    assert_eq!(row["param_value"], "");
    assert_eq!(num(row, "cycles") as u64, r.cycles);
    assert!(r.cycles >= 1);
    let n = r.heat.len() as f64;
    let mean = r.heat.iter().map(|h| h.0 as f64).sum::<f64>() / n;
    assert!(close(num(row, "heat_ticks_mean"), mean));
    assert_eq!(
        num(row, "heat_ticks_min") as u64,
        r.heat.iter().map(|h| h.0).min().unwrap()
    );
    assert_eq!(
        num(row, "heat_ticks_max") as u64,
        r.heat.iter().map(|h| h.0).max().unwrap()
    );
    let energy = r.heat.iter().map(|h| h.1).sum::<f64>() / n;
    assert!(
        close(num(row, "energy_per_cycle"), energy),
        "{} vs {energy}",
        row["energy_per_cycle"]
    );
    assert!(close(num(row, "cl_min"), r.cl_min));
    assert!(close(num(row, "cl_max"), r.cl_max));
    assert!(close(num(row, "delivered"), r.delivered));
    assert_eq!(row["stop_reason"], "max_ticks");
    assert!(r.cl_min >= 0.0 && r.cl_max <= 2.0);
    assert!(out.contains(&format!("restock requests   {}", r.requests)));
}

#[test]
fn run_until_source_is_empty() {
    let dir = TempDir::new().unwrap();
    let config = write_cfg(&dir, "heating.cfg", &HEATING_CFG.replace("STP=1", "STP=0"));
    let summary = dir.path().join("s.csv");
    let (code, _, err) = run_cmd(&RunArgs {
        config,
        trace: Some(dir.path().join("t.csv")),
        summary: Some(summary.clone()),
        set: vec!["sSrcA1.STP=1".into()],
        ..RunArgs::default()
    });
    assert_eq!(code, EXIT_OK, "{err}");
    let rows = summary_rows(&fs::read_to_string(summary).unwrap());
    assert_eq!(rows[0]["cycles"], "30");
    assert_eq!(rows[0]["stop_reason"], "stop:sSrcA1");
}

#[test]
fn run_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let config = write_cfg(&dir, "heating.cfg", HEATING_CFG);
    let base = RunArgs {
        config: config.clone(),
        trace: Some(dir.path().join("t.csv")),
        ..RunArgs::default()
    };
    let (code, _, _) = run_cmd(&RunArgs {
        ticks: Some(0),
        ..base.clone()
    });
    assert_eq!(code, EXIT_USAGE);

    let (code, _, err) = run_cmd(&RunArgs {
        config: dir.path().join("missing.cfg"),
        ..base.clone()
    });
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("missing.cfg"));

    let empty = write_cfg(&dir, "empty.cfg", "");
    let (code, _, err) = run_cmd(&RunArgs {
        config: empty,
        ..base.clone()
    });
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("no [objects] section"));

    let broken = write_cfg(
        &dir,
        "broken.cfg",
        &HEATING_CFG.replace("mTmprA1.TMP  -> mCmpA1.IN2", "mTmprA1.TMP  -> mCmpA1.OUT"),
    );
    let (code, _, err) = run_cmd(&RunArgs {
        config: broken,
        ..base.clone()
    });
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("broken.cfg:33:"), "{err}");

    let (code, _, _) = run_cmd(&RunArgs {
        set: vec!["mTmprA1.TMP=3".into()],
        ..base.clone()
    });
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = run_cmd(&RunArgs {
        set: vec!["nonsense".into()],
        ..base
    });
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn sweep_energy_intensity() {
    let dir = TempDir::new().unwrap();
    let config = write_cfg(&dir, "heating.cfg", HEATING_CFG);
    let (code, out, err) = sweep_cmd(&SweepArgs {
        config,
        param: "mPassA7.NUM".into(),
        // Rows come out in value order regardless of the order given.
        values: vec![120.0, 60.0, 180.0, 90.0],
        ..SweepArgs::default()
    });
    assert_eq!(code, EXIT_OK, "{err}");
    let rows = summary_rows(&out);
    let values: Vec<f64> = rows.iter().map(|r| num(r, "param_value")).collect();
    assert_eq!(values, [60.0, 90.0, 120.0, 180.0]);
    let ticks: Vec<f64> = rows.iter().map(|r| num(r, "heat_ticks_mean")).collect();
    assert!(ticks.windows(2).all(|w| w[1] < w[0]), "{ticks:?}");
}

#[test]
fn sweep_threshold_requests_and_purity() {
    let dir = TempDir::new().unwrap();
    let config = write_cfg(&dir, "heating.cfg", HEATING_CFG);
    let traces = dir.path().join("points");
    let summary = dir.path().join("sweep.csv");
    let (code, _, err) = sweep_cmd(&SweepArgs {
        config: config.clone(),
        param: "sSepA1.LL".into(),
        values: vec![0.8, 1.2, 1.6],
        ticks: Some(50_000),
        summary: Some(summary.clone()),
        trace_dir: Some(traces.clone()),
    });
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(summary_rows(&fs::read_to_string(summary).unwrap()).len(), 3);

    let mut requests = Vec::new();
    for v in ["0.8", "1.2", "1.6"] {
        let point = fs::read(traces.join(format!("{v}.csv"))).unwrap();
        requests.push(reduce(std::str::from_utf8(&point).unwrap()).requests);

        // Same bytes as a standalone run with the override.
        let standalone = dir.path().join(format!("run-{v}.csv"));
        let (code, _, err) = run_cmd(&RunArgs {
            config: config.clone(),
            ticks: Some(50_000),
            trace: Some(standalone.clone()),
            summary: None,
            set: vec![format!("sSepA1.LL={v}")],
        });
        assert_eq!(code, EXIT_OK, "{err}");
        assert!(
            point == fs::read(standalone).unwrap(),
            "LL={v}: sweep point differs from run"
        );
    }
    assert!(requests.windows(2).all(|w| w[0] <= w[1]), "{requests:?}");
}

#[test]
fn sweep_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let config = write_cfg(&dir, "heating.cfg", HEATING_CFG);
    let base = SweepArgs {
        config,
        param: "mPassA7.NUM".into(),
        values: vec![60.0, 120.0],
        ticks: Some(100),
        ..SweepArgs::default()
    };
    assert_eq!(
        sweep_cmd(&SweepArgs {
            values: vec![60.0],
            ..base.clone()
        })
        .0,
        EXIT_USAGE
    );
    for param in [
        "mCmpA1.IN1",
        "mTmprA1.TMP",
        "sSepA1.RT",
        "nobody.NUM",
        "mPassA7",
    ] {
        let (code, _, err) = sweep_cmd(&SweepArgs {
            param: param.into(),
            ..base.clone()
        });
        assert_eq!(code, EXIT_USAGE, "{param}: {err}");
    }
    assert_eq!(sweep_cmd(&base).0, EXIT_OK);
}

#[test]
fn validate_shipped_configs() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [
        ("heating.cfg", HEATING_CFG),
        ("heating_literal.cfg", HEATING_LITERAL_CFG),
    ] {
        let (code, out, err) = validate_cmd(&write_cfg(&dir, name, text));
        assert_eq!(code, EXIT_OK, "{name}: {out}{err}");
        for check in ["conservation", "determinism", "cycle-structure"] {
            assert!(
                out.lines()
                    .any(|l| l.starts_with("PASS") && l.contains(check)),
                "{out}"
            );
        }
        assert!(!out.contains("FAIL"));
    }
}

#[test]
fn validate_counts_clipped_overflow() {
    let dir = TempDir::new().unwrap();
    let text = HEATING_CFG
        .replace("LL=1.2 HL=2", "LL=0.5 HL=0.8")
        .replace("MAG=0.5", "MAG=0.05");
    let (code, out, err) = validate_cmd(&write_cfg(&dir, "small.cfg", &text));
    assert!(
        out.lines()
            .any(|l| l.starts_with("PASS") && l.contains("conservation")),
        "{out}{err}"
    );
    assert!(
        out.lines()
            .any(|l| l.contains("overflow") && l.contains("clipped")),
        "{out}"
    );
    assert_eq!(code, EXIT_OK, "{out}");
}

#[test]
fn validate_reports_unstable_tank() {
    let dir = TempDir::new().unwrap();
    let text = HEATING_CFG.replace("ETA=0.01", "ETA=400");
    let (code, out, _) = validate_cmd(&write_cfg(&dir, "hot.cfg", &text));
    assert_eq!(code, EXIT_INVARIANT);
    assert!(out.starts_with("FAIL stability-guard"), "{out}");

    let (code, _, _) = validate_cmd(&write_cfg(&dir, "empty.cfg", ""));
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn binary_exit_codes_and_trace_digits() {
    let dir = TempDir::new().unwrap();
    let config = write_cfg(&dir, "heating.cfg", HEATING_CFG);
    let bin = env!("CARGO_BIN_EXE_batchflow");
    let trace = dir.path().join("t.csv");

    let status = Command::new(bin)
        .args([
            "run",
            config.to_str().unwrap(),
            "--ticks",
            "3000",
            "--trace",
        ])
        .arg(&trace)
        .env("BATCHFLOW_TRACE_DIGITS", "4")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    let text = fs::read_to_string(&trace).unwrap();
    let widest = text
        .lines()
        .skip(1)
        .map(|l| {
            l.rsplit(',')
                .next()
                .unwrap()
                .chars()
                .filter(char::is_ascii_digit)
                .count()
        })
        .max()
        .unwrap();
    assert!(widest <= 4, "{widest}");

    let status = Command::new(bin)
        .args(["run", config.to_str().unwrap(), "--ticks", "0"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_USAGE));
    let status = Command::new(bin)
        .args([
            "sweep",
            config.to_str().unwrap(),
            "--param",
            "mPassA7.NUM",
            "--values",
            "60",
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_USAGE));
    let status = Command::new(bin).args(["frobnicate"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_USAGE));
    let status = Command::new(bin)
        .args(["validate", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    let status = Command::new(bin)
        .args([
            "sweep",
            config.to_str().unwrap(),
            "--param",
            "mPassA7.NUM",
            "--values",
            "60,120",
            "--ticks",
            "200",
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8(status.stdout).unwrap().lines().count(), 3);
}
