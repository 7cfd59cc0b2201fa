//! `run`, `sweep` and `validate` operations behind the binary. Each returns
//! a process exit code and writes human-readable output to the given sinks.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::kernel::{Engine, EngineError, ObjectId, StopReason};
use crate::scenario::{
    build, override_initial, override_setting, parse_config, ConfigError, ErrorClass, Roles,
    ScenarioConfig,
};
use crate::trace::{self, DEFAULT_DIGITS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub const SUMMARY_HEADER: &str =
    "param_value,cycles,heat_ticks_mean,heat_ticks_min,heat_ticks_max,\
energy_per_cycle,cl_min,cl_max,delivered,stop_reason";

pub const DIGITS_ENV: &str = "BATCHFLOW_TRACE_DIGITS";

/// Trace precision: `BATCHFLOW_TRACE_DIGITS` if it holds an integer in
/// 1..=17, else 12.
pub fn trace_digits() -> usize {
    std::env::var(DIGITS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|d| (1..=17).contains(d))
        .unwrap_or(DEFAULT_DIGITS)
}

// ---------------------------------------------------------------------------
// Trace reduction

/// Maximal stretch of consecutive ticks carrying a record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Run {
    pub start: u64,
    pub end: u64,
    pub sum: f64,
}

impl Run {
    pub fn ticks(&self) -> u64 {
        self.end - self.start + 1
    }
}

pub fn runs(series: &[(u64, f64)]) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    for &(t, v) in series {
        match out.last_mut() {
            Some(r) if t == r.end + 1 => {
                r.end = t;
                r.sum += v;
            }
            Some(r) if t == r.end => r.sum += v,
            _ => out.push(Run {
                start: t,
                end: t,
                sum: v,
            }),
        }
    }
    out
}

type BySection<'e> = HashMap<&'e str, Vec<(u64, f64)>>;

/// Trace records grouped by object and section.
pub struct Series<'e> {
    map: HashMap<ObjectId, BySection<'e>>,
    /// Last serviced tick.
    pub last_tick: Option<u64>,
}

impl<'e> Series<'e> {
    pub fn of(engine: &'e Engine) -> Self {
        let mut map: HashMap<ObjectId, BySection<'e>> = HashMap::new();
        for r in engine.trace() {
            map.entry(r.object)
                .or_default()
                .entry(&r.section)
                .or_default()
                .push((r.tick, r.value));
        }
        Series {
            map,
            last_tick: engine.tick().checked_sub(1),
        }
    }

    pub fn get(&self, object: Option<ObjectId>, section: &str) -> &[(u64, f64)] {
        object
            .and_then(|o| self.map.get(&o))
            .and_then(|m| m.get(section))
            .map_or(&[], |v| v.as_slice())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub param_value: Option<f64>,
    pub cycles: u64,
    pub heat_ticks_mean: Option<f64>,
    pub heat_ticks_min: Option<u64>,
    pub heat_ticks_max: Option<u64>,
    pub energy_per_cycle: Option<f64>,
    pub cl_min: Option<f64>,
    pub cl_max: Option<f64>,
    pub delivered: f64,
    pub stop_reason: String,
    /// Restock requests issued by the buffer. Not part of the CSV row.
    pub requests: u64,
}

pub fn stop_label(engine: &Engine, reason: Option<&StopReason>) -> String {
    match reason {
        None | Some(StopReason::MaxTicks) => "max_ticks".to_string(),
        Some(StopReason::Requested(id)) => format!("stop:{}", engine.object_name(*id)),
        Some(StopReason::Aborted) => "aborted".to_string(),
    }
}

/// Reduces an engine's trace to a summary.
///
/// * a cycle is a heater `PT` run whose last tick leaves the heater empty;
/// * a heating duration is the length of an energy `PP` run that ended
///   before the last serviced tick, and its energy is the run's sum;
/// * `cl_*` range over the buffer `CL`, `delivered` is the final sink `CL`.
pub fn summarize(engine: &Engine, stop: Option<&StopReason>) -> RunSummary {
    let roles = Roles::detect(engine);
    let s = Series::of(engine);

    let heater_cl: HashMap<u64, f64> = s.get(roles.heater, "CL").iter().copied().collect();
    let cycles = runs(s.get(roles.heater, "PT"))
        .iter()
        .filter(|r| heater_cl.get(&r.end) == Some(&0.0))
        .count() as u64;

    let heat: Vec<Run> = runs(s.get(roles.energy, "PP"))
        .into_iter()
        .filter(|r| s.last_tick.is_some_and(|last| r.end < last))
        .collect();
    let n = heat.len() as f64;
    let (heat_ticks_mean, energy_per_cycle) = if heat.is_empty() {
        (None, None)
    } else {
        (
            Some(heat.iter().map(|r| r.ticks() as f64).sum::<f64>() / n),
            Some(heat.iter().map(|r| r.sum).sum::<f64>() / n),
        )
    };

    let cl = s.get(roles.buffer, "CL");
    let fold = |f: fn(f64, f64) -> f64| cl.iter().map(|p| p.1).reduce(f);

    RunSummary {
        param_value: None,
        cycles,
        heat_ticks_mean,
        heat_ticks_min: heat.iter().map(Run::ticks).min(),
        heat_ticks_max: heat.iter().map(Run::ticks).max(),
        energy_per_cycle,
        cl_min: fold(f64::min),
        cl_max: fold(f64::max),
        delivered: s.get(roles.sink, "CL").last().map_or(0.0, |p| p.1),
        stop_reason: stop_label(engine, stop),
        requests: s.get(roles.buffer, "UTP").len() as u64,
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

impl RunSummary {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            opt(self.param_value),
            self.cycles,
            opt(self.heat_ticks_mean),
            opt(self.heat_ticks_min),
            opt(self.heat_ticks_max),
            opt(self.energy_per_cycle),
            opt(self.cl_min),
            opt(self.cl_max),
            self.delivered,
            self.stop_reason
        )
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dash = |v: String| if v.is_empty() { "-".to_string() } else { v };
        writeln!(f, "cycles completed   {}", self.cycles)?;
        writeln!(
            f,
            "heating ticks      mean {} min {} max {}",
            dash(opt(self.heat_ticks_mean.map(|m| format!("{m:.1}")))),
            dash(opt(self.heat_ticks_min)),
            dash(opt(self.heat_ticks_max))
        )?;
        writeln!(f, "energy per cycle   {}", dash(opt(self.energy_per_cycle)))?;
        writeln!(
            f,
            "buffer level       min {} max {}",
            dash(opt(self.cl_min)),
            dash(opt(self.cl_max))
        )?;
        writeln!(f, "restock requests   {}", self.requests)?;
        writeln!(f, "delivered          {}", self.delivered)?;
        write!(f, "stop               {}", self.stop_reason)
    }
}

pub fn write_summary_csv<W: Write>(rows: &[RunSummary], mut out: W) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_row())?;
    }
    out.flush()
}

// ---------------------------------------------------------------------------
// Shared plumbing

fn load(path: &Path) -> Result<ScenarioConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| located(path, &e))
}

fn located(path: &Path, e: &ConfigError) -> String {
    match e.line {
        Some(l) => format!("{}:{l}: {}", path.display(), e.message),
        None => format!("{}: {}", path.display(), e.message),
    }
}

/// Parses `object.SECTION=value`.
pub fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (target, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected object.SECTION=value, got `{s}`"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("`{s}`: bad number"))?;
    Ok((target.trim().to_string(), value))
}

/// Builds and runs `cfg` for `ticks` ticks.
pub fn execute(
    cfg: &ScenarioConfig,
    ticks: u64,
) -> Result<(Engine, Result<StopReason, EngineError>), ConfigError> {
    let mut engine = build(cfg)?;
    let result = engine.run(ticks);
    Ok((engine, result))
}

fn write_trace_file(engine: &Engine, path: &Path) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = io::BufWriter::new(fs::File::create(path)?);
    trace::write_csv(engine, file, trace_digits())
}

fn write_summary_file(rows: &[RunSummary], path: &Path) -> io::Result<()> {
    let file = io::BufWriter::new(fs::File::create(path)?);
    write_summary_csv(rows, file)
}

// ---------------------------------------------------------------------------
// run

#[derive(Clone, Debug, Default)]
pub struct RunArgs {
    pub config: PathBuf,
    pub ticks: Option<u64>,
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// `object.SECTION=value` overrides of SETTING or LEVEL initial values.
    pub set: Vec<String>,
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut cfg = match load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    for s in &args.set {
        let applied = parse_assignment(s)
            .and_then(|(t, v)| override_initial(&mut cfg, &t, v).map_err(|e| e.to_string()));
        if let Err(e) = applied {
            let _ = writeln!(err, "error: --set {e}");
            return EXIT_USAGE;
        }
    }
    let ticks = args.ticks.unwrap_or(cfg.run.max_ticks);
    if ticks == 0 {
        let _ = writeln!(err, "error: --ticks must be at least 1");
        return EXIT_USAGE;
    }
    let (engine, result) = match execute(&cfg, ticks) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {}", located(&args.config, &e));
            return EXIT_USAGE;
        }
    };

    let mut code = EXIT_OK;
    let stop = match &result {
        Ok(reason) => Some(reason.clone()),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            code = EXIT_NUMERIC;
            Some(StopReason::Aborted)
        }
    };

    let trace_path = args
        .trace
        .clone()
        .or_else(|| cfg.run.trace.as_ref().map(PathBuf::from));
    if let Some(path) = &trace_path {
        if let Err(e) = write_trace_file(&engine, path) {
            let _ = writeln!(err, "error: writing {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    let summary = summarize(&engine, stop.as_ref());
    if let Some(path) = &args.summary {
        if let Err(e) = write_summary_file(std::slice::from_ref(&summary), path) {
            let _ = writeln!(err, "error: writing {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    let _ = writeln!(out, "ticks              {}", engine.tick());
    let _ = writeln!(out, "{summary}");
    if let Some(path) = &trace_path {
        let _ = writeln!(out, "trace              {}", path.display());
    }
    code
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Clone, Debug, Default)]
pub struct SweepArgs {
    pub config: PathBuf,
    pub param: String,
    pub values: Vec<f64>,
    pub ticks: Option<u64>,
    pub summary: Option<PathBuf>,
    /// Directory for one trace per point, named `<value>.csv`.
    pub trace_dir: Option<PathBuf>,
}

/// Runs one sweep point. The config is the base config with a single
/// SETTING override; nothing else differs between points.
pub fn sweep_point(
    base: &ScenarioConfig,
    param: &str,
    value: f64,
    ticks: u64,
) -> Result<(Engine, RunSummary, Option<EngineError>), ConfigError> {
    let mut cfg = base.clone();
    override_setting(&mut cfg, param, value)?;
    let (engine, result) = execute(&cfg, ticks)?;
    let (stop, failure) = match result {
        Ok(r) => (r, None),
        Err(e) => (StopReason::Aborted, Some(e)),
    };
    let mut summary = summarize(&engine, Some(&stop));
    summary.param_value = Some(value);
    Ok((engine, summary, failure))
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let base = match load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    if args.values.len() < 2 {
        let _ = writeln!(err, "error: a sweep needs at least two values");
        return EXIT_USAGE;
    }
    if let Some(v) = args.values.iter().find(|v| !v.is_finite()) {
        let _ = writeln!(err, "error: sweep value {v} is not finite");
        return EXIT_USAGE;
    }
    // Reject a bad target before spending time on any point.
    if let Err(e) = override_setting(&mut base.clone(), &args.param, args.values[0]) {
        let _ = writeln!(err, "error: --param {e}");
        return EXIT_USAGE;
    }
    let ticks = args.ticks.unwrap_or(base.run.max_ticks);
    if ticks == 0 {
        let _ = writeln!(err, "error: --ticks must be at least 1");
        return EXIT_USAGE;
    }
    let mut values = args.values.clone();
    values.sort_by(f64::total_cmp);

    let digits = trace_digits();
    let results: Vec<_> = values
        .par_iter()
        .map(|&v| {
            sweep_point(&base, &args.param, v, ticks).map(|(engine, summary, failure)| {
                let csv = args
                    .trace_dir
                    .as_ref()
                    .map(|_| trace::to_csv_string(&engine, digits));
                (summary, failure, csv)
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(results.len());
    let mut code = EXIT_OK;
    for (value, r) in values.iter().zip(results) {
        match r {
            Ok((summary, failure, csv)) => {
                if let Some(e) = failure {
                    let _ = writeln!(err, "error: {} = {value}: {e}", args.param);
                    code = EXIT_NUMERIC;
                }
                if let (Some(dir), Some(csv)) = (&args.trace_dir, csv) {
                    let path = dir.join(format!("{value}.csv"));
                    let written = fs::create_dir_all(dir).and_then(|_| fs::write(&path, csv));
                    if let Err(e) = written {
                        let _ = writeln!(err, "error: writing {}: {e}", path.display());
                        return EXIT_USAGE;
                    }
                }
                rows.push(summary);
            }
            Err(e) => {
                let _ = writeln!(err, "error: {} = {value}: {e}", args.param);
                return EXIT_USAGE;
            }
        }
    }

    let written = match &args.summary {
        Some(path) => write_summary_file(&rows, path),
        None => write_summary_csv(&rows, &mut *out),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: writing summary: {e}");
        return EXIT_USAGE;
    }
    code
}

// ---------------------------------------------------------------------------
// validate

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<20} {}", self.name, self.detail)
    }
}

fn check(name: &'static str, failures: Vec<String>, ok: impl Into<String>) -> Check {
    match failures.first() {
        None => Check {
            name,
            pass: true,
            detail: ok.into(),
        },
        Some(first) => Check {
            name,
            pass: false,
            detail: if failures.len() > 1 {
                format!("{first} (+{} more)", failures.len() - 1)
            } else {
                first.clone()
            },
        },
    }
}

/// Tolerance for the per-tick material balance.
pub const BALANCE_TOL: f64 = 1e-9;

/// Material held, discarded and in transit, summed.
pub fn material_total(engine: &Engine) -> f64 {
    let (held, discarded) = engine.material_accounted();
    held + discarded + engine.material_in_transit()
}

/// Runs the invariant suite. A config error surfaces as `Err`.
pub fn validate_config(
    cfg: &ScenarioConfig,
) -> Result<(Vec<Check>, Option<EngineError>), ConfigError> {
    let mut engine = build(cfg)?;
    let mut checks = Vec::new();

    // Conservation, tick by tick.
    let initial = material_total(&engine);
    let mut drift = Vec::new();
    let mut worst = 0.0f64;
    let mut abort = None;
    while engine.tick() < cfg.run.max_ticks {
        match engine.step() {
            Ok(report) => {
                let err = (material_total(&engine) - initial).abs();
                worst = worst.max(err);
                if err > BALANCE_TOL {
                    drift.push(format!("tick {}: off by {err:.3e}", report.tick));
                }
                if report.stop.is_some() {
                    break;
                }
            }
            Err(e) => {
                abort = Some(e);
                break;
            }
        }
    }
    checks.push(check(
        "conservation",
        drift,
        format!(
            "{initial} units over {} ticks, worst error {worst:.3e}",
            engine.tick()
        ),
    ));
    checks.push(check(
        "numeric",
        abort.iter().map(|e| e.to_string()).collect(),
        "no numeric abort",
    ));

    // Determinism.
    let mut again = build(cfg)?;
    let _ = again.run(engine.tick());
    let digits = DEFAULT_DIGITS;
    let same = trace::to_csv_string(&engine, digits) == trace::to_csv_string(&again, digits);
    checks.push(check(
        "determinism",
        if same {
            vec![]
        } else {
            vec!["second run produced a different trace".into()]
        },
        format!("{} trace rows reproduced", engine.trace().len()),
    ));

    let roles = Roles::detect(&engine);
    let s = Series::of(&engine);
    checks.push(cycle_structure(&s, &roles));
    checks.push(request_discipline(&engine, &s, &roles));
    checks.push(bounds(&engine, &s, &roles));

    let overflow: Vec<_> = engine
        .diagnostics()
        .iter()
        .filter(|d| d.code == "OVERFLOW")
        .collect();
    if !overflow.is_empty() {
        let total: f64 = engine.material_accounted().1;
        checks.push(Check {
            name: "overflow",
            pass: true,
            detail: format!(
                "{} clipped inflows, {total} units discarded and counted",
                overflow.len()
            ),
        });
    }
    Ok((checks, abort))
}

/// Load, heat and discharge phases of each cycle occur in order:
/// end of the liquid feed < first energy tick <= comparator fire < first
/// discharge tick, and discharge finishes before the next feed.
fn cycle_structure(s: &Series<'_>, roles: &Roles) -> Check {
    let feed = runs(s.get(roles.source, "PT"));
    let energy = runs(s.get(roles.energy, "PP"));
    let fires: Vec<u64> = s.get(roles.comparator, "OUT").iter().map(|p| p.0).collect();
    let discharge = runs(s.get(roles.heater, "PT"));

    let mut bad = Vec::new();
    let mut complete = 0;
    for (k, f) in feed.iter().enumerate() {
        let (Some(e), Some(&c), Some(d)) = (energy.get(k), fires.get(k), discharge.get(k)) else {
            // An unfinished last cycle is allowed.
            if k + 1 < feed.len() {
                bad.push(format!("cycle {k}: incomplete before the next feed"));
            }
            continue;
        };
        if !(f.end < e.start && e.start <= c && c < d.start) {
            bad.push(format!(
                "cycle {k}: feed ends {}, energy starts {}, fire {c}, discharge starts {}",
                f.end, e.start, d.start
            ));
        }
        if let Some(next) = feed.get(k + 1) {
            if d.end >= next.start {
                bad.push(format!(
                    "cycle {k}: discharge overlaps next feed at {}",
                    next.start
                ));
            }
        }
        complete += 1;
    }
    if feed.is_empty() {
        bad.push("no feed observed".into());
    }
    check(
        "cycle-structure",
        bad,
        format!("{complete} cycles ordered load, heat, discharge"),
    )
}

/// A restock request is issued only below LL, and at most once per
/// delivered batch.
fn request_discipline(engine: &Engine, s: &Series<'_>, roles: &Roles) -> Check {
    let Some(buffer) = roles.buffer else {
        return check("request-discipline", vec![], "no buffer");
    };
    let ll = setting(engine, buffer, "LL");
    let cl: HashMap<u64, f64> = s.get(roles.buffer, "CL").iter().copied().collect();
    let inflow = runs(s.get(roles.heater, "PT"));
    let requests: Vec<u64> = s.get(roles.buffer, "UTP").iter().map(|p| p.0).collect();

    let mut bad = Vec::new();
    for &t in &requests {
        match cl.get(&t) {
            Some(&v) if v < ll => {}
            other => bad.push(format!("request at tick {t} with level {other:?}")),
        }
    }
    for w in requests.windows(2) {
        if !inflow.iter().any(|r| r.end >= w[0] && r.end < w[1]) {
            bad.push(format!(
                "requests at {} and {} with no delivery between",
                w[0], w[1]
            ));
        }
    }
    check(
        "request-discipline",
        bad,
        format!("{} requests, each below LL={ll}", requests.len()),
    )
}

fn bounds(engine: &Engine, s: &Series<'_>, roles: &Roles) -> Check {
    let mut bad = Vec::new();
    let hl = roles
        .buffer
        .map_or(f64::INFINITY, |b| setting(engine, b, "HL"));
    for &(t, v) in s.get(roles.buffer, "CL") {
        if !(0.0..=hl).contains(&v) {
            bad.push(format!("buffer level {v} at tick {t}"));
        }
    }
    for (role, id) in [("source", roles.source), ("heater", roles.heater)] {
        for &(t, v) in s.get(id, "CL") {
            if v < 0.0 {
                bad.push(format!("{role} stock {v} at tick {t}"));
            }
        }
    }
    let cmax = s
        .get(roles.buffer, "CL")
        .iter()
        .map(|p| p.1)
        .fold(0.0, f64::max);
    check(
        "bounds",
        bad,
        format!("buffer level within [0, {hl}], peak {cmax}"),
    )
}

fn setting(engine: &Engine, id: ObjectId, section: &str) -> f64 {
    let r = engine
        .section_ref(engine.object_name(id), section)
        .expect("kind declares the section");
    engine.value(r)
}

pub fn cmd_validate(config: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", config.display());
            return EXIT_USAGE;
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) if e.class == ErrorClass::Unstable => {
            let _ = writeln!(
                out,
                "FAIL {:<20} {}",
                "stability-guard",
                located(config, &e)
            );
            return EXIT_INVARIANT;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", located(config, &e));
            return EXIT_USAGE;
        }
    };
    let _ = writeln!(
        out,
        "PASS {:<20} explicit step within the guard",
        "stability-guard"
    );
    let (checks, abort) = match validate_config(&cfg) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {}", located(config, &e));
            return EXIT_USAGE;
        }
    };
    for c in &checks {
        let _ = writeln!(out, "{c}");
    }
    if abort.is_some() {
        EXIT_NUMERIC
    } else if checks.iter().all(|c| c.pass) {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::HEATING_CFG;

    #[test]
    fn runs_merge_consecutive_ticks() {
        let r = runs(&[(1, 1.0), (2, 1.0), (4, 2.0), (5, 0.5), (6, 0.5), (9, 1.0)]);
        assert_eq!(r.len(), 3);
        assert_eq!((r[0].start, r[0].end, r[0].sum), (1, 2, 2.0));
        assert_eq!(r[1].ticks(), 3);
        assert_eq!(r[2].sum, 1.0);
        assert!(runs(&[]).is_empty());
    }

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("a.B=2.5").unwrap(), ("a.B".into(), 2.5));
        assert!(parse_assignment("a.B").is_err());
        assert!(parse_assignment("a.B=x").is_err());
    }

    #[test]
    fn summary_row_shape() {
        let cfg = parse_config(HEATING_CFG).unwrap();
        let (engine, result) = execute(&cfg, 20_000).unwrap();
        let stop = result.unwrap();
        let s = summarize(&engine, Some(&stop));
        assert!(s.cycles >= 1);
        let (lo, mean, hi) = (
            s.heat_ticks_min.unwrap(),
            s.heat_ticks_mean.unwrap(),
            s.heat_ticks_max.unwrap(),
        );
        assert!(lo as f64 <= mean && mean <= hi as f64);
        assert_eq!(
            s.csv_row().split(',').count(),
            SUMMARY_HEADER.split(',').count()
        );
        assert_eq!(s.stop_reason, "max_ticks");
    }

    #[test]
    fn heating_config_validates() {
        let cfg = parse_config(HEATING_CFG).unwrap();
        let (checks, abort) = validate_config(&cfg).unwrap();
        assert!(abort.is_none());
        for c in &checks {
            assert!(c.pass, "{c}");
        }
    }
}
