//! Trace CSV: `tick,object,section,value`, one row per recorded write.

use std::io::{self, Write};

use thiserror::Error;

use crate::kernel::{Engine, TraceRecord};

pub const HEADER: &str = "tick,object,section,value";
pub const DEFAULT_DIGITS: usize = 12;

/// Formats `v` with at most `digits` significant digits, `%g` style:
/// trailing zeros trimmed, exponent form below `1e-4` or at `10^digits` and up.
pub fn format_sig(v: f64, digits: usize) -> String {
    let digits = digits.clamp(1, 17);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(engine: &Engine, out: W, digits: usize) -> io::Result<()> {
    write_records(engine, engine.trace(), out, digits)
}

pub fn write_records<W: Write>(
    engine: &Engine,
    records: &[TraceRecord],
    mut out: W,
    digits: usize,
) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{}",
            r.tick,
            engine.object_name(r.object),
            r.section,
            format_sig(r.value, digits)
        )?;
    }
    out.flush()
}

pub fn to_csv_string(engine: &Engine, digits: usize) -> String {
    let mut buf = Vec::new();
    write_csv(engine, &mut buf, digits).expect("writing to memory");
    String::from_utf8(buf).expect("trace is UTF-8")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub tick: u64,
    pub object: String,
    pub section: String,
    pub value: f64,
}

#[derive(Debug, Error, PartialEq)]
#[error("trace line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

/// Reads a trace CSV back into rows. Ticks must be non-decreasing.
pub fn parse_csv(text: &str) -> Result<Vec<Row>, TraceParseError> {
    let err = |line: usize, message: String| TraceParseError { line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == HEADER => {}
        _ => return Err(err(1, format!("expected header `{HEADER}`"))),
    }
    let mut rows = Vec::new();
    let mut last_tick = 0;
    for (i, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [tick, object, section, value] = fields[..] else {
            return Err(err(
                i + 1,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        };
        let tick: u64 = tick
            .parse()
            .map_err(|_| err(i + 1, format!("bad tick `{tick}`")))?;
        if tick < last_tick {
            return Err(err(i + 1, format!("tick {tick} after {last_tick}")));
        }
        last_tick = tick;
        if object.is_empty() || section.is_empty() {
            return Err(err(i + 1, "empty object or section".into()));
        }
        let value: f64 = value
            .parse()
            .map_err(|_| err(i + 1, format!("bad value `{value}`")))?;
        rows.push(Row {
            tick,
            object: object.to_string(),
            section: section.to_string(),
            value,
        });
    }
    Ok(rows)
}
