//! Line-oriented scenario config.
//!
//! ```text
//! # comment
//! [objects]
//! sSepA1 = sSepA SL=0 LL=1.2 HL=2 INT=0.01
//! [connections]
//! mTmprA1.TMP -> mCmpA1.IN2
//! [run]
//! max_ticks = 50000
//! trace = heating_trace.csv
//! thermal_mode = corrected
//! service_order = sSepA1, mGstB1, @0, ...
//! ```
//!
//! `service_order` lists object names and `@k` references to the k-th
//! connection (0-based). Connections left out follow their source object.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::thermal::ThermalMode;

pub const DEFAULT_MAX_TICKS: u64 = 50_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ErrorClass {
    #[default]
    Invalid,
    /// A heating tank fails the explicit-step stability guard.
    Unstable,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
    pub class: ErrorClass,
}

impl ConfigError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
            class: ErrorClass::Invalid,
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
            class: ErrorClass::Invalid,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// `object.SECTION`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SectionPath {
    pub object: String,
    pub section: String,
}

impl fmt::Display for SectionPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.object, self.section)
    }
}

impl FromStr for SectionPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (object, section) = s
            .trim()
            .split_once('.')
            .ok_or_else(|| format!("expected `object.SECTION`, got `{s}`"))?;
        if !is_ident(object) || !is_ident(section) {
            return Err(format!("expected `object.SECTION`, got `{s}`"));
        }
        Ok(SectionPath {
            object: object.to_string(),
            section: section.to_string(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct ObjectEntry {
    pub name: String,
    pub kind: String,
    pub settings: Vec<(String, f64)>,
    pub line: usize,
}

#[derive(Clone, Debug)]
pub struct ConnectionEntry {
    pub from: SectionPath,
    pub to: SectionPath,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrderItem {
    Object(String),
    Connection(usize),
}

impl fmt::Display for OrderItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderItem::Object(n) => f.write_str(n),
            OrderItem::Connection(i) => write!(f, "@{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSection {
    pub max_ticks: u64,
    pub trace: Option<String>,
    pub thermal_mode: ThermalMode,
    pub service_order: Option<Vec<OrderItem>>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            max_ticks: DEFAULT_MAX_TICKS,
            trace: None,
            thermal_mode: ThermalMode::Corrected,
            service_order: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ScenarioConfig {
    pub objects: Vec<ObjectEntry>,
    pub connections: Vec<ConnectionEntry>,
    pub run: RunSection,
}

// Source line numbers are not part of a config's identity.
impl PartialEq for ObjectEntry {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name && self.kind == o.kind && self.settings == o.settings
    }
}

impl PartialEq for ConnectionEntry {
    fn eq(&self, o: &Self) -> bool {
        self.from == o.from && self.to == o.to
    }
}

impl PartialEq for ScenarioConfig {
    fn eq(&self, o: &Self) -> bool {
        self.objects == o.objects && self.connections == o.connections && self.run == o.run
    }
}

impl ScenarioConfig {
    pub fn object(&self, name: &str) -> Option<&ObjectEntry> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn object_mut(&mut self, name: &str) -> Option<&mut ObjectEntry> {
        self.objects.iter_mut().find(|o| o.name == name)
    }
}

impl ObjectEntry {
    /// Sets or replaces an initial value.
    pub fn set(&mut self, section: &str, value: f64) {
        match self.settings.iter_mut().find(|(k, _)| k == section) {
            Some(slot) => slot.1 = value,
            None => self.settings.push((section.to_string(), value)),
        }
    }

    pub fn get(&self, section: &str) -> Option<f64> {
        self.settings
            .iter()
            .find(|(k, _)| k == section)
            .map(|(_, v)| *v)
    }
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Clone, Copy, PartialEq)]
enum Block {
    None,
    Objects,
    Connections,
    Run,
}

/// Syntax-level parse. Names, kinds and wiring are not resolved here.
pub fn parse_syntax(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut block = Block::None;
    let mut seen_objects = false;
    let mut seen_headers: Vec<&str> = Vec::new();
    let mut run_keys: Vec<String> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line_no, "unterminated section header"))?
                .trim();
            block = match name {
                "objects" => Block::Objects,
                "connections" => Block::Connections,
                "run" => Block::Run,
                other => {
                    return Err(ConfigError::at(
                        line_no,
                        format!("unknown section header `[{other}]`"),
                    ))
                }
            };
            if seen_headers.contains(&name) {
                return Err(ConfigError::at(
                    line_no,
                    format!("duplicate `[{name}]` section"),
                ));
            }
            seen_headers.push(match block {
                Block::Objects => "objects",
                Block::Connections => "connections",
                _ => "run",
            });
            seen_objects |= block == Block::Objects;
            continue;
        }
        match block {
            Block::None => {
                return Err(ConfigError::at(line_no, "entry outside of any section"));
            }
            Block::Objects => cfg.objects.push(parse_object(line, line_no)?),
            Block::Connections => {
                let (from, to) = line
                    .split_once("->")
                    .ok_or_else(|| ConfigError::at(line_no, "expected `A.SEC -> B.SEC`"))?;
                cfg.connections.push(ConnectionEntry {
                    from: from.parse().map_err(|e| ConfigError::at(line_no, e))?,
                    to: to.parse().map_err(|e| ConfigError::at(line_no, e))?,
                    line: line_no,
                });
            }
            Block::Run => {
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| ConfigError::at(line_no, "expected `key = value`"))?;
                let (key, value) = (key.trim(), value.trim());
                if run_keys.iter().any(|k| k == key) {
                    return Err(ConfigError::at(
                        line_no,
                        format!("duplicate run key `{key}`"),
                    ));
                }
                run_keys.push(key.to_string());
                parse_run_key(&mut cfg.run, key, value, line_no)?;
            }
        }
    }
    if !seen_objects {
        return Err(ConfigError::general("no [objects] section"));
    }
    Ok(cfg)
}

fn parse_object(line: &str, line_no: usize) -> Result<ObjectEntry, ConfigError> {
    let (name, rest) = line
        .split_once('=')
        .ok_or_else(|| ConfigError::at(line_no, "expected `name = kind KEY=VALUE ...`"))?;
    let name = name.trim();
    if !is_ident(name) {
        return Err(ConfigError::at(
            line_no,
            format!("invalid object name `{name}`"),
        ));
    }
    // Normalize `KEY = VALUE` spacing to `KEY=VALUE` tokens.
    let mut tokens: Vec<String> = Vec::new();
    let mut parts = rest.split_whitespace().peekable();
    while let Some(p) = parts.next() {
        if p == "=" || p.starts_with('=') {
            let last = tokens
                .last_mut()
                .ok_or_else(|| ConfigError::at(line_no, "stray `=`"))?;
            last.push_str(p);
            if p == "=" {
                if let Some(v) = parts.next() {
                    last.push_str(v);
                }
            }
        } else if p.ends_with('=') {
            let mut t = p.to_string();
            if let Some(v) = parts.next() {
                t.push_str(v);
            }
            tokens.push(t);
        } else {
            tokens.push(p.to_string());
        }
    }
    let mut tokens = tokens.into_iter();
    let kind = tokens
        .next()
        .ok_or_else(|| ConfigError::at(line_no, format!("object `{name}` has no kind")))?;
    if !is_ident(&kind) {
        return Err(ConfigError::at(line_no, format!("invalid kind `{kind}`")));
    }
    let mut entry = ObjectEntry {
        name: name.to_string(),
        kind,
        settings: Vec::new(),
        line: line_no,
    };
    for t in tokens {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line_no, format!("expected KEY=VALUE, got `{t}`")))?;
        if !is_ident(k) {
            return Err(ConfigError::at(
                line_no,
                format!("invalid section name `{k}`"),
            ));
        }
        let value: f64 = v
            .parse()
            .ok()
            .filter(|x: &f64| x.is_finite())
            .ok_or_else(|| ConfigError::at(line_no, format!("`{k}`: bad number `{v}`")))?;
        if entry.get(k).is_some() {
            return Err(ConfigError::at(line_no, format!("`{k}` given twice")));
        }
        entry.settings.push((k.to_string(), value));
    }
    Ok(entry)
}

fn parse_run_key(
    run: &mut RunSection,
    key: &str,
    value: &str,
    line_no: usize,
) -> Result<(), ConfigError> {
    match key {
        "max_ticks" => {
            run.max_ticks = value
                .parse()
                .ok()
                .filter(|&n: &u64| n >= 1)
                .ok_or_else(|| ConfigError::at(line_no, "max_ticks must be an integer >= 1"))?;
        }
        "trace" => {
            if value.is_empty() {
                return Err(ConfigError::at(line_no, "empty trace path"));
            }
            run.trace = Some(value.to_string());
        }
        "thermal_mode" => {
            run.thermal_mode = value.parse().map_err(|e| ConfigError::at(line_no, e))?;
        }
        "service_order" => {
            let items = value
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    if let Some(idx) = item.strip_prefix('@') {
                        idx.parse()
                            .map(OrderItem::Connection)
                            .map_err(|_| format!("bad connection reference `{item}`"))
                    } else if is_ident(item) {
                        Ok(OrderItem::Object(item.to_string()))
                    } else {
                        Err(format!("bad service order entry `{item}`"))
                    }
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ConfigError::at(line_no, e))?;
            run.service_order = Some(items);
        }
        other => {
            return Err(ConfigError::at(
                line_no,
                format!("unknown run key `{other}`"),
            ))
        }
    }
    Ok(())
}

impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[objects]")?;
        for o in &self.objects {
            write!(f, "{} = {}", o.name, o.kind)?;
            for (k, v) in &o.settings {
                write!(f, " {k}={v}")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "\n[connections]")?;
        for c in &self.connections {
            writeln!(f, "{} -> {}", c.from, c.to)?;
        }
        writeln!(f, "\n[run]")?;
        writeln!(f, "max_ticks = {}", self.run.max_ticks)?;
        if let Some(t) = &self.run.trace {
            writeln!(f, "trace = {t}")?;
        }
        writeln!(f, "thermal_mode = {}", self.run.thermal_mode)?;
        if let Some(order) = &self.run.service_order {
            let items: Vec<String> = order.iter().map(|i| i.to_string()).collect();
            writeln!(f, "service_order = {}", items.join(", "))?;
        }
        Ok(())
    }
}
