//! Tick-based engine: object registry, port sections, connections,
//! service order, trace recording and stop conditions.
//!
//! Every tick the engine walks its service list once. An object entry runs
//! the object's mechanism against its own sections; a connection entry
//! transports the current value of one output section into one input
//! section. Values written earlier in the list are visible to entries later
//! in the same tick, so a topologically ordered list propagates a signal
//! down a chain within one tick and a feedback connection lands one tick
//! later.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Quantities closer to zero than this are treated as zero by the product
/// handling mechanisms (residue of repeated `0.01` decrements).
pub const QTY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SectionKind {
    /// Read-and-clear event carrying a magnitude.
    Impulse,
    /// Quantity delivered this tick; read-and-clear, deliveries accumulate.
    Flow,
    /// Persistent observable, overwritten by its writer.
    Level,
    /// Persistent configuration, fixed before the run.
    Setting,
}

impl SectionKind {
    pub fn is_transient(self) -> bool {
        matches!(self, SectionKind::Impulse | SectionKind::Flow)
    }
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SectionKind::Impulse => "IMPULSE",
            SectionKind::Flow => "FLOW",
            SectionKind::Level => "LEVEL",
            SectionKind::Setting => "SETTING",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Input,
    Output,
}

/// What physically moves through a section. Only used for accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Product {
    Material,
    Energy,
    Signal,
}

#[derive(Clone, Debug)]
pub struct SectionDecl {
    pub name: Arc<str>,
    pub address: u16,
    pub kind: SectionKind,
    pub direction: Direction,
    pub product: Product,
    /// Initial value. `None` on a SETTING marks it as required.
    pub default: Option<f64>,
}

impl SectionDecl {
    fn new(name: &str, address: u16, kind: SectionKind, direction: Direction) -> Self {
        let default = match kind {
            SectionKind::Setting => None,
            _ => Some(0.0),
        };
        SectionDecl {
            name: Arc::from(name),
            address,
            kind,
            direction,
            product: Product::Signal,
            default,
        }
    }

    pub fn input(name: &str, address: u16, kind: SectionKind) -> Self {
        Self::new(name, address, kind, Direction::Input)
    }

    pub fn output(name: &str, address: u16, kind: SectionKind) -> Self {
        assert!(kind != SectionKind::Setting, "settings are inputs");
        Self::new(name, address, kind, Direction::Output)
    }

    pub fn setting(name: &str, address: u16, default: f64) -> Self {
        Self::new(name, address, SectionKind::Setting, Direction::Input).with_default(default)
    }

    pub fn required_setting(name: &str, address: u16) -> Self {
        Self::new(name, address, SectionKind::Setting, Direction::Input)
    }

    pub fn with_default(mut self, value: f64) -> Self {
        self.default = Some(value);
        self
    }

    pub fn material(mut self) -> Self {
        self.product = Product::Material;
        self
    }

    pub fn energy(mut self) -> Self {
        self.product = Product::Energy;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConnectionId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SectionRef {
    pub object: ObjectId,
    pub section: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ServiceEntry {
    Object(ObjectId),
    Connection(ConnectionId),
}

#[derive(Clone, Debug)]
pub struct Connection {
    pub id: ConnectionId,
    pub from: SectionRef,
    pub to: SectionRef,
    pub kind: SectionKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub tick: u64,
    pub object: ObjectId,
    pub section: Arc<str>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub tick: u64,
    pub object: Option<ObjectId>,
    pub code: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxTicks,
    Requested(ObjectId),
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TickReport {
    /// Tick that was serviced.
    pub tick: u64,
    pub records: usize,
    pub stop: Option<StopReason>,
}

/// Request to instantiate one object from a catalog kind.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectSpec {
    pub name: String,
    pub kind: String,
    /// Initial values for SETTING and LEVEL sections.
    pub settings: Vec<(String, f64)>,
}

impl ObjectSpec {
    pub fn new(name: impl Into<String>, kind: impl Into<String>) -> Self {
        ObjectSpec {
            name: name.into(),
            kind: kind.into(),
            settings: Vec::new(),
        }
    }

    pub fn set(mut self, section: &str, value: f64) -> Self {
        self.settings.push((section.to_string(), value));
        self
    }

    pub fn get(&self, section: &str) -> Option<f64> {
        self.settings
            .iter()
            .rev()
            .find(|(k, _)| k == section)
            .map(|(_, v)| *v)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("duplicate object name `{0}`")]
    DuplicateObject(String),
    #[error("unknown mechanism kind `{0}`")]
    UnknownKind(String),
    #[error("object `{object}`: missing required setting `{section}`")]
    MissingSetting { object: String, section: String },
    #[error("object `{object}`: duplicate section name or address `{section}`")]
    DuplicateSection { object: String, section: String },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("object `{object}` has no section `{section}`")]
    UnknownSection { object: String, section: String },
    #[error("`{section}` is {kind}; only SETTING and LEVEL sections take initial values")]
    NotConfigurable { section: String, kind: SectionKind },
    #[error("kind mismatch: {from} ({from_kind}) -> {to} ({to_kind})")]
    KindMismatch {
        from: String,
        from_kind: SectionKind,
        to: String,
        to_kind: SectionKind,
    },
    #[error("`{0}` is a SETTING section and cannot be a connection target")]
    SettingTarget(String),
    #[error("`{0}` is not an output section")]
    NotOutput(String),
    #[error("`{0}` is not an input section")]
    NotInput(String),
    #[error("write to `{section}` rejected: {reason}")]
    WrongWrite {
        section: String,
        reason: &'static str,
    },
    #[error("object `{object}`: {message}")]
    InvalidSetting { object: String, message: String },
    #[error("service order: {0}")]
    BadServiceOrder(String),
}

/// Failure raised by a mechanism during its service.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct ServiceError(pub String);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("engine is stopped ({0:?})")]
    Stopped(StopReason),
    #[error("numeric abort at tick {tick} in `{object}`: {message}")]
    Numeric {
        tick: u64,
        object: String,
        message: String,
    },
}

/// Resolved initial section values handed to a mechanism constructor.
pub struct Settings<'a> {
    decls: &'a [SectionDecl],
    values: &'a [f64],
}

impl<'a> Settings<'a> {
    pub fn get(&self, name: &str) -> f64 {
        let idx = self
            .decls
            .iter()
            .position(|d| &*d.name == name)
            .unwrap_or_else(|| panic!("mechanism asked for undeclared section `{name}`"));
        self.values[idx]
    }
}

/// A fixed-function object serviced once per tick.
pub trait Mechanism: Send {
    fn service(&mut self, ports: &mut Ports<'_>) -> Result<(), ServiceError>;

    /// Material currently held by the object (stock, tank load, delivered total).
    fn material_held(&self) -> f64 {
        0.0
    }

    /// Material the object has removed from the model (clipped overflow).
    fn material_discarded(&self) -> f64 {
        0.0
    }
}

/// A catalog entry: declares an object's sections and builds its mechanism.
pub trait MechanismKind: Send + Sync {
    fn name(&self) -> &'static str;
    fn sections(&self, spec: &ObjectSpec) -> Vec<SectionDecl>;
    fn build(&self, settings: &Settings<'_>) -> Result<Box<dyn Mechanism>, String>;
}

#[derive(Default)]
pub struct Catalog {
    kinds: BTreeMap<&'static str, Box<dyn MechanismKind>>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, kind: Box<dyn MechanismKind>) {
        self.kinds.insert(kind.name(), kind);
    }

    pub fn with(mut self, kind: Box<dyn MechanismKind>) -> Self {
        self.add(kind);
        self
    }

    pub fn get(&self, name: &str) -> Option<&dyn MechanismKind> {
        self.kinds.get(name).map(|k| k.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.kinds.keys().copied()
    }
}

/// A mechanism's view of its own sections for the duration of one service.
pub struct Ports<'a> {
    tick: u64,
    object: ObjectId,
    decls: &'a [SectionDecl],
    values: &'a mut [f64],
    trace: &'a mut Vec<TraceRecord>,
    diagnostics: &'a mut Vec<Diagnostic>,
    stop: &'a mut Option<StopReason>,
}

impl<'a> Ports<'a> {
    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Reads an input section; IMPULSE and FLOW inputs are cleared.
    pub fn take(&mut self, idx: usize) -> f64 {
        let decl = &self.decls[idx];
        debug_assert_eq!(decl.direction, Direction::Input, "take on `{}`", decl.name);
        let v = self.values[idx];
        if decl.kind.is_transient() {
            self.values[idx] = 0.0;
        }
        v
    }

    /// Current value without clearing.
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Writes an output section and traces it. Zero writes to IMPULSE and FLOW
    /// sections are no delivery and leave no record.
    pub fn emit(&mut self, idx: usize, value: f64) {
        let decl = &self.decls[idx];
        assert_eq!(
            decl.direction,
            Direction::Output,
            "emit on input section `{}`",
            decl.name
        );
        if decl.kind.is_transient() {
            if value == 0.0 {
                return;
            }
            self.values[idx] += value;
        } else {
            self.values[idx] = value;
        }
        self.trace.push(TraceRecord {
            tick: self.tick,
            object: self.object,
            section: decl.name.clone(),
            value,
        });
    }

    /// Records a warning both as a trace row (`!CODE`) and as a diagnostic.
    pub fn warn(&mut self, code: &'static str, value: f64, message: impl Into<String>) {
        self.trace.push(TraceRecord {
            tick: self.tick,
            object: self.object,
            section: Arc::from(format!("!{code}")),
            value,
        });
        self.diagnostics.push(Diagnostic {
            tick: self.tick,
            object: Some(self.object),
            code,
            message: message.into(),
        });
    }

    /// Asks the engine to stop once the current tick has been fully serviced.
    pub fn request_stop(&mut self) {
        if self.stop.is_none() {
            *self.stop = Some(StopReason::Requested(self.object));
        }
    }
}

struct ObjectSlot {
    name: String,
    kind: &'static str,
    decls: Vec<SectionDecl>,
    values: Vec<f64>,
    mechanism: Box<dyn Mechanism>,
}

impl ObjectSlot {
    fn section_index(&self, name: &str) -> Option<usize> {
        self.decls.iter().position(|d| &*d.name == name)
    }
}

pub struct Engine {
    catalog: Arc<Catalog>,
    objects: Vec<ObjectSlot>,
    connections: Vec<Connection>,
    order: Vec<ServiceEntry>,
    /// Per connection: whether it is the last transport of its source
    /// section in the service order and therefore clears it.
    clears_source: Vec<bool>,
    tick: u64,
    trace: Vec<TraceRecord>,
    diagnostics: Vec<Diagnostic>,
    stop: Option<StopReason>,
    pending_stop: Option<StopReason>,
    object_services: Vec<u64>,
    connection_services: Vec<u64>,
}

impl Engine {
    pub fn new(catalog: Arc<Catalog>) -> Self {
        Engine {
            catalog,
            objects: Vec::new(),
            connections: Vec::new(),
            order: Vec::new(),
            clears_source: Vec::new(),
            tick: 0,
            trace: Vec::new(),
            diagnostics: Vec::new(),
            stop: None,
            pending_stop: None,
            object_services: Vec::new(),
            connection_services: Vec::new(),
        }
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn register_object(&mut self, spec: &ObjectSpec) -> Result<ObjectId, KernelError> {
        let kind = self
            .catalog
            .get(&spec.kind)
            .ok_or_else(|| KernelError::UnknownKind(spec.kind.clone()))?;
        let decls = kind.sections(spec);
        let kind_name = kind.name();
        let catalog = Arc::clone(&self.catalog);
        let kind = catalog.get(kind_name).expect("kind just resolved");
        self.register_with(&spec.name, kind_name, decls, &spec.settings, |s| {
            kind.build(s)
        })
    }

    /// Registers an object built outside the catalog.
    pub fn register_mechanism(
        &mut self,
        name: &str,
        kind: &'static str,
        decls: Vec<SectionDecl>,
        overrides: &[(String, f64)],
        mechanism: Box<dyn Mechanism>,
    ) -> Result<ObjectId, KernelError> {
        let mut mech = Some(mechanism);
        self.register_with(name, kind, decls, overrides, |_| {
            Ok(mech.take().expect("built once"))
        })
    }

    fn register_with(
        &mut self,
        name: &str,
        kind: &'static str,
        decls: Vec<SectionDecl>,
        overrides: &[(String, f64)],
        build: impl FnOnce(&Settings<'_>) -> Result<Box<dyn Mechanism>, String>,
    ) -> Result<ObjectId, KernelError> {
        if self.objects.iter().any(|o| o.name == name) {
            return Err(KernelError::DuplicateObject(name.to_string()));
        }
        for (i, d) in decls.iter().enumerate() {
            if decls[..i]
                .iter()
                .any(|e| e.name == d.name || e.address == d.address)
            {
                return Err(KernelError::DuplicateSection {
                    object: name.to_string(),
                    section: d.name.to_string(),
                });
            }
        }
        let mut values: Vec<Option<f64>> = decls.iter().map(|d| d.default).collect();
        for (section, value) in overrides {
            let idx = decls
                .iter()
                .position(|d| &*d.name == section.as_str())
                .ok_or_else(|| KernelError::UnknownSection {
                    object: name.to_string(),
                    section: section.clone(),
                })?;
            match decls[idx].kind {
                SectionKind::Setting | SectionKind::Level => values[idx] = Some(*value),
                kind => {
                    return Err(KernelError::NotConfigurable {
                        section: format!("{name}.{section}"),
                        kind,
                    })
                }
            }
        }
        let values = values
            .into_iter()
            .zip(&decls)
            .map(|(v, d)| {
                v.ok_or_else(|| KernelError::MissingSetting {
                    object: name.to_string(),
                    section: d.name.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let mechanism = build(&Settings {
            decls: &decls,
            values: &values,
        })
        .map_err(|message| KernelError::InvalidSetting {
            object: name.to_string(),
            message,
        })?;
        let id = ObjectId(self.objects.len() as u32);
        self.objects.push(ObjectSlot {
            name: name.to_string(),
            kind,
            decls,
            values,
            mechanism,
        });
        self.object_services.push(0);
        self.order.push(ServiceEntry::Object(id));
        Ok(id)
    }

    pub fn object_id(&self, name: &str) -> Option<ObjectId> {
        self.objects
            .iter()
            .position(|o| o.name == name)
            .map(|i| ObjectId(i as u32))
    }

    pub fn object_name(&self, id: ObjectId) -> &str {
        &self.objects[id.0 as usize].name
    }

    pub fn object_kind(&self, id: ObjectId) -> &'static str {
        self.objects[id.0 as usize].kind
    }

    pub fn object_ids(&self) -> impl Iterator<Item = ObjectId> {
        (0..self.objects.len() as u32).map(ObjectId)
    }

    pub fn objects_of_kind<'s>(&'s self, kind: &'s str) -> impl Iterator<Item = ObjectId> + 's {
        self.object_ids()
            .filter(move |&id| self.object_kind(id) == kind)
    }

    pub fn sections(&self, id: ObjectId) -> &[SectionDecl] {
        &self.objects[id.0 as usize].decls
    }

    pub fn section_ref(&self, object: &str, section: &str) -> Result<SectionRef, KernelError> {
        let id = self
            .object_id(object)
            .ok_or_else(|| KernelError::UnknownObject(object.to_string()))?;
        let idx = self.objects[id.0 as usize]
            .section_index(section)
            .ok_or_else(|| KernelError::UnknownSection {
                object: object.to_string(),
                section: section.to_string(),
            })?;
        Ok(SectionRef {
            object: id,
            section: idx,
        })
    }

    pub fn decl(&self, r: SectionRef) -> &SectionDecl {
        &self.objects[r.object.0 as usize].decls[r.section]
    }

    pub fn section_label(&self, r: SectionRef) -> String {
        format!("{}.{}", self.object_name(r.object), self.decl(r).name)
    }

    pub fn value(&self, r: SectionRef) -> f64 {
        self.objects[r.object.0 as usize].values[r.section]
    }

    /// Delivers a value into an input section from outside the model, as a
    /// connection would. SETTING sections only accept writes before tick 0.
    pub fn inject(&mut self, r: SectionRef, value: f64) -> Result<(), KernelError> {
        let decl = self.decl(r).clone();
        let label = self.section_label(r);
        if decl.direction != Direction::Input {
            return Err(KernelError::WrongWrite {
                section: label,
                reason: "not an input section",
            });
        }
        let slot = &mut self.objects[r.object.0 as usize].values[r.section];
        match decl.kind {
            SectionKind::Impulse | SectionKind::Flow => *slot += value,
            SectionKind::Level => *slot = value,
            SectionKind::Setting => {
                return Err(KernelError::WrongWrite {
                    section: label,
                    reason: "settings are fixed at registration",
                })
            }
        }
        Ok(())
    }

    pub fn connect(
        &mut self,
        from: SectionRef,
        to: SectionRef,
    ) -> Result<ConnectionId, KernelError> {
        let (fd, td) = (self.decl(from).clone(), self.decl(to).clone());
        if td.kind == SectionKind::Setting {
            return Err(KernelError::SettingTarget(self.section_label(to)));
        }
        if fd.direction != Direction::Output {
            return Err(KernelError::NotOutput(self.section_label(from)));
        }
        if td.direction != Direction::Input {
            return Err(KernelError::NotInput(self.section_label(to)));
        }
        if fd.kind != td.kind {
            return Err(KernelError::KindMismatch {
                from: self.section_label(from),
                from_kind: fd.kind,
                to: self.section_label(to),
                to_kind: td.kind,
            });
        }
        let id = ConnectionId(self.connections.len() as u32);
        self.connections.push(Connection {
            id,
            from,
            to,
            kind: fd.kind,
        });
        self.connection_services.push(0);
        // Default placement: right after the source object and the
        // connections already following it.
        let mut pos = self
            .order
            .iter()
            .position(|e| *e == ServiceEntry::Object(from.object))
            .expect("registered object is in the service order")
            + 1;
        while let Some(ServiceEntry::Connection(_)) = self.order.get(pos) {
            pos += 1;
        }
        self.order.insert(pos, ServiceEntry::Connection(id));
        self.refresh_clears();
        Ok(id)
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn incoming(&self, to: SectionRef) -> impl Iterator<Item = &Connection> + '_ {
        self.connections.iter().filter(move |c| c.to == to)
    }

    pub fn service_order(&self) -> &[ServiceEntry] {
        &self.order
    }

    /// Replaces the service order. It must list every object and connection
    /// exactly once.
    pub fn set_service_order(&mut self, order: Vec<ServiceEntry>) -> Result<(), KernelError> {
        let mut seen_obj = vec![false; self.objects.len()];
        let mut seen_conn = vec![false; self.connections.len()];
        for e in &order {
            let slot = match *e {
                ServiceEntry::Object(ObjectId(i)) => seen_obj.get_mut(i as usize),
                ServiceEntry::Connection(ConnectionId(i)) => seen_conn.get_mut(i as usize),
            };
            match slot {
                None => return Err(KernelError::BadServiceOrder(format!("unknown entry {e:?}"))),
                Some(true) => {
                    return Err(KernelError::BadServiceOrder(format!("{e:?} listed twice")))
                }
                Some(s) => *s = true,
            }
        }
        if let Some(i) = seen_obj.iter().position(|s| !s) {
            return Err(KernelError::BadServiceOrder(format!(
                "object `{}` missing",
                self.objects[i].name
            )));
        }
        if let Some(i) = seen_conn.iter().position(|s| !s) {
            return Err(KernelError::BadServiceOrder(format!(
                "connection #{i} missing"
            )));
        }
        self.order = order;
        self.refresh_clears();
        Ok(())
    }

    fn refresh_clears(&mut self) {
        self.clears_source = vec![false; self.connections.len()];
        let mut seen = Vec::new();
        for e in self.order.iter().rev() {
            if let ServiceEntry::Connection(c) = *e {
                let from = self.connections[c.0 as usize].from;
                if !seen.contains(&from) {
                    seen.push(from);
                    self.clears_source[c.0 as usize] = true;
                }
            }
        }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn note(&mut self, code: &'static str, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            tick: self.tick,
            object: None,
            code,
            message: message.into(),
        });
    }

    pub fn stop_reason(&self) -> Option<&StopReason> {
        self.stop.as_ref()
    }

    /// How many times each object and each connection has been serviced.
    pub fn service_counts(&self) -> (&[u64], &[u64]) {
        (&self.object_services, &self.connection_services)
    }

    pub fn step(&mut self) -> Result<TickReport, EngineError> {
        if let Some(reason) = &self.stop {
            return Err(EngineError::Stopped(reason.clone()));
        }
        let tick = self.tick;
        let before = self.trace.len();
        for i in 0..self.order.len() {
            match self.order[i] {
                ServiceEntry::Object(id) => self.service_object(id)?,
                ServiceEntry::Connection(id) => self.service_connection(id),
            }
        }
        self.tick += 1;
        self.stop = self.pending_stop.take();
        Ok(TickReport {
            tick,
            records: self.trace.len() - before,
            stop: self.stop.clone(),
        })
    }

    fn service_object(&mut self, id: ObjectId) -> Result<(), EngineError> {
        let slot = &mut self.objects[id.0 as usize];
        for (d, v) in slot.decls.iter().zip(slot.values.iter_mut()) {
            if d.direction == Direction::Output && d.kind.is_transient() {
                *v = 0.0;
            }
        }
        let mut ports = Ports {
            tick: self.tick,
            object: id,
            decls: &slot.decls,
            values: &mut slot.values,
            trace: &mut self.trace,
            diagnostics: &mut self.diagnostics,
            stop: &mut self.pending_stop,
        };
        let result = slot.mechanism.service(&mut ports);
        self.object_services[id.0 as usize] += 1;
        result.map_err(|e| {
            self.stop = Some(StopReason::Aborted);
            EngineError::Numeric {
                tick: self.tick,
                object: self.objects[id.0 as usize].name.clone(),
                message: e.0,
            }
        })
    }

    fn service_connection(&mut self, id: ConnectionId) {
        let c = &self.connections[id.0 as usize];
        let (from, to, kind) = (c.from, c.to, c.kind);
        let src = &mut self.objects[from.object.0 as usize].values[from.section];
        let v = *src;
        if kind.is_transient() && self.clears_source[id.0 as usize] {
            *src = 0.0;
        }
        let dst = &mut self.objects[to.object.0 as usize].values[to.section];
        if kind.is_transient() {
            *dst += v;
        } else {
            *dst = v;
        }
        self.connection_services[id.0 as usize] += 1;
    }

    /// Steps until the engine has serviced `max_ticks` ticks in total or an
    /// object requests a stop.
    pub fn run(&mut self, max_ticks: u64) -> Result<StopReason, EngineError> {
        while self.tick < max_ticks {
            if let Some(reason) = self.step()?.stop {
                return Ok(reason);
            }
        }
        if let Some(reason) = &self.stop {
            return Ok(reason.clone());
        }
        Ok(StopReason::MaxTicks)
    }

    /// Sum of material held or discarded by all objects.
    pub fn material_accounted(&self) -> (f64, f64) {
        self.objects.iter().fold((0.0, 0.0), |(h, d), o| {
            (
                h + o.mechanism.material_held(),
                d + o.mechanism.material_discarded(),
            )
        })
    }

    /// Material sitting in FLOW sections between a writer and its reader:
    /// undelivered inputs plus outputs whose last transport has not run yet.
    pub fn material_in_transit(&self) -> f64 {
        let mut total = 0.0;
        for (oi, o) in self.objects.iter().enumerate() {
            for (si, (d, v)) in o.decls.iter().zip(&o.values).enumerate() {
                if d.kind != SectionKind::Flow || d.product != Product::Material || *v == 0.0 {
                    continue;
                }
                let pending = match d.direction {
                    Direction::Input => true,
                    Direction::Output => {
                        let r = SectionRef {
                            object: ObjectId(oi as u32),
                            section: si,
                        };
                        self.connections.iter().any(|c| c.from == r)
                    }
                };
                if pending {
                    total += v;
                }
            }
        }
        total
    }
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field(
                "objects",
                &self.objects.iter().map(|o| &o.name).collect::<Vec<_>>(),
            )
            .field("connections", &self.connections.len())
            .field("tick", &self.tick)
            .field("stop", &self.stop)
            .finish()
    }
}
