//! Tick-scanned simulation of port-based controlled systems.
//!
//! A model is a set of objects (systems and mechanisms) exposing named port
//! sections, wired by connection objects and serviced in a fixed order every
//! tick. The crate ships the mechanisms needed for a batch liquid-heating
//! conversion system feeding a buffering system, a line-oriented config
//! format, and the CLI operations (`run`, `sweep`, `validate`).

pub mod cli;
pub mod kernel;
pub mod mechanisms;
pub mod scenario;
pub mod systems;
pub mod thermal;
pub mod trace;

pub use kernel::{
    Catalog, Connection, ConnectionId, Direction, Engine, EngineError, KernelError, Mechanism,
    MechanismKind, ObjectId, ObjectSpec, Ports, Product, SectionDecl, SectionKind, SectionRef,
    ServiceEntry, ServiceError, Settings, StopReason, TickReport, TraceRecord,
};
pub use scenario::{build, parse_config, standard_catalog, ConfigError, ScenarioConfig};
pub use thermal::{thermal_step, ThermalMode, ThermalParams, ThermalState};
