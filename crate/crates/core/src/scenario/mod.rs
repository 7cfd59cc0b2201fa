//! Scenario assembly: config format, the standard catalog and the builder
//! that turns a config into a ready-to-run [`Engine`].

mod build;
mod config;

use std::sync::{Arc, OnceLock};

use crate::kernel::{
    Catalog, Direction, Engine, Mechanism, MechanismKind, ObjectId, ObjectSpec, Ports, SectionDecl,
    SectionKind, ServiceError, Settings,
};
use crate::mechanisms::{CmpAKind, FinAKind, GstAKind, GstBKind, PassAKind, PassBKind, TmprAKind};
use crate::systems::{SepAKind, SrcAKind, SrcPKind};

pub use build::{build, build_with, delayed_connections, plan_order};
pub use config::{
    parse_syntax, ConfigError, ConnectionEntry, ErrorClass, ObjectEntry, OrderItem, RunSection,
    ScenarioConfig, SectionPath, DEFAULT_MAX_TICKS,
};

/// The controlled heating plant, corrected energy balance.
pub const HEATING_CFG: &str = include_str!("../../scenarios/heating.cfg");
/// Same plant with the literal energy balance.
pub const HEATING_LITERAL_CFG: &str = include_str!("../../scenarios/heating_literal.cfg");

/// Parses and fully validates a config by building it once.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg = parse_syntax(text)?;
    build(&cfg)?;
    Ok(cfg)
}

pub fn standard_catalog() -> Arc<Catalog> {
    static CATALOG: OnceLock<Arc<Catalog>> = OnceLock::new();
    CATALOG
        .get_or_init(|| {
            Arc::new(
                Catalog::new()
                    .with(Box::new(TmprAKind))
                    .with(Box::new(PassAKind))
                    .with(Box::new(PassBKind))
                    .with(Box::new(FinAKind))
                    .with(Box::new(CmpAKind))
                    .with(Box::new(GstAKind))
                    .with(Box::new(GstBKind))
                    .with(Box::new(SepAKind))
                    .with(Box::new(SrcAKind))
                    .with(Box::new(SrcPKind))
                    .with(Box::new(MuxKind))
                    .with(Box::new(SinkKind)),
            )
        })
        .clone()
}

/// Sets the value of `object.SECTION` in `cfg`. Only SETTING sections
/// qualify, so the result is a new parameterization of the same model.
pub fn override_setting(
    cfg: &mut ScenarioConfig,
    target: &str,
    value: f64,
) -> Result<(), ConfigError> {
    override_with(cfg, target, value, false)
}

/// Like [`override_setting`] but also accepts initial values of LEVEL
/// inputs such as a comparator reference.
pub fn override_initial(
    cfg: &mut ScenarioConfig,
    target: &str,
    value: f64,
) -> Result<(), ConfigError> {
    override_with(cfg, target, value, true)
}

fn override_with(
    cfg: &mut ScenarioConfig,
    target: &str,
    value: f64,
    allow_level: bool,
) -> Result<(), ConfigError> {
    let path: SectionPath = target.parse().map_err(ConfigError::general)?;
    if !value.is_finite() {
        return Err(ConfigError::general(format!(
            "{path}: value must be finite"
        )));
    }
    let entry = cfg
        .object_mut(&path.object)
        .ok_or_else(|| ConfigError::general(format!("unknown object `{}`", path.object)))?;
    let catalog = standard_catalog();
    let kind = catalog.get(&entry.kind).ok_or_else(|| {
        ConfigError::at(
            entry.line,
            format!("unknown mechanism kind `{}`", entry.kind),
        )
    })?;
    let spec = ObjectSpec {
        name: entry.name.clone(),
        kind: entry.kind.clone(),
        settings: entry.settings.clone(),
    };
    let decl = kind
        .sections(&spec)
        .into_iter()
        .find(|d| *d.name == *path.section)
        .ok_or_else(|| {
            ConfigError::general(format!(
                "object `{}` has no section `{}`",
                path.object, path.section
            ))
        })?;
    let ok = decl.kind == SectionKind::Setting
        || (allow_level && decl.kind == SectionKind::Level && decl.direction == Direction::Input);
    if !ok {
        let wanted = if allow_level {
            "SETTING or LEVEL input"
        } else {
            "SETTING"
        };
        return Err(ConfigError::general(format!(
            "`{path}` is {}; only {wanted} sections can be overridden",
            decl.kind
        )));
    }
    entry.set(&path.section, value);
    Ok(())
}

/// First object of each kind the heating plant is made of.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Roles {
    pub source: Option<ObjectId>,
    pub heater: Option<ObjectId>,
    pub energy: Option<ObjectId>,
    pub comparator: Option<ObjectId>,
    pub buffer: Option<ObjectId>,
    pub consumer: Option<ObjectId>,
    pub sink: Option<ObjectId>,
}

impl Roles {
    pub fn detect(engine: &Engine) -> Roles {
        let first = |kind: &str| engine.objects_of_kind(kind).next();
        Roles {
            source: first("sSrcA"),
            heater: first("mTmprA"),
            energy: first("sSrcP"),
            comparator: first("mCmpA"),
            buffer: first("sSepA"),
            consumer: first("mGstA"),
            sink: first("sink"),
        }
    }
}

// ---------------------------------------------------------------------------
// mux

/// Merges `N` impulse inputs into one output. Emits the largest nonzero
/// input of the tick, so simultaneous requests count once.
pub struct Mux {
    inputs: usize,
}

pub struct MuxKind;

const MUX_MAX_INPUTS: usize = 64;

fn mux_inputs(n: f64) -> Option<usize> {
    (n >= 1.0 && n.fract() == 0.0 && n <= MUX_MAX_INPUTS as f64).then_some(n as usize)
}

impl MechanismKind for MuxKind {
    fn name(&self) -> &'static str {
        "mux"
    }

    fn sections(&self, spec: &ObjectSpec) -> Vec<SectionDecl> {
        let n = spec.get("N").and_then(mux_inputs).unwrap_or(2);
        let mut decls = vec![SectionDecl::setting("N", 1, 2.0)];
        for k in 1..=n {
            decls.push(SectionDecl::input(
                &format!("IN{k}"),
                1 + k as u16,
                SectionKind::Impulse,
            ));
        }
        decls.push(SectionDecl::output(
            "OUT",
            2 + n as u16,
            SectionKind::Impulse,
        ));
        decls
    }

    fn build(&self, s: &Settings<'_>) -> Result<Box<dyn Mechanism>, String> {
        let n = s.get("N");
        let inputs = mux_inputs(n)
            .ok_or_else(|| format!("N must be a whole number in 1..={MUX_MAX_INPUTS}, got {n}"))?;
        Ok(Box::new(Mux { inputs }))
    }
}

impl Mechanism for Mux {
    fn service(&mut self, ports: &mut Ports<'_>) -> Result<(), ServiceError> {
        let mut out: Option<f64> = None;
        for k in 1..=self.inputs {
            let v = ports.take(k);
            if v != 0.0 {
                out = Some(out.map_or(v, |o| o.max(v)));
            }
        }
        if let Some(v) = out {
            ports.emit(self.inputs + 1, v);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// sink

/// Terminal consumer. `CL` is the cumulative quantity received.
#[derive(Default)]
pub struct Sink {
    received: f64,
}

pub struct SinkKind;

impl MechanismKind for SinkKind {
    fn name(&self) -> &'static str {
        "sink"
    }

    fn sections(&self, _: &ObjectSpec) -> Vec<SectionDecl> {
        vec![
            SectionDecl::input("IN", 1, SectionKind::Flow).material(),
            SectionDecl::output("CL", 2, SectionKind::Level),
        ]
    }

    fn build(&self, _: &Settings<'_>) -> Result<Box<dyn Mechanism>, String> {
        Ok(Box::new(Sink::default()))
    }
}

impl Mechanism for Sink {
    fn service(&mut self, ports: &mut Ports<'_>) -> Result<(), ServiceError> {
        self.received += ports.take(0);
        ports.emit(1, self.received);
        Ok(())
    }

    fn material_held(&self) -> f64 {
        self.received
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::ServiceEntry;

    #[test]
    fn heating_config_builds() {
        let cfg = parse_config(HEATING_CFG).unwrap();
        assert_eq!(cfg.objects.len(), 13);
        let engine = build(&cfg).unwrap();
        let objects: Vec<&str> = engine
            .service_order()
            .iter()
            .filter_map(|e| match e {
                ServiceEntry::Object(id) => Some(engine.object_name(*id)),
                ServiceEntry::Connection(_) => None,
            })
            .collect();
        assert_eq!(
            objects,
            [
                "mGstB1", "mGstA1", "sSepA1", "mMux2", "mPassA3", "sSrcA1", "mFinA5", "mPassA7",
                "sink1", "sSrcP1", "mTmprA1", "mCmpA1", "mFinA11"
            ]
        );
        let feedback: Vec<String> = delayed_connections(&engine)
            .into_iter()
            .map(|c| {
                let c = &engine.connections()[c.0 as usize];
                format!(
                    "{} -> {}",
                    engine.section_label(c.from),
                    engine.section_label(c.to)
                )
            })
            .collect();
        assert_eq!(
            feedback,
            ["mCmpA1.OUT -> sSrcP1.ZOF", "mTmprA1.PT -> sSepA1.RT"]
        );
        let roles = Roles::detect(&engine);
        assert!(roles.source.is_some() && roles.sink.is_some() && roles.consumer.is_some());
    }

    #[test]
    fn literal_config_differs_only_in_mode() {
        let a = parse_config(HEATING_CFG).unwrap();
        let mut b = parse_config(HEATING_LITERAL_CFG).unwrap();
        assert_ne!(a.run.thermal_mode, b.run.thermal_mode);
        b.run.thermal_mode = a.run.thermal_mode;
        b.run.trace = a.run.trace.clone();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_file_is_rejected() {
        assert_eq!(
            parse_config("").unwrap_err().to_string(),
            "no [objects] section"
        );
    }

    #[test]
    fn two_impulse_writers_need_a_mux() {
        let text = HEATING_CFG
            .replace("mGstB1.OUT   -> mMux2.IN1", "mGstB1.OUT   -> mPassA3.IN")
            .replace("sSepA1.UTP   -> mMux2.IN2", "sSepA1.UTP   -> mPassA3.IN")
            .replace("mMux2.OUT    -> mPassA3.IN\n", "");
        assert_ne!(text, HEATING_CFG);
        let err = parse_config(&text).unwrap_err();
        assert!(err.line.is_some());
        assert!(err.message.contains("mux"), "{err}");
    }

    #[test]
    fn unknown_names_report_lines() {
        let err =
            parse_config("[objects]\na = mGstB\n\n[connections]\na.OUT -> b.IN\n").unwrap_err();
        assert_eq!(err.line, Some(5));
        let err = parse_config("[objects]\na = nope\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = parse_config("[objects]\na = mGstA PERIOD=0\n").unwrap_err();
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn unstable_tank_is_classified() {
        let text = HEATING_CFG.replace("ETA=0.01", "ETA=500");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.class, ErrorClass::Unstable);
        let err = parse_config(&HEATING_CFG.replace("ETA=0.01", "ETA=-1")).unwrap_err();
        assert_eq!(err.class, ErrorClass::Invalid);
    }

    #[test]
    fn overrides_are_limited_to_settings() {
        let mut cfg = parse_config(HEATING_CFG).unwrap();
        override_setting(&mut cfg, "mPassA7.NUM", 60.0).unwrap();
        assert_eq!(cfg.object("mPassA7").unwrap().get("NUM"), Some(60.0));
        assert!(override_setting(&mut cfg, "mCmpA1.IN1", 40.0).is_err());
        override_initial(&mut cfg, "mCmpA1.IN1", 40.0).unwrap();
        assert!(override_setting(&mut cfg, "mTmprA1.TMP", 1.0).is_err());
        assert!(override_initial(&mut cfg, "mTmprA1.TMP", 1.0).is_err());
        assert!(override_setting(&mut cfg, "nobody.NUM", 1.0).is_err());
        assert!(override_setting(&mut cfg, "mPassA7.NOPE", 1.0).is_err());
    }

    #[test]
    fn mux_merges_simultaneous_impulses() {
        let cfg = parse_syntax(
            "[objects]\nb = mGstB\nm = mux N=3\nf = mFinA\n[connections]\nb.OUT -> m.IN1\nb.OUT -> m.IN3\n",
        )
        .unwrap();
        let mut engine = build(&cfg).unwrap();
        engine.step().unwrap();
        let outs: Vec<_> = engine
            .trace()
            .iter()
            .filter(|r| engine.object_name(r.object) == "m")
            .map(|r| (r.tick, r.section.to_string(), r.value))
            .collect();
        assert_eq!(outs, [(0, "OUT".to_string(), 1.0)]);
    }

    #[test]
    fn heating_plant_runs_without_fault() {
        let cfg = parse_config(HEATING_CFG).unwrap();
        let mut engine = build(&cfg).unwrap();
        let stop = engine.run(cfg.run.max_ticks).unwrap();
        let source = Roles::detect(&engine).source.unwrap();
        assert_eq!(stop, crate::kernel::StopReason::Requested(source));
    }
}
