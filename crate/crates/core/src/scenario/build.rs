use std::collections::HashMap;
use std::sync::Arc;

use crate::kernel::{
    Catalog, ConnectionId, Engine, ObjectId, ObjectSpec, SectionKind, SectionRef, ServiceEntry,
};
use crate::mechanisms::thermal_params;
use crate::thermal::ThermalError;

use super::config::{ConfigError, ErrorClass, OrderItem, ScenarioConfig};
use super::standard_catalog;

pub fn build(cfg: &ScenarioConfig) -> Result<Engine, ConfigError> {
    build_with(cfg, standard_catalog())
}

pub fn build_with(cfg: &ScenarioConfig, catalog: Arc<Catalog>) -> Result<Engine, ConfigError> {
    let mut engine = Engine::new(Arc::clone(&catalog));

    for o in &cfg.objects {
        let mut spec = ObjectSpec {
            name: o.name.clone(),
            kind: o.kind.clone(),
            settings: o.settings.clone(),
        };
        if o.kind == "mTmprA" {
            if o.get("MODE").is_none() {
                spec.settings
                    .push(("MODE".into(), cfg.run.thermal_mode.code()));
            }
            check_stability(&catalog, &spec).map_err(|message| ConfigError {
                line: Some(o.line),
                message: format!("object `{}`: {message}", o.name),
                class: ErrorClass::Unstable,
            })?;
        }
        engine
            .register_object(&spec)
            .map_err(|e| ConfigError::at(o.line, e.to_string()))?;
    }

    let mut impulse_writers: HashMap<SectionRef, usize> = HashMap::new();
    for c in &cfg.connections {
        let at = |e: crate::kernel::KernelError| ConfigError::at(c.line, e.to_string());
        let from = engine
            .section_ref(&c.from.object, &c.from.section)
            .map_err(at)?;
        let to = engine
            .section_ref(&c.to.object, &c.to.section)
            .map_err(at)?;
        if engine.decl(to).kind == SectionKind::Impulse {
            if let Some(prev) = impulse_writers.insert(to, c.line) {
                return Err(ConfigError::at(
                    c.line,
                    format!(
                        "`{}` is already written by the connection on line {prev}; \
                         merge impulse sources through a mux",
                        c.to
                    ),
                ));
            }
        }
        engine.connect(from, to).map_err(at)?;
    }

    match &cfg.run.service_order {
        Some(items) => {
            let order = explicit_order(&engine, items)?;
            engine
                .set_service_order(order)
                .map_err(|e| ConfigError::general(e.to_string()))?;
        }
        None => {
            let order = plan_order(&engine);
            engine
                .set_service_order(order)
                .expect("planned order is total");
        }
    }
    for c in delayed_connections(&engine) {
        let conn = &engine.connections()[c.0 as usize];
        let msg = format!(
            "{} -> {} is read one tick late (feedback)",
            engine.section_label(conn.from),
            engine.section_label(conn.to)
        );
        engine.note("FEEDBACK", msg);
    }
    Ok(engine)
}

/// Only the step-size guard is classified here; other bad values are left
/// to the kind's own validation.
fn check_stability(catalog: &Catalog, spec: &ObjectSpec) -> Result<(), String> {
    let Some(kind) = catalog.get(&spec.kind) else {
        return Ok(());
    };
    let decls = kind.sections(spec);
    let get = |name: &str| {
        spec.get(name)
            .or_else(|| {
                decls
                    .iter()
                    .find(|d| &*d.name == name)
                    .and_then(|d| d.default)
            })
            .unwrap_or(f64::NAN)
    };
    let Ok(params) = thermal_params(get) else {
        return Ok(());
    };
    match params.validate() {
        Err(e @ ThermalError::Unstable(_)) => Err(e.to_string()),
        _ => Ok(()),
    }
}

fn explicit_order(engine: &Engine, items: &[OrderItem]) -> Result<Vec<ServiceEntry>, ConfigError> {
    let n_conn = engine.connections().len();
    let mut order = Vec::new();
    for item in items {
        order.push(match item {
            OrderItem::Object(name) => {
                ServiceEntry::Object(engine.object_id(name).ok_or_else(|| {
                    ConfigError::general(format!("service_order: unknown object `{name}`"))
                })?)
            }
            OrderItem::Connection(i) if *i < n_conn => {
                ServiceEntry::Connection(ConnectionId(*i as u32))
            }
            OrderItem::Connection(i) => {
                return Err(ConfigError::general(format!(
                    "service_order: `@{i}` but only {n_conn} connections"
                )))
            }
        });
    }
    if !items.iter().any(|i| matches!(i, OrderItem::Connection(_))) {
        order = with_connections_after_sources(
            engine,
            order.into_iter().filter_map(|e| match e {
                ServiceEntry::Object(id) => Some(id),
                ServiceEntry::Connection(_) => None,
            }),
        );
    }
    Ok(order)
}

fn with_connections_after_sources(
    engine: &Engine,
    objects: impl IntoIterator<Item = ObjectId>,
) -> Vec<ServiceEntry> {
    let mut order = Vec::new();
    for id in objects {
        order.push(ServiceEntry::Object(id));
        order.extend(
            engine
                .connections()
                .iter()
                .filter(|c| c.from.object == id)
                .map(|c| ServiceEntry::Connection(c.id)),
        );
    }
    order
}

/// Topological order of the object graph. Ties go to the object declared
/// first; on a cycle the earliest-declared unplaced object is forced, which
/// delays the edges that close the cycle by one tick. Each connection is
/// serviced right after its source.
pub fn plan_order(engine: &Engine) -> Vec<ServiceEntry> {
    let n = engine.object_ids().count();
    let mut indegree = vec![0usize; n];
    for c in engine.connections() {
        if c.from.object != c.to.object {
            indegree[c.to.object.0 as usize] += 1;
        }
    }
    let mut placed = vec![false; n];
    let mut objects = Vec::with_capacity(n);
    for _ in 0..n {
        let next = (0..n)
            .find(|&i| !placed[i] && indegree[i] == 0)
            .or_else(|| (0..n).find(|&i| !placed[i]))
            .expect("an unplaced object remains");
        placed[next] = true;
        objects.push(ObjectId(next as u32));
        for c in engine.connections() {
            if c.from.object.0 as usize == next && c.to.object != c.from.object {
                let t = c.to.object.0 as usize;
                indegree[t] = indegree[t].saturating_sub(1);
            }
        }
    }
    with_connections_after_sources(engine, objects)
}

/// Connections whose target is serviced before them within a tick, so the
/// value is read on the following tick.
pub fn delayed_connections(engine: &Engine) -> Vec<ConnectionId> {
    let order = engine.service_order();
    let pos = |e: ServiceEntry| order.iter().position(|x| *x == e).expect("total order");
    engine
        .connections()
        .iter()
        .filter(|c| pos(ServiceEntry::Object(c.to.object)) < pos(ServiceEntry::Connection(c.id)))
        .map(|c| c.id)
        .collect()
}
