//! Fixed-function mechanisms of the conversion system: heating (`mTmprA`),
//! synchronization (`mPassA`, `mPassB`), flow-termination registration
//! (`mFinA`), comparison (`mCmpA`) and signal generation (`mGstA`, `mGstB`).

use crate::kernel::{
    Mechanism, MechanismKind, ObjectSpec, Ports, SectionDecl, SectionKind, ServiceError, Settings,
    QTY_EPS,
};
use crate::thermal::{thermal_step, ThermalMode, ThermalParams, ThermalState};

use SectionKind::{Flow, Impulse, Level};

// ---------------------------------------------------------------------------
// mTmprA

/// Batch heating tank.
///
/// Liquid arriving on `RT` mixes with the load at ambient temperature,
/// energy arriving on `RP` heats it, and once an energy feed run ends the
/// load is released on `PT` at `INT` per tick until the tank is empty.
pub struct TmprA {
    release_rate: f64,
    params: ThermalParams,
    state: ThermalState,
    energy_seen: bool,
    discharging: bool,
}

pub struct TmprAKind;

pub mod tmpr {
    pub const INT: usize = 0;
    pub const TE: usize = 1;
    pub const RT: usize = 2;
    pub const RP: usize = 3;
    pub const PT: usize = 4;
    pub const TMP: usize = 5;
    pub const CL: usize = 6;
}

impl MechanismKind for TmprAKind {
    fn name(&self) -> &'static str {
        "mTmprA"
    }

    fn sections(&self, _: &ObjectSpec) -> Vec<SectionDecl> {
        let d = ThermalParams::default();
        vec![
            SectionDecl::setting("INT", 1, 0.01),
            SectionDecl::setting("TE", 2, d.ambient),
            SectionDecl::input("RT", 3, Flow).material(),
            SectionDecl::input("RP", 4, Flow).energy(),
            SectionDecl::output("PT", 5, Flow).material(),
            SectionDecl::output("TMP", 6, Level),
            SectionDecl::output("CL", 7, Level),
            SectionDecl::setting("CV", 8, d.vessel_heat_capacity),
            SectionDecl::setting("CW", 9, d.liquid_heat_capacity),
            SectionDecl::setting("MV", 10, d.vessel_mass),
            SectionDecl::setting("ETA", 11, d.conduction),
            SectionDecl::setting("S", 12, d.wall_area),
            SectionDecl::setting("DV", 13, d.wall_thickness),
            SectionDecl::setting("MODE", 14, ThermalMode::Corrected.code()),
        ]
    }

    fn build(&self, s: &Settings<'_>) -> Result<Box<dyn Mechanism>, String> {
        let params = thermal_params(|name| s.get(name))?;
        params.validate().map_err(|e| e.to_string())?;
        let release_rate = positive(s, "INT")?;
        Ok(Box::new(TmprA {
            release_rate,
            params,
            state: ThermalState {
                temperature: params.ambient,
                liquid_mass: 0.0,
            },
            energy_seen: false,
            discharging: false,
        }))
    }
}

/// Reads tank parameters from `mTmprA` section values. Not validated.
pub fn thermal_params(get: impl Fn(&str) -> f64) -> Result<ThermalParams, String> {
    let mode =
        ThermalMode::from_code(get("MODE")).ok_or("MODE must be 0 (corrected) or 1 (literal)")?;
    Ok(ThermalParams {
        ambient: get("TE"),
        vessel_heat_capacity: get("CV"),
        liquid_heat_capacity: get("CW"),
        vessel_mass: get("MV"),
        conduction: get("ETA"),
        wall_area: get("S"),
        wall_thickness: get("DV"),
        dt: 1.0,
        mode,
    })
}

impl TmprA {
    pub fn temperature(&self) -> f64 {
        self.state.temperature
    }
}

impl Mechanism for TmprA {
    fn service(&mut self, ports: &mut Ports<'_>) -> Result<(), ServiceError> {
        let inflow = ports.take(tmpr::RT);
        let energy = ports.take(tmpr::RP);

        if inflow > 0.0 {
            if self.discharging {
                ports.warn(
                    "OVERLAP",
                    inflow,
                    format!("liquid inflow {inflow} while discharging"),
                );
            }
            let m = self.state.liquid_mass;
            self.state.temperature =
                (m * self.state.temperature + inflow * self.params.ambient) / (m + inflow);
            self.state.liquid_mass = m + inflow;
        } else if inflow < 0.0 {
            ports.warn("NEGATIVE_INFLOW", inflow, "negative liquid inflow ignored");
        }

        self.state = thermal_step(self.state, &self.params, energy / self.params.dt)
            .map_err(|e| ServiceError(e.to_string()))?;

        if energy != 0.0 {
            self.energy_seen = true;
        } else if self.energy_seen {
            self.energy_seen = false;
            self.discharging = true;
        }

        if self.discharging {
            let load = self.state.liquid_mass;
            if load > 0.0 {
                let mut out = self.release_rate.min(load);
                if load - out < QTY_EPS {
                    out = load;
                }
                self.state.liquid_mass = if out == load { 0.0 } else { load - out };
                ports.emit(tmpr::PT, out);
            }
            if self.state.liquid_mass == 0.0 {
                self.discharging = false;
            }
        }

        ports.emit(tmpr::TMP, self.state.temperature);
        ports.emit(tmpr::CL, self.state.liquid_mass);
        Ok(())
    }

    fn material_held(&self) -> f64 {
        self.state.liquid_mass
    }
}

// ---------------------------------------------------------------------------
// mPassA / mPassB

/// Passes `NUM` to `OUT` once every coordinating input has been seen.
pub struct Pass {
    payload: f64,
    latches: Vec<bool>,
}

pub struct PassAKind;
pub struct PassBKind;

impl MechanismKind for PassAKind {
    fn name(&self) -> &'static str {
        "mPassA"
    }

    fn sections(&self, _: &ObjectSpec) -> Vec<SectionDecl> {
        vec![
            SectionDecl::input("IN", 1, Impulse),
            SectionDecl::setting("NUM", 2, 1.0),
            SectionDecl::output("OUT", 3, Impulse),
        ]
    }

    fn build(&self, s: &Settings<'_>) -> Result<Box<dyn Mechanism>, String> {
        Ok(Box::new(Pass {
            payload: s.get("NUM"),
            latches: vec![false],
        }))
    }
}

impl MechanismKind for PassBKind {
    fn name(&self) -> &'static str {
        "mPassB"
    }

    fn sections(&self, _: &ObjectSpec) -> Vec<SectionDecl> {
        vec![
            SectionDecl::input("IN1", 1, Impulse),
            SectionDecl::input("IN2", 2, Impulse),
            SectionDecl::setting("NUM", 3, 1.0),
            SectionDecl::output("OUT", 4, Impulse),
        ]
    }

    fn build(&self, s: &Settings<'_>) -> Result<Box<dyn Mechanism>, String> {
        Ok(Box::new(Pass {
            payload: s.get("NUM"),
            latches: vec![false, false],
        }))
    }
}

impl Pass {
    pub fn latches(&self) -> &[bool] {
        &self.latches
    }
}

impl Mechanism for Pass {
    fn service(&mut self, ports: &mut Ports<'_>) -> Result<(), ServiceError> {
        // Inputs occupy 0..n except for mPassA where NUM sits between IN and OUT.
        let n = self.latches.len();
        let (inputs, out): (&[usize], usize) = if n == 1 { (&[0], 2) } else { (&[0, 1], 3) };
        for (latch, &idx) in self.latches.iter_mut().zip(inputs) {
            if ports.take(idx) != 0.0 {
                *latch = true;
            }
        }
        if self.latches.iter().all(|&l| l) {
            ports.emit(out, self.payload);
            self.latches.iter_mut().for_each(|l| *l = false);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// mFinA

/// Emits a unit impulse on the first zero-flow tick after a nonzero run.
#[derive(Default)]
pub struct FinA {
    mem: bool,
}

pub struct FinAKind;

impl MechanismKind for FinAKind {
    fn name(&self) -> &'static str {
        "mFinA"
    }

    fn sections(&self, _: &ObjectSpec) -> Vec<SectionDecl> {
        vec![
            SectionDecl::input("IN", 1, Flow),
            SectionDecl::output("OUT", 2, Impulse),
        ]
    }

    fn build(&self, _: &Settings<'_>) -> Result<Box<dyn Mechanism>, String> {
        Ok(Box::new(FinA::default()))
    }
}

impl Mechanism for FinA {
    fn service(&mut self, ports: &mut Ports<'_>) -> Result<(), ServiceError> {
        if ports.take(0) != 0.0 {
            self.mem = true;
        } else if self.mem {
            self.mem = false;
            ports.emit(1, 1.0);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// mCmpA

/// Fires a unit impulse when `IN2` reaches `IN1` from below. Re-arms once
/// `IN2` drops back under `IN1`.
pub struct CmpA {
    armed: bool,
}

pub struct CmpAKind;

impl MechanismKind for CmpAKind {
    fn name(&self) -> &'static str {
        "mCmpA"
    }

    fn sections(&self, _: &ObjectSpec) -> Vec<SectionDecl> {
        vec![
            SectionDecl::input("IN1", 1, Level).with_default(50.0),
            SectionDecl::input("IN2", 2, Level),
            SectionDecl::output("OUT", 3, Impulse),
        ]
    }

    fn build(&self, _: &Settings<'_>) -> Result<Box<dyn Mechanism>, String> {
        Ok(Box::new(CmpA { armed: true }))
    }
}

impl Mechanism for CmpA {
    fn service(&mut self, ports: &mut Ports<'_>) -> Result<(), ServiceError> {
        let (reference, signal) = (ports.take(0), ports.take(1));
        if signal >= reference {
            if self.armed {
                self.armed = false;
                ports.emit(2, 1.0);
            }
        } else {
            self.armed = true;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// mGstB / mGstA

/// Unit impulse on tick 0.
pub struct GstB;

pub struct GstBKind;

impl MechanismKind for GstBKind {
    fn name(&self) -> &'static str {
        "mGstB"
    }

    fn sections(&self, _: &ObjectSpec) -> Vec<SectionDecl> {
        vec![SectionDecl::output("OUT", 1, Impulse)]
    }

    fn build(&self, _: &Settings<'_>) -> Result<Box<dyn Mechanism>, String> {
        Ok(Box::new(GstB))
    }
}

impl Mechanism for GstB {
    fn service(&mut self, ports: &mut Ports<'_>) -> Result<(), ServiceError> {
        if ports.tick() == 0 {
            ports.emit(0, 1.0);
        }
        Ok(())
    }
}

/// Demand generator: `MAG` on every tick that is a positive multiple of
/// `PERIOD`.
pub struct GstA {
    period: u64,
    magnitude: f64,
}

pub struct GstAKind;

impl MechanismKind for GstAKind {
    fn name(&self) -> &'static str {
        "mGstA"
    }

    fn sections(&self, _: &ObjectSpec) -> Vec<SectionDecl> {
        vec![
            SectionDecl::setting("PERIOD", 1, 100.0),
            SectionDecl::setting("MAG", 2, 0.6),
            SectionDecl::output("OUT", 3, Impulse),
        ]
    }

    fn build(&self, s: &Settings<'_>) -> Result<Box<dyn Mechanism>, String> {
        let period = s.get("PERIOD");
        if !(period >= 1.0 && period.fract() == 0.0 && period <= u32::MAX as f64) {
            return Err(format!(
                "PERIOD must be a whole number of ticks >= 1, got {period}"
            ));
        }
        let magnitude = s.get("MAG");
        if !(magnitude >= 0.0 && magnitude.is_finite()) {
            return Err(format!(
                "MAG must be finite and non-negative, got {magnitude}"
            ));
        }
        Ok(Box::new(GstA {
            period: period as u64,
            magnitude,
        }))
    }
}

impl Mechanism for GstA {
    fn service(&mut self, ports: &mut Ports<'_>) -> Result<(), ServiceError> {
        let t = ports.tick();
        if t > 0 && t.is_multiple_of(self.period) {
            ports.emit(2, self.magnitude);
        }
        Ok(())
    }
}

pub(crate) fn positive(s: &Settings<'_>, name: &str) -> Result<f64, String> {
    let v = s.get(name);
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{name} must be finite and positive, got {v}"))
    }
}

pub(crate) fn non_negative(s: &Settings<'_>, name: &str) -> Result<f64, String> {
    let v = s.get(name);
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{name} must be finite and non-negative, got {v}"))
    }
}
