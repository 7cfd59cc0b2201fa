//! Lumped heating/cooling update for a tank holding a liquid load.
//!
//! The recurrence is `T_c = T_{c-1} + dT_g - dT_d`. Two variants of the
//! growth and decay terms are available:
//!
//! * [`ThermalMode::Literal`]: `dT_g = (P·dt + T_E) / (c_v·m_v + c_w·m_w)`
//!   and `dT_d = η·s·(T_c − T_E)·dt / (c_v·m_v·d_v)`.
//! * [`ThermalMode::Corrected`] (default): `dT_g = P·dt / C` and
//!   `dT_d = (η·s·(T_c − T_E) / d_v)·dt / C` with `C = c_v·m_v + c_w·m_w`.
//!
//! The literal variant adds a temperature to an energy, so it heats an idle
//! tank; it is kept as written for comparison.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ThermalMode {
    #[default]
    Corrected,
    Literal,
}

impl ThermalMode {
    /// Encoding used by the `MODE` setting of the heater.
    pub fn code(self) -> f64 {
        match self {
            ThermalMode::Corrected => 0.0,
            ThermalMode::Literal => 1.0,
        }
    }

    pub fn from_code(code: f64) -> Option<Self> {
        if code == 0.0 {
            Some(ThermalMode::Corrected)
        } else if code == 1.0 {
            Some(ThermalMode::Literal)
        } else {
            None
        }
    }
}

impl fmt::Display for ThermalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThermalMode::Corrected => "corrected",
            ThermalMode::Literal => "literal",
        })
    }
}

impl FromStr for ThermalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "corrected" => Ok(ThermalMode::Corrected),
            "literal" => Ok(ThermalMode::Literal),
            other => Err(format!(
                "unknown thermal mode `{other}` (expected `corrected` or `literal`)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalParams {
    /// Ambient temperature, °C.
    pub ambient: f64,
    /// Tank specific heat capacity, J/(kg·°C).
    pub vessel_heat_capacity: f64,
    /// Liquid specific heat capacity, J/(kg·°C).
    pub liquid_heat_capacity: f64,
    /// Tank mass, kg.
    pub vessel_mass: f64,
    /// Wall heat conduction coefficient.
    pub conduction: f64,
    /// Wall area, m².
    pub wall_area: f64,
    /// Wall thickness, m.
    pub wall_thickness: f64,
    /// Step duration in ticks.
    pub dt: f64,
    pub mode: ThermalMode,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalState {
    pub temperature: f64,
    pub liquid_mass: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermalError {
    #[error("thermal parameter `{0}` must be finite and positive")]
    NonPositive(&'static str),
    #[error("ambient temperature must be finite")]
    Ambient,
    #[error(
        "unstable cooling step: coefficient per tick {0:.6} >= 1 (reduce conduction or area, \
         or increase wall thickness or tank heat capacity)"
    )]
    Unstable(f64),
    #[error("non-finite temperature after step (from {from}, power {power})")]
    NonFinite { from: f64, power: f64 },
}

impl Default for ThermalParams {
    fn default() -> Self {
        ThermalParams {
            ambient: 20.0,
            vessel_heat_capacity: 500.0,
            liquid_heat_capacity: 4186.0,
            vessel_mass: 2.0,
            conduction: 0.01,
            wall_area: 0.5,
            wall_thickness: 0.01,
            dt: 1.0,
            mode: ThermalMode::Corrected,
        }
    }
}

impl ThermalParams {
    pub fn validate(&self) -> Result<(), ThermalError> {
        if !self.ambient.is_finite() {
            return Err(ThermalError::Ambient);
        }
        for (name, v) in [
            ("c_v", self.vessel_heat_capacity),
            ("c_w", self.liquid_heat_capacity),
            ("m_v", self.vessel_mass),
            ("eta", self.conduction),
            ("s", self.wall_area),
            ("d_v", self.wall_thickness),
            ("dt", self.dt),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ThermalError::NonPositive(name));
            }
        }
        let k = self.cooling_coefficient();
        if k >= 1.0 {
            return Err(ThermalError::Unstable(k));
        }
        Ok(())
    }

    /// Worst-case fraction of the excess temperature lost per step. Both
    /// modes reduce to `η·s·dt / (d_v·c_v·m_v)` as the load goes to zero.
    pub fn cooling_coefficient(&self) -> f64 {
        self.conduction * self.wall_area * self.dt
            / (self.wall_thickness * self.vessel_heat_capacity * self.vessel_mass)
    }

    pub fn heat_capacity(&self, liquid_mass: f64) -> f64 {
        self.vessel_heat_capacity * self.vessel_mass + self.liquid_heat_capacity * liquid_mass
    }

    /// Temperature gain for one step at `power`.
    pub fn growth(&self, liquid_mass: f64, power: f64) -> f64 {
        let c = self.heat_capacity(liquid_mass);
        match self.mode {
            ThermalMode::Literal => (power * self.dt + self.ambient) / c,
            ThermalMode::Corrected => power * self.dt / c,
        }
    }

    /// Temperature loss for one step at `temperature`.
    pub fn decay(&self, temperature: f64, liquid_mass: f64) -> f64 {
        let excess = temperature - self.ambient;
        match self.mode {
            ThermalMode::Literal => {
                self.conduction * self.wall_area * excess * self.dt
                    / (self.vessel_heat_capacity * self.vessel_mass * self.wall_thickness)
            }
            ThermalMode::Corrected => {
                (self.conduction * self.wall_area * excess / self.wall_thickness) * self.dt
                    / self.heat_capacity(liquid_mass)
            }
        }
    }
}

/// One explicit step of the heating recurrence. An empty tank is left
/// untouched.
pub fn thermal_step(
    state: ThermalState,
    params: &ThermalParams,
    power: f64,
) -> Result<ThermalState, ThermalError> {
    if state.liquid_mass <= 0.0 {
        return Ok(state);
    }
    let next = state.temperature + params.growth(state.liquid_mass, power)
        - params.decay(state.temperature, state.liquid_mass);
    if !next.is_finite() {
        return Err(ThermalError::NonFinite {
            from: state.temperature,
            power,
        });
    }
    Ok(ThermalState {
        temperature: next,
        liquid_mass: state.liquid_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn literal() -> ThermalParams {
        ThermalParams {
            mode: ThermalMode::Literal,
            ..Default::default()
        }
    }

    #[test]
    fn corrected_equilibrium_at_ambient() {
        let p = ThermalParams::default();
        let s = ThermalState {
            temperature: 20.0,
            liquid_mass: 1.0,
        };
        assert_eq!(thermal_step(s, &p, 0.0).unwrap(), s);
    }

    #[test]
    fn literal_growth_hand_evaluated() {
        // c_v·m_v + c_w·m_w = 400 with c_v·m_v = 200.
        let p = ThermalParams {
            vessel_heat_capacity: 100.0,
            vessel_mass: 2.0,
            liquid_heat_capacity: 200.0,
            ..literal()
        };
        let s = ThermalState {
            temperature: 20.0,
            liquid_mass: 1.0,
        };
        let next = thermal_step(s, &p, 100.0).unwrap();
        assert!((next.temperature - 20.3).abs() < 1e-12);
    }

    #[test]
    fn literal_decay_hand_evaluated() {
        // η=2, s=1, d_v=0.01, c_v·m_v=400: dT_d = 2·1·30/(400·0.01) = 15.
        // dT_g = 20/(400 + 400·1) = 0.025 with c_w·m_w = 400.
        let p = ThermalParams {
            conduction: 2.0,
            wall_area: 1.0,
            wall_thickness: 0.01,
            vessel_heat_capacity: 200.0,
            vessel_mass: 2.0,
            liquid_heat_capacity: 400.0,
            ..literal()
        };
        assert!((p.decay(50.0, 1.0) - 15.0).abs() < 1e-12);
        let next = thermal_step(
            ThermalState {
                temperature: 50.0,
                liquid_mass: 1.0,
            },
            &p,
            0.0,
        )
        .unwrap();
        assert!((next.temperature - (35.0 + 0.025)).abs() < 1e-12);
    }

    #[test]
    fn empty_tank_skips_update() {
        let s = ThermalState {
            temperature: 44.0,
            liquid_mass: 0.0,
        };
        assert_eq!(thermal_step(s, &literal(), 500.0).unwrap(), s);
    }

    #[test]
    fn stability_guard() {
        let unstable = ThermalParams {
            conduction: 2.0,
            wall_area: 1.0,
            wall_thickness: 0.001,
            ..Default::default()
        };
        assert!(matches!(
            unstable.validate(),
            Err(ThermalError::Unstable(_))
        ));
        assert!(ThermalParams::default().validate().is_ok());
        let bad = ThermalParams {
            wall_area: 0.0,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(ThermalError::NonPositive("s")));
    }

    #[test]
    fn non_finite_power_aborts() {
        let s = ThermalState {
            temperature: 20.0,
            liquid_mass: 1.0,
        };
        assert!(matches!(
            thermal_step(s, &ThermalParams::default(), f64::INFINITY),
            Err(ThermalError::NonFinite { .. })
        ));
    }

    #[test]
    fn mode_codes_round_trip() {
        for m in [ThermalMode::Corrected, ThermalMode::Literal] {
            assert_eq!(ThermalMode::from_code(m.code()), Some(m));
            assert_eq!(m.to_string().parse::<ThermalMode>().unwrap(), m);
        }
        assert!(ThermalMode::from_code(0.5).is_none());
    }

    fn arb_params() -> impl Strategy<Value = ThermalParams> {
        (
            -10.0f64..40.0,
            100.0f64..1000.0,
            1000.0f64..5000.0,
            0.5f64..5.0,
            0.001f64..1.0,
            0.1f64..1.0,
            0.005f64..0.05,
        )
            .prop_map(|(te, cv, cw, mv, eta, s, dv)| ThermalParams {
                ambient: te,
                vessel_heat_capacity: cv,
                liquid_heat_capacity: cw,
                vessel_mass: mv,
                conduction: eta,
                wall_area: s,
                wall_thickness: dv,
                dt: 1.0,
                mode: ThermalMode::Corrected,
            })
            .prop_filter("stable", |p| p.validate().is_ok())
    }

    proptest! {
        #[test]
        fn corrected_heats_when_power_exceeds_losses(
            p in arb_params(), m in 0.1f64..3.0, excess in 0.0f64..60.0, margin in 0.1f64..500.0,
        ) {
            let t = p.ambient + excess;
            let loss = p.conduction * p.wall_area * excess / p.wall_thickness;
            let next = thermal_step(ThermalState { temperature: t, liquid_mass: m }, &p, loss + margin).unwrap();
            prop_assert!(next.temperature > t);
        }

        #[test]
        fn corrected_decay_monotone_without_overshoot(
            p in arb_params(), m in 0.1f64..3.0, excess in -40.0f64..60.0,
        ) {
            prop_assume!(excess.abs() > 1e-6);
            let mut s = ThermalState { temperature: p.ambient + excess, liquid_mass: m };
            for _ in 0..50 {
                let next = thermal_step(s, &p, 0.0).unwrap();
                let (before, after) = (s.temperature - p.ambient, next.temperature - p.ambient);
                prop_assert!(after.abs() < before.abs());
                prop_assert!(after.signum() == before.signum());
                s = next;
            }
        }

        #[test]
        fn more_liquid_heats_slower(p in arb_params(), m in 0.1f64..3.0, dm in 0.01f64..2.0, power in 50.0f64..500.0) {
            for mode in [ThermalMode::Corrected, ThermalMode::Literal] {
                let p = ThermalParams { mode, ..p };
                prop_assert!(p.growth(m + dm, power) < p.growth(m, power));
            }
        }
    }
}
