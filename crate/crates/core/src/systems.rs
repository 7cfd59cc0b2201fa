//! Product-handling systems: the `sSepA` buffer, the finite `sSrcA` source
//! and the unlimited `sSrcP` energy source.

use crate::kernel::{
    Mechanism, MechanismKind, ObjectSpec, Ports, SectionDecl, SectionKind, ServiceError, Settings,
    QTY_EPS,
};
use crate::mechanisms::{non_negative, positive};

use SectionKind::{Flow, Impulse, Level};

/// Releases up to `rate` from `stock` against `pending` demand, snapping
/// sub-epsilon residues to zero. Returns the released amount.
fn release(stock: &mut f64, pending: &mut f64, rate: f64) -> f64 {
    let mut out = rate.min(*pending).min(*stock);
    if out <= 0.0 {
        return 0.0;
    }
    if *stock - out < QTY_EPS {
        out = *stock;
    }
    *stock = if out == *stock { 0.0 } else { *stock - out };
    *pending -= out;
    if *pending < QTY_EPS {
        *pending = 0.0;
    }
    out
}

// ---------------------------------------------------------------------------
// sSepA

pub mod sep {
    pub const SL: usize = 0;
    pub const LL: usize = 1;
    pub const HL: usize = 2;
    pub const INT: usize = 3;
    pub const CL: usize = 4;
    pub const RT: usize = 5;
    pub const UTP: usize = 6;
    pub const ZT: usize = 7;
    pub const PT: usize = 8;
}

/// Buffering system with restock hysteresis.
///
/// A unit `UTP` request goes out when the stock drops under `LL` and no
/// request is outstanding; the request is considered served when a nonzero
/// inflow run on `RT` ends. Inflow above `HL` is clipped and logged.
pub struct SepA {
    lower: f64,
    upper: f64,
    rate: f64,
    stock: f64,
    pending: f64,
    outstanding: bool,
    inflow_seen: bool,
    overflow: f64,
}

impl SepA {
    pub fn pending(&self) -> f64 {
        self.pending
    }

    pub fn overflow(&self) -> f64 {
        self.overflow
    }
}

pub struct SepAKind;

impl MechanismKind for SepAKind {
    fn name(&self) -> &'static str {
        "sSepA"
    }

    fn sections(&self, _: &ObjectSpec) -> Vec<SectionDecl> {
        vec![
            SectionDecl::setting("SL", 1, 0.0),
            SectionDecl::setting("LL", 2, 1.2),
            SectionDecl::setting("HL", 3, 2.0),
            SectionDecl::setting("INT", 4, 0.01),
            SectionDecl::output("CL", 5, Level),
            SectionDecl::input("RT", 6, Flow).material(),
            SectionDecl::output("UTP", 7, Impulse),
            SectionDecl::input("ZT", 8, Impulse),
            SectionDecl::output("PT", 9, Flow).material(),
        ]
    }

    fn build(&self, s: &Settings<'_>) -> Result<Box<dyn Mechanism>, String> {
        let initial = non_negative(s, "SL")?;
        let lower = non_negative(s, "LL")?;
        let upper = positive(s, "HL")?;
        let rate = positive(s, "INT")?;
        if lower > upper {
            return Err(format!("LL ({lower}) must not exceed HL ({upper})"));
        }
        if initial > upper {
            return Err(format!("SL ({initial}) must not exceed HL ({upper})"));
        }
        Ok(Box::new(SepA {
            lower,
            upper,
            rate,
            stock: initial,
            pending: 0.0,
            outstanding: false,
            inflow_seen: false,
            overflow: 0.0,
        }))
    }
}

impl Mechanism for SepA {
    fn service(&mut self, ports: &mut Ports<'_>) -> Result<(), ServiceError> {
        let inflow = ports.take(sep::RT);
        if inflow != 0.0 {
            self.inflow_seen = true;
            if inflow > 0.0 {
                self.stock += inflow;
                if self.stock > self.upper {
                    let excess = self.stock - self.upper;
                    self.stock = self.upper;
                    self.overflow += excess;
                    ports.warn(
                        "OVERFLOW",
                        excess,
                        format!("stock above HL={}, clipped {excess}", self.upper),
                    );
                }
            } else {
                ports.warn("NEGATIVE_INFLOW", inflow, "negative inflow ignored");
            }
        } else if self.inflow_seen {
            self.inflow_seen = false;
            self.outstanding = false;
        }

        let demand = ports.take(sep::ZT);
        if demand > 0.0 {
            self.pending += demand;
        } else if demand < 0.0 {
            ports.warn(
                "NEGATIVE_DEMAND",
                demand,
                "negative release assignment ignored",
            );
        }

        let out = release(&mut self.stock, &mut self.pending, self.rate);
        if out > 0.0 {
            ports.emit(sep::PT, out);
        } else if self.pending > 0.0 {
            ports.warn("STARVED", self.pending, "release pending with empty stock");
        }

        if self.stock < self.lower - QTY_EPS && !self.outstanding {
            self.outstanding = true;
            ports.emit(sep::UTP, 1.0);
        }

        ports.emit(sep::CL, self.stock);
        Ok(())
    }

    fn material_held(&self) -> f64 {
        self.stock
    }

    fn material_discarded(&self) -> f64 {
        self.overflow
    }
}

// ---------------------------------------------------------------------------
// sSrcA

pub mod src_a {
    pub const SL: usize = 0;
    pub const INT: usize = 1;
    pub const STP: usize = 2;
    pub const ZT: usize = 3;
    pub const PT: usize = 4;
    pub const CL: usize = 5;
}

/// Finite source. With `STP = 1` the run stops as soon as a release is
/// demanded while the stock is exhausted.
pub struct SrcA {
    rate: f64,
    stop_on_empty: bool,
    stock: f64,
    pending: f64,
}

pub struct SrcAKind;

impl MechanismKind for SrcAKind {
    fn name(&self) -> &'static str {
        "sSrcA"
    }

    fn sections(&self, _: &ObjectSpec) -> Vec<SectionDecl> {
        vec![
            SectionDecl::setting("SL", 1, 30.0),
            SectionDecl::setting("INT", 2, 0.01),
            SectionDecl::setting("STP", 3, 0.0),
            SectionDecl::input("ZT", 4, Impulse),
            SectionDecl::output("PT", 5, Flow).material(),
            SectionDecl::output("CL", 6, Level),
        ]
    }

    fn build(&self, s: &Settings<'_>) -> Result<Box<dyn Mechanism>, String> {
        let stop = s.get("STP");
        if stop != 0.0 && stop != 1.0 {
            return Err(format!("STP must be 0 or 1, got {stop}"));
        }
        Ok(Box::new(SrcA {
            rate: positive(s, "INT")?,
            stop_on_empty: stop == 1.0,
            stock: non_negative(s, "SL")?,
            pending: 0.0,
        }))
    }
}

impl Mechanism for SrcA {
    fn service(&mut self, ports: &mut Ports<'_>) -> Result<(), ServiceError> {
        let demand = ports.take(src_a::ZT);
        if demand > 0.0 {
            self.pending += demand;
        } else if demand < 0.0 {
            ports.warn(
                "NEGATIVE_DEMAND",
                demand,
                "negative release assignment ignored",
            );
        }
        let out = release(&mut self.stock, &mut self.pending, self.rate);
        ports.emit(src_a::PT, out);
        ports.emit(src_a::CL, self.stock);
        if self.stop_on_empty && self.stock == 0.0 && self.pending > 0.0 {
            ports.request_stop();
        }
        Ok(())
    }

    fn material_held(&self) -> f64 {
        self.stock
    }
}

// ---------------------------------------------------------------------------
// sSrcP

pub mod src_p {
    pub const ZP: usize = 0;
    pub const ZOF: usize = 1;
    pub const PP: usize = 2;
}

/// Unlimited energy source. `ZP` starts a feed at the impulse amplitude,
/// `ZOF` stops it; a stop arriving with a start in the same tick wins.
#[derive(Default)]
pub struct SrcP {
    active: Option<f64>,
    delivered: f64,
}

impl SrcP {
    pub fn delivered(&self) -> f64 {
        self.delivered
    }
}

pub struct SrcPKind;

impl MechanismKind for SrcPKind {
    fn name(&self) -> &'static str {
        "sSrcP"
    }

    fn sections(&self, _: &ObjectSpec) -> Vec<SectionDecl> {
        vec![
            SectionDecl::input("ZP", 1, Impulse),
            SectionDecl::input("ZOF", 2, Impulse),
            SectionDecl::output("PP", 3, Flow).energy(),
        ]
    }

    fn build(&self, _: &Settings<'_>) -> Result<Box<dyn Mechanism>, String> {
        Ok(Box::new(SrcP::default()))
    }
}

impl Mechanism for SrcP {
    fn service(&mut self, ports: &mut Ports<'_>) -> Result<(), ServiceError> {
        let start = ports.take(src_p::ZP);
        let stop = ports.take(src_p::ZOF);
        if start > 0.0 {
            if let Some(prev) = self.active {
                ports.warn(
                    "ZP_OVERWRITE",
                    start,
                    format!("feed intensity {prev} replaced by {start}"),
                );
            }
            self.active = Some(start);
        } else if start < 0.0 {
            ports.warn("ZP_IGNORED", start, "non-positive feed intensity ignored");
        }
        if stop != 0.0 {
            self.active = None;
        }
        if let Some(a) = self.active {
            self.delivered += a;
            ports.emit(src_p::PP, a);
        }
        Ok(())
    }
}
