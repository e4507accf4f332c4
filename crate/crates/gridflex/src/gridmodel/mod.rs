//! Physical grid data: cases, validation, MatPower parsing, and synthetic
//! load profiles.

mod parser;
mod profile;

pub use parser::{parse_matpower, parse_matpower_with, ParseOptions};
pub use profile::{generate_profile, LoadProfileSpec};

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Machine-readable reason codes for case validation failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidationCode {
    DuplicateBusId,
    DanglingBusRef,
    NoReferenceBus,
    MultipleReferenceBuses,
    NegativeDemand,
    DemandLengthMismatch,
    BadHorizon,
    BadBaseMva,
    BadSusceptance,
    BadLineCapacity,
    SelfLoop,
    BadRamp,
    NegativeCapacity,
    CapacityLengthMismatch,
    CostLengthMismatch,
    NonPositiveProfile,
    RampOutsideWindow,
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation failed [{code:?}]: {msg}")]
    Invalid { code: ValidationCode, msg: String },
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl CaseError {
    pub(crate) fn invalid(code: ValidationCode, msg: impl Into<String>) -> Self {
        CaseError::Invalid { code, msg: msg.into() }
    }
}

/// A bus (geographical node) with a net-demand trajectory in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    /// Net aggregated demand per time period, MW; always nonnegative.
    pub demand: Vec<f64>,
    pub is_reference: bool,
}

/// A generator offering capacity at its bus with linear marginal cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    /// Available capacity per time period, MW.
    pub p_max: Vec<f64>,
    /// Ramping capacity between consecutive periods, MW/period.
    pub ramp: f64,
    /// Marginal cost per time period, $/MWh.
    pub cost: Vec<f64>,
}

/// A transmission line in the DC power-flow model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    /// Line susceptance, per-unit; strictly positive.
    pub susceptance: f64,
    /// Flow capacity, MW; strictly positive.
    pub f_max: f64,
}

/// The physical system every downstream problem is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    pub base_mva: f64,
    /// Number of time periods T >= 1.
    pub horizon: usize,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub lines: Vec<Line>,
}

impl GridCase {
    /// Checks every type invariant, returning the first violation found.
    pub fn validate(&self) -> Result<(), CaseError> {
        if self.horizon < 1 {
            return Err(CaseError::invalid(ValidationCode::BadHorizon, "horizon must be >= 1"));
        }
        if !(self.base_mva > 0.0) {
            return Err(CaseError::invalid(ValidationCode::BadBaseMva, "base_mva must be > 0"));
        }
        let mut ids = BTreeSet::new();
        let mut n_ref = 0usize;
        for b in &self.buses {
            if !ids.insert(b.id) {
                return Err(CaseError::invalid(
                    ValidationCode::DuplicateBusId,
                    format!("bus id {} appears more than once", b.id),
                ));
            }
            if b.demand.len() != self.horizon {
                return Err(CaseError::invalid(
                    ValidationCode::DemandLengthMismatch,
                    format!("bus {}: demand has {} entries, horizon is {}", b.id, b.demand.len(), self.horizon),
                ));
            }
            if b.demand.iter().any(|&d| d < 0.0 || !d.is_finite()) {
                return Err(CaseError::invalid(
                    ValidationCode::NegativeDemand,
                    format!("bus {}: demand entries must be finite and >= 0", b.id),
                ));
            }
            if b.is_reference {
                n_ref += 1;
            }
        }
        if n_ref == 0 {
            return Err(CaseError::invalid(ValidationCode::NoReferenceBus, "no reference bus"));
        }
        if n_ref > 1 {
            return Err(CaseError::invalid(
                ValidationCode::MultipleReferenceBuses,
                format!("{n_ref} reference buses, expected exactly one"),
            ));
        }
        for g in &self.generators {
            if !ids.contains(&g.bus) {
                return Err(CaseError::invalid(
                    ValidationCode::DanglingBusRef,
                    format!("generator {} references unknown bus {}", g.id, g.bus),
                ));
            }
            if g.p_max.len() != self.horizon {
                return Err(CaseError::invalid(
                    ValidationCode::CapacityLengthMismatch,
                    format!("generator {}: p_max has {} entries, horizon is {}", g.id, g.p_max.len(), self.horizon),
                ));
            }
            if g.cost.len() != self.horizon {
                return Err(CaseError::invalid(
                    ValidationCode::CostLengthMismatch,
                    format!("generator {}: cost has {} entries, horizon is {}", g.id, g.cost.len(), self.horizon),
                ));
            }
            if g.p_max.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(CaseError::invalid(
                    ValidationCode::NegativeCapacity,
                    format!("generator {}: p_max entries must be finite and >= 0", g.id),
                ));
            }
            let cap = g.p_max.iter().cloned().fold(0.0, f64::max);
            if g.ramp < 0.0 || g.ramp > cap || !g.ramp.is_finite() {
                return Err(CaseError::invalid(
                    ValidationCode::BadRamp,
                    format!("generator {}: ramp {} outside [0, {}]", g.id, g.ramp, cap),
                ));
            }
        }
        for l in &self.lines {
            if l.from_bus == l.to_bus {
                return Err(CaseError::invalid(
                    ValidationCode::SelfLoop,
                    format!("line {}: from_bus == to_bus == {}", l.id, l.from_bus),
                ));
            }
            if !ids.contains(&l.from_bus) || !ids.contains(&l.to_bus) {
                return Err(CaseError::invalid(
                    ValidationCode::DanglingBusRef,
                    format!("line {} references unknown bus", l.id),
                ));
            }
            if !(l.susceptance > 0.0) || !l.susceptance.is_finite() {
                return Err(CaseError::invalid(
                    ValidationCode::BadSusceptance,
                    format!("line {}: susceptance must be > 0", l.id),
                ));
            }
            if !(l.f_max > 0.0) || !l.f_max.is_finite() {
                return Err(CaseError::invalid(
                    ValidationCode::BadLineCapacity,
                    format!("line {}: f_max must be > 0", l.id),
                ));
            }
        }
        Ok(())
    }

    /// Total nominal demand over all buses and periods, MW.
    pub fn total_demand(&self) -> f64 {
        self.buses.iter().map(|b| b.demand.iter().sum::<f64>()).sum()
    }

    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Canonical JSON serialization; the native case format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("GridCase serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CaseError> {
        let case: GridCase = serde_json::from_str(text)
            .map_err(|e| CaseError::Parse { line: e.line(), msg: e.to_string() })?;
        case.validate()?;
        Ok(case)
    }

    /// Scales every generator's ramp to `frac` of its peak capacity.
    pub fn with_ramp_fraction(mut self, frac: f64) -> Result<Self, CaseError> {
        if !(0.0..=1.0).contains(&frac) {
            return Err(CaseError::Argument(format!("ramp fraction {frac} outside [0, 1]")));
        }
        for g in &mut self.generators {
            let cap = g.p_max.iter().cloned().fold(0.0, f64::max);
            g.ramp = frac * cap;
        }
        Ok(self)
    }
}

/// Expands a single-period case to `horizon` periods by applying a
/// deterministically generated demand profile at every bus.
///
/// Generator capacity and cost rows are replicated across periods.
pub fn expand_horizon(case: &GridCase, horizon: usize, spec: &LoadProfileSpec) -> Result<GridCase, CaseError> {
    if case.horizon != 1 {
        return Err(CaseError::Argument(format!(
            "expand_horizon requires a single-period case, got horizon {}",
            case.horizon
        )));
    }
    if horizon < 1 {
        return Err(CaseError::Argument("horizon must be >= 1".into()));
    }
    let mut buses = Vec::with_capacity(case.buses.len());
    for b in &case.buses {
        let prof = generate_profile(spec, b.id, horizon)?;
        let base = b.demand[0];
        buses.push(Bus {
            id: b.id,
            demand: prof.iter().map(|&v| base * v).collect(),
            is_reference: b.is_reference,
        });
    }
    let generators = case
        .generators
        .iter()
        .map(|g| Generator {
            id: g.id,
            bus: g.bus,
            p_max: vec![g.p_max[0]; horizon],
            ramp: g.ramp,
            cost: vec![g.cost[0]; horizon],
        })
        .collect();
    let expanded = GridCase {
        base_mva: case.base_mva,
        horizon,
        buses,
        generators,
        lines: case.lines.clone(),
    };
    expanded.validate()?;
    Ok(expanded)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Single bus, one generator twice the size of the load.
    pub(crate) fn one_bus_case() -> GridCase {
        GridCase {
            base_mva: 100.0,
            horizon: 1,
            buses: vec![Bus { id: 1, demand: vec![50.0], is_reference: true }],
            generators: vec![Generator {
                id: 1,
                bus: 1,
                p_max: vec![100.0],
                ramp: 100.0,
                cost: vec![10.0],
            }],
            lines: Vec::new(),
        }
    }

    pub(crate) fn three_bus_case() -> GridCase {
        GridCase {
            base_mva: 100.0,
            horizon: 1,
            buses: vec![
                Bus { id: 1, demand: vec![0.0], is_reference: true },
                Bus { id: 2, demand: vec![50.0], is_reference: false },
                Bus { id: 3, demand: vec![30.0], is_reference: false },
            ],
            generators: vec![Generator {
                id: 1,
                bus: 1,
                p_max: vec![200.0],
                ramp: 200.0,
                cost: vec![10.0],
            }],
            lines: vec![
                Line { id: 1, from_bus: 1, to_bus: 2, susceptance: 10.0, f_max: 100.0 },
                Line { id: 2, from_bus: 2, to_bus: 3, susceptance: 10.0, f_max: 100.0 },
            ],
        }
    }

    /// Star network: generator at bus 1, loads behind separate tight lines.
    pub(crate) fn star_case() -> GridCase {
        GridCase {
            base_mva: 100.0,
            horizon: 1,
            buses: vec![
                Bus { id: 1, demand: vec![0.0], is_reference: true },
                Bus { id: 2, demand: vec![50.0], is_reference: false },
                Bus { id: 3, demand: vec![30.0], is_reference: false },
            ],
            generators: vec![Generator {
                id: 1,
                bus: 1,
                p_max: vec![200.0],
                ramp: 200.0,
                cost: vec![10.0],
            }],
            lines: vec![
                Line { id: 1, from_bus: 1, to_bus: 2, susceptance: 10.0, f_max: 60.0 },
                Line { id: 2, from_bus: 1, to_bus: 3, susceptance: 10.0, f_max: 60.0 },
            ],
        }
    }

    /// Single bus, one ramp-limited generator over two periods.
    pub(crate) fn ramp_case() -> GridCase {
        GridCase {
            base_mva: 100.0,
            horizon: 2,
            buses: vec![Bus { id: 1, demand: vec![50.0, 55.0], is_reference: true }],
            generators: vec![Generator {
                id: 1,
                bus: 1,
                p_max: vec![100.0, 100.0],
                ramp: 10.0,
                cost: vec![10.0, 10.0],
            }],
            lines: Vec::new(),
        }
    }

    /// Two buses joined by one line; a cheap remote generator and an
    /// expensive local one, so tightening the line forces redispatch.
    pub(crate) fn two_bus_case(line_cap: f64) -> GridCase {
        GridCase {
            base_mva: 100.0,
            horizon: 1,
            buses: vec![
                Bus { id: 1, demand: vec![0.0], is_reference: true },
                Bus { id: 2, demand: vec![100.0], is_reference: false },
            ],
            generators: vec![
                Generator { id: 1, bus: 1, p_max: vec![150.0], ramp: 150.0, cost: vec![10.0] },
                Generator { id: 2, bus: 2, p_max: vec![150.0], ramp: 150.0, cost: vec![40.0] },
            ],
            lines: vec![Line { id: 1, from_bus: 1, to_bus: 2, susceptance: 10.0, f_max: line_cap }],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::three_bus_case;
    use super::*;

    #[test]
    fn valid_case_passes() {
        three_bus_case().validate().unwrap();
    }

    #[test]
    fn duplicate_bus_rejected() {
        let mut c = three_bus_case();
        c.buses[2].id = 1;
        match c.validate() {
            Err(CaseError::Invalid { code, .. }) => assert_eq!(code, ValidationCode::DuplicateBusId),
            other => panic!("expected DuplicateBusId, got {other:?}"),
        }
    }

    #[test]
    fn dangling_generator_bus_rejected() {
        let mut c = three_bus_case();
        c.generators[0].bus = 99;
        match c.validate() {
            Err(CaseError::Invalid { code, .. }) => assert_eq!(code, ValidationCode::DanglingBusRef),
            other => panic!("expected DanglingBusRef, got {other:?}"),
        }
    }

    #[test]
    fn reference_bus_must_be_unique() {
        let mut c = three_bus_case();
        c.buses[1].is_reference = true;
        match c.validate() {
            Err(CaseError::Invalid { code, .. }) => {
                assert_eq!(code, ValidationCode::MultipleReferenceBuses)
            }
            other => panic!("expected MultipleReferenceBuses, got {other:?}"),
        }
        c.buses[0].is_reference = false;
        c.buses[1].is_reference = false;
        match c.validate() {
            Err(CaseError::Invalid { code, .. }) => assert_eq!(code, ValidationCode::NoReferenceBus),
            other => panic!("expected NoReferenceBus, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip_is_identity() {
        let c = three_bus_case();
        let round = GridCase::from_json(&c.to_json()).unwrap();
        assert_eq!(c, round);
    }

    #[test]
    fn expand_flat_profile_keeps_demand() {
        let c = three_bus_case();
        let spec = LoadProfileSpec::flat(7);
        let e = expand_horizon(&c, 1, &spec).unwrap();
        assert_eq!(e.buses[1].demand, vec![50.0]);
    }

    #[test]
    fn expand_is_deterministic() {
        let c = three_bus_case();
        let spec = LoadProfileSpec::duck(42);
        let a = expand_horizon(&c, 24, &spec).unwrap();
        let b = expand_horizon(&c, 24, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn expand_ramp_hour_in_window() {
        let c = three_bus_case();
        let spec = LoadProfileSpec::duck(7);
        let e = expand_horizon(&c, 24, &spec).unwrap();
        for b in &e.buses {
            if b.demand.iter().all(|&d| d == 0.0) {
                continue;
            }
            let mut best_t = 0;
            let mut best = f64::NEG_INFINITY;
            for t in 0..23 {
                let step = b.demand[t + 1] - b.demand[t];
                if step > best {
                    best = step;
                    best_t = t;
                }
            }
            let w0 = spec.evening_ramp_start as usize;
            assert!(
                (w0..=w0 + 2).contains(&best_t),
                "bus {}: steepest step at {best_t}, window [{w0}, {}]",
                b.id,
                w0 + 2
            );
        }
    }
}
