//! Scenario files: JSON with explicit unit tags on every physical quantity.
//!
//! ```json
//! "x_g1": { "value": 0.39, "unit": "H" }
//! "x_g1": { "value": 0.85, "unit": "pu" }
//! ```

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::dynamics::{PscParams, SgParams};
use crate::model::{
    reduce_during_fault, reduce_post, reduce_pre, to_per_unit, FaultScenario, NetworkElements,
    NetworkState, PerUnitBase, QuantityKind,
};
use crate::simulate::SimOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Self {
        Self { value, unit }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "pu")]
    Pu,
    W,
    #[serde(rename = "kW")]
    KW,
    MW,
    GW,
    VA,
    #[serde(rename = "kVA")]
    KVA,
    MVA,
    /// Peak phase voltage.
    V,
    /// Phase rms voltage.
    #[serde(rename = "V_rms")]
    VRms,
    #[serde(rename = "kV_rms")]
    KVRms,
    Hz,
    H,
    #[serde(rename = "mH")]
    MilliH,
    #[serde(rename = "ohm")]
    Ohm,
    #[serde(rename = "rad/(W*s)")]
    RadPerWattSecond,
    #[serde(rename = "rad/s/pu")]
    RadPerSecondPerPu,
    #[serde(rename = "deg")]
    Deg,
    #[serde(rename = "rad")]
    Rad,
}

/// Configuration problem: malformed file, unknown unit, failed precondition.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

fn bad(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

fn wrong_unit(field: &str, q: &Quantity, allowed: &str) -> ConfigError {
    bad(
        field,
        format!(
            "unit {:?} not allowed here (expected one of {allowed})",
            q.unit
        ),
    )
}

fn watts(field: &str, q: &Quantity) -> Result<f64, ConfigError> {
    Ok(match q.unit {
        Unit::W | Unit::VA => q.value,
        Unit::KW | Unit::KVA => q.value * 1e3,
        Unit::MW | Unit::MVA => q.value * 1e6,
        Unit::GW => q.value * 1e9,
        _ => return Err(wrong_unit(field, q, "W, kW, MW, GW, VA, kVA, MVA")),
    })
}

fn volts_peak(field: &str, q: &Quantity) -> Result<f64, ConfigError> {
    Ok(match q.unit {
        Unit::V => q.value,
        Unit::VRms => q.value * SQRT_2,
        Unit::KVRms => q.value * 1e3 * SQRT_2,
        _ => return Err(wrong_unit(field, q, "V, V_rms, kV_rms")),
    })
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(bad(field, format!("must be positive, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    pub s_base: Quantity,
    pub v_base: Quantity,
    pub f_base: Quantity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementsConfig {
    #[serde(alias = "L_T")]
    pub x_t: Quantity,
    #[serde(alias = "L_g1")]
    pub x_g1: Quantity,
    #[serde(alias = "L_g2")]
    pub x_g2: Quantity,
    #[serde(alias = "L_gnd", default, skip_serializing_if = "Option::is_none")]
    pub x_gnd: Option<Quantity>,
    #[serde(alias = "L_f", default, skip_serializing_if = "Option::is_none")]
    pub x_f: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PscConfig {
    #[serde(alias = "K_i")]
    pub k: Quantity,
    /// Free-text label carried from the source table, not used in computation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_note: Option<String>,
    #[serde(alias = "P_ref")]
    pub p_ref: Quantity,
    #[serde(alias = "V_mref")]
    pub v_mref: Quantity,
    #[serde(alias = "V_g")]
    pub v_g: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_limit: Option<Quantity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgConfig {
    pub p_m: Quantity,
    /// Inertia times rated speed [pu power per rad/s²].
    pub j_eff: f64,
    /// Damping [pu power per rad/s].
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultKind {
    LineLoss,
    ThreePhaseGroundFault,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    pub kind: FaultKind,
    pub t_fault: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_clear: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<Quantity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_settle_tol")]
    pub settle_tol: f64,
    #[serde(default = "default_max_step")]
    pub max_step: f64,
}

fn default_rel_tol() -> f64 {
    1e-10
}

fn default_settle_tol() -> f64 {
    1e-4
}

fn default_max_step() -> f64 {
    0.01
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: None,
            rel_tol: default_rel_tol(),
            settle_tol: default_settle_tol(),
            max_step: default_max_step(),
        }
    }
}

/// Raw scenario file as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub base: BaseConfig,
    pub elements: ElementsConfig,
    pub psc: PscConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sg: Option<SgConfig>,
    pub fault: FaultConfig,
    #[serde(default)]
    pub sim: SimConfig,
}

/// Per-unit parameters after unit resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub name: String,
    pub base: PerUnitBase,
    pub elements: NetworkElements,
    pub psc: PscParams,
    pub gain_note: Option<String>,
    pub sg: Option<SgParams>,
    pub fault_kind: FaultKind,
    pub t_fault: f64,
    pub t_clear: Option<f64>,
    pub delta0: Option<f64>,
    pub sim: SimOptions,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| bad("config", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let b = &self.base;
        let s_base = positive("base.s_base", watts("base.s_base", &b.s_base)?)?;
        let v_base = positive("base.v_base", volts_peak("base.v_base", &b.v_base)?)?;
        if b.f_base.unit != Unit::Hz {
            return Err(wrong_unit("base.f_base", &b.f_base, "Hz"));
        }
        let f_base = positive("base.f_base", b.f_base.value)?;
        let base =
            PerUnitBase::new(s_base, v_base, f_base).map_err(|e| bad("base", e.to_string()))?;

        let reactance = |field: &str, q: &Quantity| -> Result<f64, ConfigError> {
            let v = match q.unit {
                Unit::Pu => q.value,
                Unit::H => to_per_unit(q.value, QuantityKind::Inductance, &base),
                Unit::MilliH => to_per_unit(q.value * 1e-3, QuantityKind::Inductance, &base),
                Unit::Ohm => to_per_unit(q.value, QuantityKind::Impedance, &base),
                _ => return Err(wrong_unit(field, q, "pu, H, mH, ohm")),
            };
            positive(field, v)
        };
        let power = |field: &str, q: &Quantity| -> Result<f64, ConfigError> {
            match q.unit {
                Unit::Pu => Ok(q.value),
                _ => Ok(to_per_unit(watts(field, q)?, QuantityKind::Power, &base)),
            }
        };
        let voltage = |field: &str, q: &Quantity| -> Result<f64, ConfigError> {
            let v = match q.unit {
                Unit::Pu => q.value,
                _ => to_per_unit(volts_peak(field, q)?, QuantityKind::Voltage, &base),
            };
            positive(field, v)
        };
        let angle = |field: &str, q: &Quantity| -> Result<f64, ConfigError> {
            match q.unit {
                Unit::Deg => Ok(q.value.to_radians()),
                Unit::Rad => Ok(q.value),
                _ => Err(wrong_unit(field, q, "deg, rad")),
            }
        };

        let e = &self.elements;
        let elements = NetworkElements {
            x_t: reactance("elements.x_t", &e.x_t)?,
            x_g1: reactance("elements.x_g1", &e.x_g1)?,
            x_g2: reactance("elements.x_g2", &e.x_g2)?,
            x_gnd: e
                .x_gnd
                .as_ref()
                .map(|q| reactance("elements.x_gnd", q))
                .transpose()?,
            x_f: e
                .x_f
                .as_ref()
                .map(|q| reactance("elements.x_f", q))
                .transpose()?,
        };

        let c = &self.psc;
        let k = match c.k.unit {
            Unit::RadPerWattSecond => to_per_unit(c.k.value, QuantityKind::Gain, &base),
            Unit::RadPerSecondPerPu => c.k.value,
            _ => return Err(wrong_unit("psc.k", &c.k, "rad/(W*s), rad/s/pu")),
        };
        let i_limit = match &c.i_limit {
            None => crate::dynamics::DEFAULT_CURRENT_LIMIT,
            Some(q) if q.unit == Unit::Pu => positive("psc.i_limit", q.value)?,
            Some(q) => return Err(wrong_unit("psc.i_limit", q, "pu")),
        };
        let psc = PscParams {
            k: positive("psc.k", k)?,
            p_ref: power("psc.p_ref", &c.p_ref)?,
            v_mref: voltage("psc.v_mref", &c.v_mref)?,
            v_g: voltage("psc.v_g", &c.v_g)?,
            i_limit,
            omega0: base.omega_base(),
        };
        psc.validate().map_err(|e| bad("psc", e.to_string()))?;

        let sg = match &self.sg {
            None => None,
            Some(s) => {
                let p = SgParams {
                    p_m: power("sg.p_m", &s.p_m)?,
                    j_eff: s.j_eff,
                    d: s.d,
                    omega_n: base.omega_base(),
                };
                p.validate().map_err(|e| bad("sg", e.to_string()))?;
                Some(p)
            }
        };

        let f = &self.fault;
        if !(f.t_fault.is_finite() && f.t_fault >= 0.0) {
            return Err(bad("fault.t_fault", "must be a non-negative time"));
        }
        match (f.kind, f.t_clear) {
            (FaultKind::LineLoss, Some(_)) => {
                return Err(bad("fault.t_clear", "a line loss is never cleared"))
            }
            (_, Some(tc)) if !(tc > f.t_fault) => {
                return Err(bad("fault.t_clear", "must come after t_fault"))
            }
            (FaultKind::ThreePhaseGroundFault, _) if elements.x_gnd.is_none() => {
                return Err(bad("elements.x_gnd", "required for a ground fault"))
            }
            _ => {}
        }
        let delta0 = f
            .delta0
            .as_ref()
            .map(|q| angle("fault.delta0", q))
            .transpose()?;

        let s = &self.sim;
        if let Some(t) = s.t_end {
            positive("sim.t_end", t)?;
        }
        let sim = SimOptions {
            rel_tol: positive("sim.rel_tol", s.rel_tol)?,
            settle_tol: positive("sim.settle_tol", s.settle_tol)?,
            max_step: positive("sim.max_step", s.max_step)?,
            t_end: s.t_end,
            ..SimOptions::default()
        };

        Ok(Resolved {
            name: self.name.clone(),
            base,
            elements,
            psc,
            gain_note: c.gain_note.clone(),
            sg,
            fault_kind: f.kind,
            t_fault: f.t_fault,
            t_clear: f.t_clear,
            delta0,
            sim,
        })
    }
}

impl Resolved {
    pub fn pre(&self) -> NetworkState {
        reduce_pre(&self.elements).expect("elements validated")
    }

    pub fn during(&self) -> Option<NetworkState> {
        match self.fault_kind {
            FaultKind::LineLoss => None,
            FaultKind::ThreePhaseGroundFault => {
                Some(reduce_during_fault(&self.elements).expect("x_gnd validated"))
            }
        }
    }

    pub fn post(&self) -> NetworkState {
        reduce_post(&self.elements).expect("elements validated")
    }

    pub fn networks(&self) -> Vec<NetworkState> {
        let mut v = vec![self.pre()];
        v.extend(self.during());
        v.push(self.post());
        v
    }

    /// Fault sequence; `t_clear` overrides the configured clearing time.
    pub fn scenario(&self, t_clear: Option<Option<f64>>) -> crate::Result<FaultScenario> {
        let sc = match self.during() {
            None => FaultScenario::line_loss(self.pre(), self.post(), self.t_fault)?,
            Some(d) => FaultScenario::fault(
                self.pre(),
                d,
                self.post(),
                self.t_fault,
                t_clear.unwrap_or(self.t_clear),
            )?,
        };
        match self.delta0 {
            Some(d) => sc.with_delta0(d),
            None => Ok(sc),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE2: &str = include_str!("../../scenarios/case2.json");

    #[test]
    fn parses_bundled_case() {
        let c = ScenarioConfig::parse(CASE2).unwrap();
        let r = c.resolve().unwrap();
        assert!((r.psc.k - 9.3).abs() < 1e-12);
        assert!((r.psc.p_ref - 1.0).abs() < 1e-15);
        assert!((r.psc.v_g - 1.0).abs() < 1e-15);
        assert_eq!(r.elements.x_gnd, Some(0.5));
        assert!((r.during().unwrap().x_transfer() - 1.128_421_052_631_579).abs() < 1e-12);
    }

    #[test]
    fn rejects_unknown_unit_and_fields() {
        let broken = CASE2.replace("\"unit\": \"rad/(W*s)\"", "\"unit\": \"furlong\"");
        assert!(ScenarioConfig::parse(&broken).is_err());
        let extra = CASE2.replacen("\"name\"", "\"bogus\": 1, \"name\"", 1);
        assert!(ScenarioConfig::parse(&extra).is_err());
    }

    #[test]
    fn rejects_misplaced_unit() {
        let mut c = ScenarioConfig::parse(CASE2).unwrap();
        c.elements.x_t = Quantity::new(0.8, Unit::MW);
        let err = c.resolve().unwrap_err();
        assert_eq!(err.field, "elements.x_t");
    }

    #[test]
    fn ground_fault_needs_x_gnd() {
        let mut c = ScenarioConfig::parse(CASE2).unwrap();
        c.elements.x_gnd = None;
        assert_eq!(c.resolve().unwrap_err().field, "elements.x_gnd");
    }

    #[test]
    fn si_inductance_resolves() {
        let mut c = ScenarioConfig::parse(CASE2).unwrap();
        c.elements.x_g1 = Quantity::new(390.0, Unit::MilliH);
        let r = c.resolve().unwrap();
        assert!((r.elements.x_g1 - 0.843_816_208_6).abs() < 1e-9);
    }

    #[test]
    fn round_trip_keeps_resolution() {
        let c = ScenarioConfig::parse(CASE2).unwrap();
        let again = ScenarioConfig::parse(&c.to_json()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.resolve().unwrap(), again.resolve().unwrap());
    }
}
