//! Per-unit system and reduction of the single-converter infinite-bus network.
//!
//! The network is a converter PCC feeding a star node through `x_t`, two
//! parallel lines `x_g1`/`x_g2` from the star node to the infinite bus, and an
//! optional grounding reactance `x_gnd` hung off the star node while a
//! three-phase fault is applied. Every configuration collapses to one transfer
//! reactance between the PCC and the infinite bus.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// SI to per-unit anchor.
///
/// `v_base` is a peak phase voltage, so that `z_base = 3 v² / (2 s)` absorbs
/// the 3/2 factor of the three-phase power transfer relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerUnitBase {
    s_base: f64,
    v_base: f64,
    f_base: f64,
}

impl PerUnitBase {
    pub fn new(s_base: f64, v_base: f64, f_base: f64) -> Result<Self> {
        for (name, v) in [("s_base", s_base), ("v_base", v_base), ("f_base", f_base)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            s_base,
            v_base,
            f_base,
        })
    }

    pub fn s_base(&self) -> f64 {
        self.s_base
    }

    pub fn v_base(&self) -> f64 {
        self.v_base
    }

    pub fn f_base(&self) -> f64 {
        self.f_base
    }

    pub fn omega_base(&self) -> f64 {
        2.0 * PI * self.f_base
    }

    pub fn z_base(&self) -> f64 {
        3.0 * self.v_base * self.v_base / (2.0 * self.s_base)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantityKind {
    /// Henry, mapped to a reactance at the base frequency.
    Inductance,
    /// Ohm.
    Impedance,
    /// Watt.
    Power,
    /// Volt, peak phase.
    Voltage,
    /// Synchronization integral gain in rad/(W·s), mapped to rad/s per pu power.
    Gain,
}

pub fn to_per_unit(value: f64, kind: QuantityKind, base: &PerUnitBase) -> f64 {
    match kind {
        QuantityKind::Inductance => base.omega_base() * value / base.z_base(),
        QuantityKind::Impedance => value / base.z_base(),
        QuantityKind::Power => value / base.s_base(),
        QuantityKind::Voltage => value / base.v_base(),
        QuantityKind::Gain => value * base.s_base(),
    }
}

pub fn from_per_unit(pu: f64, kind: QuantityKind, base: &PerUnitBase) -> f64 {
    match kind {
        QuantityKind::Inductance => pu * base.z_base() / base.omega_base(),
        QuantityKind::Impedance => pu * base.z_base(),
        QuantityKind::Power => pu * base.s_base(),
        QuantityKind::Voltage => pu * base.v_base(),
        QuantityKind::Gain => pu / base.s_base(),
    }
}

/// Raw series reactances of the network, all in pu.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkElements {
    pub x_t: f64,
    pub x_g1: f64,
    pub x_g2: f64,
    /// Grounding reactance of the fault; `None` when the scenario has no fault path.
    pub x_gnd: Option<f64>,
    /// Converter filter reactance. Kept for reporting; it sits behind the
    /// voltage-controlled PCC and takes no part in the reduction.
    pub x_f: Option<f64>,
}

impl NetworkElements {
    pub fn new(x_t: f64, x_g1: f64, x_g2: f64) -> Result<Self> {
        let e = Self {
            x_t,
            x_g1,
            x_g2,
            x_gnd: None,
            x_f: None,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn with_ground(mut self, x_gnd: f64) -> Result<Self> {
        self.x_gnd = Some(x_gnd);
        self.validate()?;
        Ok(self)
    }

    pub fn with_filter(mut self, x_f: f64) -> Result<Self> {
        self.x_f = Some(x_f);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let present = [
            ("x_t", Some(self.x_t)),
            ("x_g1", Some(self.x_g1)),
            ("x_g2", Some(self.x_g2)),
            ("x_gnd", self.x_gnd),
            ("x_f", self.x_f),
        ];
        for (name, v) in present {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::invalid(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    fn parallel_lines(&self) -> f64 {
        self.x_g1 * self.x_g2 / (self.x_g1 + self.x_g2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetworkLabel {
    PreFault,
    DuringFault,
    PostFault,
}

impl std::fmt::Display for NetworkLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NetworkLabel::PreFault => "pre-fault",
            NetworkLabel::DuringFault => "during-fault",
            NetworkLabel::PostFault => "post-fault",
        })
    }
}

/// One reduced network configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    label: NetworkLabel,
    x_transfer: f64,
}

impl NetworkState {
    pub fn new(label: NetworkLabel, x_transfer: f64) -> Result<Self> {
        if !(x_transfer > 0.0) || x_transfer.is_nan() {
            return Err(Error::invalid(format!(
                "transfer reactance must be positive, got {x_transfer}"
            )));
        }
        Ok(Self { label, x_transfer })
    }

    pub fn label(&self) -> NetworkLabel {
        self.label
    }

    pub fn x_transfer(&self) -> f64 {
        self.x_transfer
    }
}

/// Both lines in service.
pub fn reduce_pre(e: &NetworkElements) -> Result<NetworkState> {
    e.validate()?;
    NetworkState::new(NetworkLabel::PreFault, e.x_t + e.parallel_lines())
}

/// Three-phase fault through `x_gnd` at the sending end of line 2 (the star node).
///
/// Eliminating the star node leaves `x_t + x_p + x_t·x_p / x_gnd` between the
/// PCC and the infinite bus, with `x_p` the two lines in parallel.
pub fn reduce_during_fault(e: &NetworkElements) -> Result<NetworkState> {
    e.validate()?;
    let x_gnd = e.x_gnd.ok_or_else(|| {
        Error::Scenario("a ground fault needs a grounding reactance x_gnd".into())
    })?;
    let x_p = e.parallel_lines();
    NetworkState::new(NetworkLabel::DuringFault, e.x_t + x_p + e.x_t * x_p / x_gnd)
}

/// Line 2 opened.
pub fn reduce_post(e: &NetworkElements) -> Result<NetworkState> {
    e.validate()?;
    NetworkState::new(NetworkLabel::PostFault, e.x_t + e.x_g1)
}

/// Timed network sequence: pre → (during) → post.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultScenario {
    pub pre: NetworkState,
    pub during: Option<NetworkState>,
    pub post: NetworkState,
    pub t_fault: f64,
    pub t_clear: Option<f64>,
    /// Initial power angle; defaults to the pre-fault SEP.
    pub delta0: Option<f64>,
}

impl FaultScenario {
    /// Sudden loss of a line: the network jumps from `pre` to `post` at `t_fault`.
    pub fn line_loss(pre: NetworkState, post: NetworkState, t_fault: f64) -> Result<Self> {
        let sc = Self {
            pre,
            during: None,
            post,
            t_fault,
            t_clear: None,
            delta0: None,
        };
        sc.validate()?;
        Ok(sc)
    }

    /// Fault applied at `t_fault`, cleared at `t_clear` (never, if `None`).
    pub fn fault(
        pre: NetworkState,
        during: NetworkState,
        post: NetworkState,
        t_fault: f64,
        t_clear: Option<f64>,
    ) -> Result<Self> {
        let sc = Self {
            pre,
            during: Some(during),
            post,
            t_fault,
            t_clear,
            delta0: None,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn with_delta0(mut self, delta0: f64) -> Result<Self> {
        self.delta0 = Some(delta0);
        self.validate()?;
        Ok(self)
    }

    pub fn with_clearing(mut self, t_clear: Option<f64>) -> Result<Self> {
        self.t_clear = t_clear;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_fault.is_finite() && self.t_fault >= 0.0) {
            return Err(Error::Scenario(format!(
                "t_fault must be non-negative, got {}",
                self.t_fault
            )));
        }
        match (self.during, self.t_clear) {
            (None, Some(_)) => {
                return Err(Error::Scenario(
                    "a clearing time needs a during-fault network".into(),
                ))
            }
            (Some(_), Some(tc)) if !(tc.is_finite() && tc > self.t_fault) => {
                return Err(Error::Scenario(format!(
                    "t_clear ({tc}) must come after t_fault ({})",
                    self.t_fault
                )))
            }
            _ => {}
        }
        if let Some(d) = self.delta0 {
            if !d.is_finite() {
                return Err(Error::Scenario("delta0 must be finite".into()));
            }
        }
        Ok(())
    }

    /// Network active at time `t`; switches take effect at the event instant.
    pub fn state_at(&self, t: f64) -> NetworkState {
        if t < self.t_fault {
            return self.pre;
        }
        match (self.during, self.t_clear) {
            (None, _) => self.post,
            (Some(d), None) => d,
            (Some(d), Some(tc)) => {
                if t < tc {
                    d
                } else {
                    self.post
                }
            }
        }
    }

    /// Network in force once every scheduled event has happened.
    pub fn final_state(&self) -> NetworkState {
        match (self.during, self.t_clear) {
            (Some(d), None) => d,
            _ => self.post,
        }
    }

    /// Time of the last scheduled switching event.
    pub fn last_event(&self) -> f64 {
        self.t_clear.unwrap_or(self.t_fault)
    }
}
