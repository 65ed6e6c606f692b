//! Right-hand sides and algebraic outputs of the converter and generator models.
//!
//! Angles are never wrapped here.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::model::NetworkState;
use crate::{Error, Result};

pub const DEFAULT_CURRENT_LIMIT: f64 = 1.8;

/// Power synchronization controller, all in pu.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PscParams {
    /// Synchronization gain [rad/s per pu power].
    pub k: f64,
    pub p_ref: f64,
    pub v_mref: f64,
    pub v_g: f64,
    pub i_limit: f64,
    /// Nominal grid frequency [rad/s].
    pub omega0: f64,
}

impl PscParams {
    /// Unity voltages, 1.8 pu current limit and a 50 Hz grid.
    pub fn new(k: f64, p_ref: f64) -> Result<Self> {
        let p = Self {
            k,
            p_ref,
            v_mref: 1.0,
            v_g: 1.0,
            i_limit: DEFAULT_CURRENT_LIMIT,
            omega0: 2.0 * PI * 50.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k", self.k),
            ("v_mref", self.v_mref),
            ("v_g", self.v_g),
            ("i_limit", self.i_limit),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.p_ref.is_finite() {
            return Err(Error::invalid("p_ref must be finite"));
        }
        Ok(())
    }

    pub fn p_max(&self, net: &NetworkState) -> f64 {
        self.v_mref * self.v_g / net.x_transfer()
    }
}

/// Synchronous machine swing model: `j_eff·δ̈ = p_m − p_e − d·δ̇`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgParams {
    pub p_m: f64,
    /// Inertia times rated speed, in pu power per rad/s².
    pub j_eff: f64,
    pub d: f64,
    pub omega_n: f64,
}

impl SgParams {
    pub fn new(p_m: f64, j_eff: f64, d: f64) -> Result<Self> {
        let p = Self {
            p_m,
            j_eff,
            d,
            omega_n: 2.0 * PI * 50.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j_eff > 0.0 && self.j_eff.is_finite()) {
            return Err(Error::invalid(format!(
                "j_eff must be positive, got {}",
                self.j_eff
            )));
        }
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::invalid(format!(
                "d must be non-negative, got {}",
                self.d
            )));
        }
        if !self.p_m.is_finite() {
            return Err(Error::invalid("p_m must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AngleState {
    pub delta: f64,
    pub delta_dot: f64,
}

fn check_reactance(x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "reactance must be positive, got {x}"
        )))
    }
}

/// Active power transferred across reactance `x` at angle `delta`.
pub fn electrical_power(delta: f64, v1: f64, v2: f64, x: f64) -> Result<f64> {
    check_reactance(x)?;
    Ok(v1 * v2 * delta.sin() / x)
}

/// Magnitude of `(v1∠δ − v2∠0) / jx`.
pub fn grid_current(delta: f64, v1: f64, v2: f64, x: f64) -> Result<f64> {
    check_reactance(x)?;
    Ok(current_magnitude(delta, v1, v2, x))
}

// The radicand is rewritten as (v1 − v2)² + 4·v1·v2·sin²(δ/2) so it stays
// non-negative and exact near δ = 0.
pub(crate) fn current_magnitude(delta: f64, v1: f64, v2: f64, x: f64) -> f64 {
    let s = (0.5 * delta).sin();
    ((v1 - v2).powi(2) + 4.0 * v1 * v2 * s * s).sqrt() / x
}

pub(crate) fn transfer_power(delta: f64, v1: f64, v2: f64, net: &NetworkState) -> f64 {
    v1 * v2 * delta.sin() / net.x_transfer()
}

/// δ̇ of the power synchronization loop with the PCC voltage held at its reference.
pub fn psc_rhs(delta: f64, p: &PscParams, net: &NetworkState) -> f64 {
    p.k * (p.p_ref - transfer_power(delta, p.v_mref, p.v_g, net))
}

/// `(a, b)` such that `δ̇ = a − b·sin δ`.
pub fn ab_coefficients(p: &PscParams, net: &NetworkState) -> (f64, f64) {
    (p.k * p.p_ref, p.k * p.p_max(net))
}

/// Reference and grid phase angles at time `t`.
pub fn phase_angles(delta: f64, t: f64, omega0: f64) -> (f64, f64) {
    let theta_g = omega0 * t;
    (delta + theta_g, theta_g)
}

/// Swing equation, returns `(δ̇, δ̈)`.
pub fn sg_rhs(s: &AngleState, p: &SgParams, v1: f64, v2: f64, net: &NetworkState) -> (f64, f64) {
    let p_e = transfer_power(s.delta, v1, v2, net);
    (s.delta_dot, (p.p_m - p_e - p.d * s.delta_dot) / p.j_eff)
}

/// Conserved quantity of the undamped swing equation within one network state.
pub fn sg_energy(s: &AngleState, p: &SgParams, v1: f64, v2: f64, net: &NetworkState) -> f64 {
    0.5 * p.j_eff * s.delta_dot * s.delta_dot
        - p.p_m * s.delta
        - v1 * v2 / net.x_transfer() * s.delta.cos()
}
