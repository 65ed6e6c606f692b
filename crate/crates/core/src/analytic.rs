//! Closed-form analysis of the first-order power-angle flow `δ̇ = a − b·sin δ`.
//!
//! When `|a| > |b|` the flow has no equilibrium and the time to travel from
//! `δ0` to `δ` has a closed form (tangent half-angle substitution). That
//! closed form gives the critical clearing time; the critical clearing angle
//! is simply the post-fault UEP.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ab_coefficients, psc_rhs, PscParams};
use crate::model::{NetworkLabel, NetworkState};
use crate::{Error, Result};

const BISECTION_TOL: f64 = 1e-12;
const SLOPE_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibria {
    pub sep: Option<f64>,
    pub uep: Option<f64>,
    pub p_max: f64,
}

impl Equilibria {
    pub fn exist(&self) -> bool {
        self.sep.is_some()
    }

    /// Index `j` of the SEP copy `sep + 2πj` whose basin of attraction,
    /// `(uep + 2π(j−1), uep + 2πj)`, holds `delta`.
    pub fn basin_index(&self, delta: f64) -> Option<i64> {
        let uep = self.uep?;
        Some(((delta - uep) / TAU).ceil() as i64)
    }

    /// Nearest copy `sep + 2πn` of the stable point and its index `n`.
    pub fn nearest_sep(&self, delta: f64) -> Option<(i64, f64)> {
        let sep = self.sep?;
        let n = ((delta - sep) / TAU).round();
        Some((n as i64, sep + TAU * n))
    }
}

pub fn find_equilibria(p: &PscParams, net: &NetworkState) -> Equilibria {
    let p_max = p.p_max(net);
    let ratio = p.p_ref / p_max;
    if ratio.abs() <= 1.0 {
        let sep = ratio.asin();
        Equilibria {
            sep: Some(sep),
            uep: Some(PI - sep),
            p_max,
        }
    } else {
        Equilibria {
            sep: None,
            uep: None,
            p_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Sep,
    Uep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedEquilibrium {
    pub delta: f64,
    pub kind: EquilibriumKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePortrait {
    pub net_label: NetworkLabel,
    /// `(δ, δ̇)` pairs, strictly increasing in `δ`.
    pub samples: Vec<(f64, f64)>,
    pub equilibria: Vec<MarkedEquilibrium>,
}

/// Samples `δ̇(δ)` on a uniform grid and locates the zero crossings.
pub fn sample_portrait(
    p: &PscParams,
    net: &NetworkState,
    delta_min: f64,
    delta_max: f64,
    n: usize,
) -> Result<PhasePortrait> {
    if n < 2 {
        return Err(Error::invalid("a portrait needs at least two samples"));
    }
    if !(delta_min < delta_max) || !delta_min.is_finite() || !delta_max.is_finite() {
        return Err(Error::invalid(format!(
            "empty angle range [{delta_min}, {delta_max}]"
        )));
    }
    let rhs = |d: f64| psc_rhs(d, p, net);
    let step = (delta_max - delta_min) / (n - 1) as f64;
    let samples: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let d = if i == n - 1 {
                delta_max
            } else {
                delta_min + step * i as f64
            };
            (d, rhs(d))
        })
        .collect();

    let mut roots = Vec::new();
    for (i, w) in samples.windows(2).enumerate() {
        let ((d0, f0), (d1, f1)) = (w[0], w[1]);
        if f0 == 0.0 {
            roots.push(d0);
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            roots.push(bisect(rhs, d0, d1, f0));
        }
        if i == samples.len() - 2 && f1 == 0.0 {
            roots.push(d1);
        }
    }

    let equilibria = roots
        .into_iter()
        .filter_map(|d| {
            let slope = (rhs(d + SLOPE_STEP) - rhs(d - SLOPE_STEP)) / (2.0 * SLOPE_STEP);
            let kind = if slope < 0.0 {
                EquilibriumKind::Sep
            } else if slope > 0.0 {
                EquilibriumKind::Uep
            } else {
                return None;
            };
            Some(MarkedEquilibrium { delta: d, kind })
        })
        .collect();

    Ok(PhasePortrait {
        net_label: net.label(),
        samples,
        equilibria,
    })
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let s_lo = f_lo.signum();
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Time solution of `δ̇ = a − b·sin δ` in the no-equilibrium regime:
/// `t(δ) = c_const + 2/(a·s) · atan((tan(δ/2) − b/a) / s)`, `s = √(1 − (b/a)²)`,
/// with the arctangent unwrapped so that `t` is continuous in `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCoeffs {
    pub a: f64,
    pub b: f64,
    pub c_const: f64,
    pub delta0: f64,
}

impl ClosedFormCoeffs {
    pub fn new(a: f64, b: f64, delta0: f64) -> Result<Self> {
        if !(a.abs() > b.abs()) || !a.is_finite() || !b.is_finite() {
            return Err(Error::ValidityDomain { a, b });
        }
        let mut c = Self {
            a,
            b,
            c_const: 0.0,
            delta0,
        };
        c.c_const = -c.phase(delta0);
        Ok(c)
    }

    fn shape(&self) -> f64 {
        let r = self.b / self.a;
        (1.0 - r * r).sqrt()
    }

    // (2/(a·s)) · φ(δ/2), where φ(θ) is the continuous angle of the vector
    // (s·cos θ, sin θ − (b/a)·cos θ). tan φ reproduces the arctangent argument,
    // and since that vector is an orientation-preserving linear image of
    // (cos θ, sin θ), φ stays within π of θ: crossing a pole of tan(δ/2) adds
    // exactly π to φ.
    fn phase(&self, delta: f64) -> f64 {
        let r = self.b / self.a;
        let s = self.shape();
        let theta = 0.5 * delta;
        let (sin_t, cos_t) = theta.sin_cos();
        let principal = (sin_t - r * cos_t).atan2(s * cos_t);
        let unwrapped = principal + TAU * ((theta - principal) / TAU).round();
        2.0 / (self.a * s) * unwrapped
    }

    pub fn time_at(&self, delta: f64) -> f64 {
        self.phase(delta) + self.c_const
    }
}

/// Time for the no-equilibrium flow to carry the angle from `delta0` to `delta`.
pub fn closed_form_time(delta: f64, delta0: f64, a: f64, b: f64) -> Result<f64> {
    let c = ClosedFormCoeffs::new(a, b, delta0)?;
    let forward = if a > 0.0 {
        delta >= delta0
    } else {
        delta <= delta0
    };
    if !forward {
        return Err(Error::invalid(format!(
            "delta = {delta} is behind delta0 = {delta0} for a flow of sign {}",
            a.signum()
        )));
    }
    if delta == delta0 {
        return Ok(0.0);
    }
    Ok(c.time_at(delta))
}

/// Critical clearing angle: the post-fault UEP.
pub fn cca(p: &PscParams, post_net: &NetworkState) -> Result<f64> {
    find_equilibria(p, post_net).uep.ok_or_else(|| {
        Error::NoEquilibrium(
            post_net.label().to_string(),
            "clearing the fault cannot restore synchronism".into(),
        )
    })
}

/// Critical clearing time from `delta0` under the during-fault flow.
pub fn cct(
    p: &PscParams,
    during_net: &NetworkState,
    post_net: &NetworkState,
    delta0: f64,
) -> Result<f64> {
    let angle = cca(p, post_net)?;
    let (a, b) = ab_coefficients(p, during_net);
    if !(a > b.abs()) {
        return Err(Error::ValidityDomain { a, b });
    }
    if at_cca(delta0, angle) {
        return Ok(0.0);
    }
    if delta0 > angle {
        return Err(Error::invalid(format!(
            "delta0 = {delta0} rad already lies beyond the CCA ({angle} rad)"
        )));
    }
    closed_form_time(angle, delta0, a, b)
}

/// Angles a few ulps past the CCA (a degree round trip, say) count as on it.
pub(crate) fn at_cca(delta0: f64, cca: f64) -> bool {
    (delta0 - cca).abs() <= 1e-12 * cca.abs().max(1.0)
}

/// Time for the angle to advance one full turn when there is no equilibrium.
pub fn slip_period(a: f64, b: f64) -> Result<f64> {
    if !(a.abs() > b.abs()) {
        return Err(Error::ValidityDomain { a, b });
    }
    Ok(TAU / (a * a - b * b).sqrt())
}
