//! Time-domain simulation across a fault sequence, stability classification,
//! numeric critical clearing time and clearing-time sweeps.
//!
//! The integrator is stopped exactly at every switching instant and restarted
//! from the same angle under the new network. The angle is never wrapped.

use std::f64::consts::TAU;
use std::ops::ControlFlow;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{cca, find_equilibria, slip_period, Equilibria};
use crate::dynamics::{
    current_magnitude, psc_rhs, sg_rhs, transfer_power, AngleState, PscParams, SgParams,
};
use crate::model::{FaultScenario, NetworkState};
use crate::ode::{self, Options};
use crate::{Error, Result};

/// Rate below which a trajectory counts as at rest.
pub const REST_RATE: f64 = 1e-4;
/// Length of the window over which settling must hold.
pub const SETTLE_WINDOW: f64 = 0.2;
/// Angle excursion, with no equilibrium around, that counts as divergence.
pub const DIVERGENCE_SPAN: f64 = 2.0 * TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    Psc,
    Sg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub delta: f64,
    pub delta_dot: f64,
    pub p_e: f64,
    pub i_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    FaultOn,
    FaultCleared,
    CurrentLimitHit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub model: Model,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory always holds its initial sample")
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn event(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }

    /// Angle at time `t`, by cubic Hermite interpolation between samples.
    pub fn delta_at(&self, t: f64) -> Option<f64> {
        let s = &self.samples;
        if t < s[0].t || t > self.last().t {
            return None;
        }
        let i = s.partition_point(|x| x.t <= t);
        if i == 0 || i == s.len() {
            return Some(s[i.saturating_sub(1)].delta);
        }
        let (a, b) = (&s[i - 1], &s[i]);
        Some(hermite(a, b, t))
    }

    /// Times at which the angle first reaches `from + m·step`, `m = 1, 2, ...`.
    ///
    /// `step` may be negative for a decreasing angle.
    pub fn angle_crossings(&self, from: f64, step: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if step == 0.0 {
            return out;
        }
        let dir = step.signum();
        let mut m = 1.0;
        for w in self.samples.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            // a switching instant shows up as two samples at one time
            if b.t <= a.t {
                continue;
            }
            loop {
                let level = from + m * step;
                if dir * (b.delta - level) >= 0.0 && dir * (a.delta - level) < 0.0 {
                    out.push(hermite_root(a, b, level));
                    m += 1.0;
                } else {
                    break;
                }
            }
        }
        out
    }
}

fn hermite(a: &Sample, b: &Sample, t: f64) -> f64 {
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * a.delta
        + (s3 - 2.0 * s2 + s) * h * a.delta_dot
        + (-2.0 * s3 + 3.0 * s2) * b.delta
        + (s3 - s2) * h * b.delta_dot
}

fn hermite_root(a: &Sample, b: &Sample, level: f64) -> f64 {
    let (mut lo, mut hi) = (a.t, b.t);
    let rising = b.delta > a.delta;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let below = hermite(a, b, mid) < level;
        if below == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    ConvergedDirect,
    ConvergedAfterSlip(u32),
    Unbounded,
    CurrentLimited,
    /// Undamped machine swinging inside one basin without settling.
    BoundedOscillation,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::ConvergedDirect => f.write_str("ConvergedDirect"),
            Classification::ConvergedAfterSlip(n) => write!(f, "ConvergedAfterSlip({n})"),
            Classification::Unbounded => f.write_str("Unbounded"),
            Classification::CurrentLimited => f.write_str("CurrentLimited"),
            Classification::BoundedOscillation => f.write_str("BoundedOscillation"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub classification: Classification,
    pub final_delta: Option<f64>,
    pub clearing_angle: Option<f64>,
    pub cycle_slips: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub settle_tol: f64,
    /// Overrides the default horizon.
    pub t_end: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.01,
            settle_tol: 1e-4,
            t_end: None,
        }
    }
}

impl SimOptions {
    fn ode(&self) -> Options {
        Options {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            ..Options::default()
        }
    }
}

/// Simulation end time long enough for the classification tests.
///
/// With an equilibrium in the final network, 40 linearised time constants of
/// the SEP after the last switching event; without one, three slip periods.
pub fn default_horizon(sc: &FaultScenario, p: &PscParams) -> f64 {
    let last = sc.last_event();
    let net = sc.final_state();
    let eq = find_equilibria(p, &net);
    match eq.sep {
        Some(sep) => {
            let rate = p.k * eq.p_max * sep.cos();
            let span = if rate > 1e-3 { 40.0 / rate } else { 4e4 };
            last + span.max(1.0)
        }
        None => {
            let (a, b) = crate::dynamics::ab_coefficients(p, &net);
            last + 3.0 * slip_period(a, b).unwrap_or(10.0)
        }
    }
}

struct Segment {
    start: f64,
    stop: f64,
    net: NetworkState,
    opening: Option<EventKind>,
    guarded: bool,
}

fn segments(sc: &FaultScenario, t_end: f64) -> Vec<Segment> {
    let mut bounds: Vec<(f64, NetworkState, Option<EventKind>, bool)> =
        vec![(0.0, sc.pre, None, false)];
    match sc.during {
        Some(d) => {
            bounds.push((sc.t_fault, d, Some(EventKind::FaultOn), true));
            if let Some(tc) = sc.t_clear {
                bounds.push((tc, sc.post, Some(EventKind::FaultCleared), false));
            }
        }
        None => bounds.push((sc.t_fault, sc.post, Some(EventKind::FaultOn), true)),
    }
    let mut out = Vec::new();
    for (i, &(start, net, opening, guarded)) in bounds.iter().enumerate() {
        let stop = bounds.get(i + 1).map_or(t_end, |b| b.0).min(t_end);
        if start < stop || (i == 0 && bounds.len() == 1) {
            out.push(Segment {
                start,
                stop,
                net,
                opening,
                guarded,
            });
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn run_piecewise<const N: usize>(
    sc: &FaultScenario,
    t_end: f64,
    y0: [f64; N],
    opts: &Options,
    model: Model,
    rhs: impl Fn(&NetworkState, &[f64; N]) -> [f64; N],
    sample: impl Fn(f64, &NetworkState, &[f64; N]) -> Sample,
    limit: Option<f64>,
) -> Result<Trajectory> {
    sc.validate()?;
    if !(t_end > 0.0) {
        return Err(Error::invalid(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let mut samples: Vec<Sample> = Vec::new();
    let mut events = Vec::new();
    let mut y = y0;

    for seg in segments(sc, t_end) {
        if let (Some(last), true) = (samples.last(), seg.opening.is_some()) {
            if last.t == seg.start {
                samples.pop();
            }
        }
        if let Some(kind) = seg.opening {
            events.push(Event { t: seg.start, kind });
        }
        let first = sample(seg.start, &seg.net, &y);
        samples.push(first);
        let guard = limit.filter(|_| seg.guarded);
        if let Some(lim) = guard {
            if first.i_g > lim {
                events.push(Event {
                    t: first.t,
                    kind: EventKind::CurrentLimitHit,
                });
                return Ok(Trajectory {
                    samples,
                    events,
                    model,
                });
            }
        }
        let net = seg.net;
        let mut hit = None;
        let out = ode::integrate(
            |_, y| rhs(&net, y),
            seg.start,
            y,
            seg.stop,
            opts,
            |t, y| {
                let s = sample(t, &net, y);
                samples.push(s);
                match guard {
                    Some(lim) if s.i_g > lim => {
                        hit = Some(t);
                        ControlFlow::Break(())
                    }
                    _ => ControlFlow::Continue(()),
                }
            },
        )?;
        y = out.y;
        if let Some(t) = hit {
            events.push(Event {
                t,
                kind: EventKind::CurrentLimitHit,
            });
            break;
        }
    }
    Ok(Trajectory {
        samples,
        events,
        model,
    })
}

fn initial_angle(sc: &FaultScenario, p_ref_over_pmax: f64) -> Result<f64> {
    match sc.delta0 {
        Some(d) => Ok(d),
        None if p_ref_over_pmax.abs() <= 1.0 => Ok(p_ref_over_pmax.asin()),
        None => Err(Error::NoEquilibrium(
            sc.pre.label().to_string(),
            "no steady state to start from; give delta0".into(),
        )),
    }
}

/// Converter trajectory with the default integrator options.
pub fn integrate(
    sc: &FaultScenario,
    p: &PscParams,
    t_end: f64,
    rel_tol: f64,
) -> Result<Trajectory> {
    let opts = SimOptions {
        rel_tol,
        ..SimOptions::default()
    };
    integrate_with(sc, p, t_end, &opts)
}

/// Converter trajectory. The current guard is armed while the disturbance is
/// applied (fault on, or after a line loss); the run is truncated at the first
/// sample above `p.i_limit`.
pub fn integrate_with(
    sc: &FaultScenario,
    p: &PscParams,
    t_end: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    p.validate()?;
    let delta0 = initial_angle(sc, p.p_ref / p.p_max(&sc.pre))?;
    run_piecewise(
        sc,
        t_end,
        [delta0],
        &opts.ode(),
        Model::Psc,
        |net, y| [psc_rhs(y[0], p, net)],
        |t, net, y| Sample {
            t,
            delta: y[0],
            delta_dot: psc_rhs(y[0], p, net),
            p_e: transfer_power(y[0], p.v_mref, p.v_g, net),
            i_g: current_magnitude(y[0], p.v_mref, p.v_g, net.x_transfer()),
        },
        Some(p.i_limit),
    )
}

/// Swing-equation trajectory, starting at rest at the pre-fault SEP unless
/// `sc.delta0` is given.
pub fn sg_integrate(
    sc: &FaultScenario,
    p: &SgParams,
    v1: f64,
    v2: f64,
    t_end: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    p.validate()?;
    let delta0 = initial_angle(sc, p.p_m * sc.pre.x_transfer() / (v1 * v2))?;
    run_piecewise(
        sc,
        t_end,
        [delta0, 0.0],
        &opts.ode(),
        Model::Sg,
        |net, y| {
            let (d, dd) = sg_rhs(
                &AngleState {
                    delta: y[0],
                    delta_dot: y[1],
                },
                p,
                v1,
                v2,
                net,
            );
            [d, dd]
        },
        |t, net, y| Sample {
            t,
            delta: y[0],
            delta_dot: y[1],
            p_e: transfer_power(y[0], v1, v2, net),
            i_g: current_magnitude(y[0], v1, v2, net.x_transfer()),
        },
        None,
    )
}

/// First time the recorded current exceeds `i_limit`.
pub fn check_current_limit(tr: &Trajectory, i_limit: f64) -> Option<f64> {
    tr.samples.iter().find(|s| s.i_g > i_limit).map(|s| s.t)
}

/// Classifies a trajectory against the equilibria of the network in force at its end.
pub fn classify(
    tr: &Trajectory,
    final_eq: &Equilibria,
    settle_tol: f64,
    horizon: f64,
) -> Result<SimReport> {
    let last = *tr.last();
    let clearing_angle = tr
        .event(EventKind::FaultCleared)
        .and_then(|e| tr.delta_at(e.t));
    let inconclusive = |reason: &str| Error::Inconclusive {
        t: last.t,
        delta: last.delta,
        delta_dot: last.delta_dot,
        reason: reason.to_string(),
    };

    if tr.event(EventKind::CurrentLimitHit).is_some() {
        return Ok(SimReport {
            classification: Classification::CurrentLimited,
            final_delta: None,
            clearing_angle,
            cycle_slips: 0,
        });
    }
    if last.t < horizon * (1.0 - 1e-12) {
        return Err(inconclusive("trajectory ends before the horizon"));
    }

    let last_event_t = tr.events.last().map_or(tr.first().t, |e| e.t);
    let since_event: Vec<&Sample> = tr.samples.iter().filter(|s| s.t >= last_event_t).collect();
    let start_delta = since_event.first().map_or(last.delta, |s| s.delta);

    if let (Some((n_end, target)), Some(j0)) = (
        final_eq.nearest_sep(last.delta),
        final_eq.basin_index(tr.first().delta),
    ) {
        let settled = tr
            .samples
            .iter()
            .filter(|s| s.t >= last.t - SETTLE_WINDOW)
            .all(|s| (s.delta - target).abs() < settle_tol && s.delta_dot.abs() < REST_RATE);
        if settled {
            let slips = (n_end - j0).unsigned_abs() as u32;
            return Ok(SimReport {
                classification: if slips == 0 {
                    Classification::ConvergedDirect
                } else {
                    Classification::ConvergedAfterSlip(slips)
                },
                final_delta: Some(last.delta),
                clearing_angle,
                cycle_slips: slips,
            });
        }
        if tr.model == Model::Sg {
            let uep = final_eq.uep.expect("uep accompanies sep");
            let j = final_eq.basin_index(start_delta).expect("equilibria exist");
            let (lo, hi) = (uep + TAU * (j - 1) as f64, uep + TAU * j as f64);
            let contained = since_event.iter().all(|s| s.delta > lo && s.delta < hi);
            return Ok(SimReport {
                classification: if contained {
                    Classification::BoundedOscillation
                } else {
                    Classification::Unbounded
                },
                final_delta: None,
                clearing_angle,
                cycle_slips: 0,
            });
        }
        return Err(inconclusive("not settled at the horizon"));
    }

    let advance = (last.delta - start_delta).abs();
    if advance > DIVERGENCE_SPAN && last.delta_dot.abs() > REST_RATE {
        Ok(SimReport {
            classification: Classification::Unbounded,
            final_delta: None,
            clearing_angle,
            cycle_slips: 0,
        })
    } else {
        Err(inconclusive(
            "no equilibrium, but the angle has not run away yet",
        ))
    }
}

/// Integrates and classifies one converter scenario.
pub fn run(
    sc: &FaultScenario,
    p: &PscParams,
    opts: &SimOptions,
) -> Result<(Trajectory, SimReport)> {
    let horizon = opts.t_end.unwrap_or_else(|| default_horizon(sc, p));
    let tr = integrate_with(sc, p, horizon, opts)?;
    let eq = find_equilibria(p, &sc.final_state());
    let report = classify(&tr, &eq, opts.settle_tol, horizon)?;
    Ok((tr, report))
}

/// Integrates and classifies one machine scenario.
pub fn run_sg(
    sc: &FaultScenario,
    p: &SgParams,
    v1: f64,
    v2: f64,
    t_end: f64,
    opts: &SimOptions,
) -> Result<(Trajectory, SimReport)> {
    let tr = sg_integrate(sc, p, v1, v2, t_end, opts)?;
    let net = sc.final_state();
    let ratio = p.p_m * net.x_transfer() / (v1 * v2);
    let eq = if ratio.abs() <= 1.0 {
        let sep = ratio.asin();
        Equilibria {
            sep: Some(sep),
            uep: Some(std::f64::consts::PI - sep),
            p_max: v1 * v2 / net.x_transfer(),
        }
    } else {
        Equilibria {
            sep: None,
            uep: None,
            p_max: v1 * v2 / net.x_transfer(),
        }
    };
    let report = classify(&tr, &eq, opts.settle_tol, t_end)?;
    Ok((tr, report))
}

/// Clearing duration (measured from fault inception) at which the angle
/// reaches the CCA, found by bisection on numeric integrations.
pub fn numeric_cct(sc: &FaultScenario, p: &PscParams, time_tol: f64) -> Result<f64> {
    if !(time_tol > 0.0) {
        return Err(Error::invalid("time_tol must be positive"));
    }
    let during = sc
        .during
        .ok_or_else(|| Error::Scenario("critical clearing needs a during-fault network".into()))?;
    let angle = cca(p, &sc.post)?;
    let delta0 = initial_angle(sc, p.p_ref / p.p_max(&sc.pre))?;
    if crate::analytic::at_cca(delta0, angle) {
        return Ok(0.0);
    }
    if delta0 > angle {
        return Err(Error::invalid(format!(
            "delta0 = {delta0} rad already lies beyond the CCA ({angle} rad)"
        )));
    }
    let during_eq = find_equilibria(p, &during);
    if let (Some(sep), Some(j)) = (during_eq.sep, during_eq.basin_index(delta0)) {
        if sep + TAU * j as f64 <= angle {
            return Err(Error::BracketFailure(format!(
                "the during-fault network holds the angle at an equilibrium below the CCA ({angle} rad)"
            )));
        }
    }

    let opts = SimOptions::default().ode();
    let angle_after = |tau: f64| -> Result<f64> {
        let out = ode::integrate(
            |_, y: &[f64; 1]| [psc_rhs(y[0], p, &during)],
            0.0,
            [delta0],
            tau,
            &opts,
            |_, _| ControlFlow::Continue(()),
        )?;
        Ok(out.y[0])
    };

    let (mut lo, mut hi) = (0.0, 1.0);
    while angle_after(hi)? <= angle {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::BracketFailure(format!(
                "the angle never reaches the CCA ({angle} rad) under the during-fault network"
            )));
        }
    }
    while hi - lo > time_tol {
        let mid = 0.5 * (lo + hi);
        if angle_after(mid)? <= angle {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn sweep_inputs(sc: &FaultScenario, clear_times: &[f64]) -> Result<()> {
    if clear_times.is_empty() {
        return Err(Error::invalid("no clearing times given"));
    }
    if sc.during.is_none() {
        return Err(Error::Scenario(
            "a clearing sweep needs a during-fault network".into(),
        ));
    }
    if let Some(bad) = clear_times.iter().find(|&&t| !(t > sc.t_fault)) {
        return Err(Error::Scenario(format!(
            "clearing time {bad} is not after the fault at {}",
            sc.t_fault
        )));
    }
    Ok(())
}

fn sweep_one(sc: &FaultScenario, p: &PscParams, opts: &SimOptions, tc: f64) -> Result<SimReport> {
    let sc = sc.with_clearing(Some(tc))?;
    run(&sc, p, opts).map(|(_, r)| r)
}

/// One report per absolute clearing time, in input order.
///
/// Runs in parallel with the `parallel` feature, sequentially otherwise.
pub fn sweep_clearing(
    sc: &FaultScenario,
    p: &PscParams,
    clear_times: &[f64],
    opts: &SimOptions,
) -> Result<Vec<SimReport>> {
    #[cfg(feature = "parallel")]
    {
        sweep_clearing_parallel(sc, p, clear_times, opts)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sweep_clearing_sequential(sc, p, clear_times, opts)
    }
}

pub fn sweep_clearing_sequential(
    sc: &FaultScenario,
    p: &PscParams,
    clear_times: &[f64],
    opts: &SimOptions,
) -> Result<Vec<SimReport>> {
    sweep_inputs(sc, clear_times)?;
    clear_times
        .iter()
        .map(|&tc| sweep_one(sc, p, opts, tc))
        .collect()
}

#[cfg(feature = "parallel")]
pub fn sweep_clearing_parallel(
    sc: &FaultScenario,
    p: &PscParams,
    clear_times: &[f64],
    opts: &SimOptions,
) -> Result<Vec<SimReport>> {
    sweep_inputs(sc, clear_times)?;
    clear_times
        .par_iter()
        .map(|&tc| sweep_one(sc, p, opts, tc))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        reduce_during_fault, reduce_post, reduce_pre, NetworkElements, NetworkLabel,
    };

    fn case1() -> FaultScenario {
        let e = NetworkElements::new(0.02, 0.85, 0.85).unwrap();
        FaultScenario::line_loss(reduce_pre(&e).unwrap(), reduce_post(&e).unwrap(), 1.0).unwrap()
    }

    fn case2(t_clear: Option<f64>) -> FaultScenario {
        let e = NetworkElements::new(0.8, 0.15, 0.8)
            .unwrap()
            .with_ground(0.5)
            .unwrap();
        FaultScenario::fault(
            reduce_pre(&e).unwrap(),
            reduce_during_fault(&e).unwrap(),
            reduce_post(&e).unwrap(),
            1.0,
            t_clear,
        )
        .unwrap()
    }

    fn psc() -> PscParams {
        PscParams::new(9.3, 1.0).unwrap()
    }

    #[test]
    fn case1_line_loss_is_monotone() {
        let (tr, rep) = run(&case1(), &psc(), &SimOptions::default()).unwrap();
        assert_eq!(rep.classification, Classification::ConvergedDirect);
        assert!((tr.first().delta.to_degrees() - 26.4).abs() < 0.05);
        assert!((rep.final_delta.unwrap().to_degrees() - 60.5).abs() < 0.05);
        assert!(tr.samples.windows(2).all(|w| w[1].delta >= w[0].delta));
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(tr.events.len(), 1);
        assert_eq!(tr.events[0].kind, EventKind::FaultOn);
    }

    #[test]
    fn samples_match_active_network() {
        let sc = case2(Some(1.5));
        let tr = integrate(&sc, &psc(), 4.0, 1e-10).unwrap();
        for s in &tr.samples {
            let net = sc.state_at(s.t);
            assert_eq!(s.p_e, transfer_power(s.delta, 1.0, 1.0, &net));
            assert!((s.delta_dot - psc_rhs(s.delta, &psc(), &net)).abs() < 1e-15);
        }
        assert_eq!(tr.last().t, 4.0);
        let cleared = tr.event(EventKind::FaultCleared).unwrap();
        assert!(tr.samples.iter().any(|s| s.t == cleared.t));
    }

    #[test]
    fn case2_outcomes() {
        let (_, r) = run(&case2(Some(1.5)), &psc(), &SimOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::ConvergedDirect);
        assert!((r.final_delta.unwrap().to_degrees() - 71.8).abs() < 0.05);

        let (_, r) = run(&case2(Some(1.7)), &psc(), &SimOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::ConvergedAfterSlip(1));
        assert!((r.final_delta.unwrap().to_degrees() - 431.8).abs() < 0.05);

        let (tr, r) = run(&case2(None), &psc(), &SimOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::Unbounded);
        let x = tr.angle_crossings(tr.first().delta, TAU);
        assert!(x.len() >= 2);
    }

    #[test]
    fn classification_reports_clearing_angle() {
        let (_, r) = run(&case2(Some(1.5)), &psc(), &SimOptions::default()).unwrap();
        assert!((r.clearing_angle.unwrap().to_degrees() - 102.0).abs() < 0.1);
    }

    #[test]
    fn short_horizon_is_inconclusive() {
        let sc = case2(Some(1.7));
        let tr = integrate(&sc, &psc(), 2.0, 1e-10).unwrap();
        let eq = find_equilibria(&psc(), &sc.post);
        assert!(matches!(
            classify(&tr, &eq, 1e-4, 2.0),
            Err(Error::Inconclusive { .. })
        ));
        assert!(classify(&tr, &eq, 1e-4, 5.0).is_err());
    }

    #[test]
    fn current_guard_truncates() {
        let mut p = psc();
        p.i_limit = 1.1;
        let (tr, r) = run(&case1(), &p, &SimOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::CurrentLimited);
        let hit = tr.event(EventKind::CurrentLimitHit).unwrap();
        assert_eq!(hit.t, tr.last().t);
        assert!(tr.last().i_g > 1.1);
        assert_eq!(check_current_limit(&tr, 1.1), Some(hit.t));
        assert_eq!(check_current_limit(&tr, f64::INFINITY), None);
    }

    #[test]
    fn forced_anti_phase_is_flagged() {
        let net = NetworkState::new(NetworkLabel::PostFault, 0.95).unwrap();
        let i = current_magnitude(std::f64::consts::PI, 1.0, 1.0, net.x_transfer());
        assert!((i - 2.105).abs() < 1e-3);
        let tr = Trajectory {
            samples: vec![Sample {
                t: 0.0,
                delta: std::f64::consts::PI,
                delta_dot: 0.0,
                p_e: 0.0,
                i_g: i,
            }],
            events: vec![],
            model: Model::Psc,
        };
        assert_eq!(check_current_limit(&tr, 1.8), Some(0.0));
    }

    #[test]
    fn numeric_cct_case2() {
        let t = numeric_cct(&case2(None), &psc(), 1e-4).unwrap();
        assert!((t - 0.580_269_816_566).abs() < 2e-4, "{t}");
    }

    #[test]
    fn numeric_cct_degenerate() {
        let sc = case2(None);
        let c = cca(&psc(), &sc.post).unwrap();
        assert_eq!(
            numeric_cct(&sc.with_delta0(c).unwrap(), &psc(), 1e-4).unwrap(),
            0.0
        );
        assert!(numeric_cct(&case1(), &psc(), 1e-4).is_err());
    }

    #[test]
    fn sweep_preserves_order_and_matches_single_runs() {
        let sc = case2(None);
        let times = [1.5, 1.7, 1.55];
        let reps = sweep_clearing(&sc, &psc(), &times, &SimOptions::default()).unwrap();
        let seq = sweep_clearing_sequential(&sc, &psc(), &times, &SimOptions::default()).unwrap();
        assert_eq!(reps, seq);
        assert_eq!(
            reps[1].classification,
            Classification::ConvergedAfterSlip(1)
        );
        for (tc, r) in times.iter().zip(&reps) {
            let (_, single) = run(
                &sc.with_clearing(Some(*tc)).unwrap(),
                &psc(),
                &SimOptions::default(),
            )
            .unwrap();
            assert_eq!(*r, single);
        }
        assert!(sweep_clearing(&sc, &psc(), &[], &SimOptions::default()).is_err());
        assert!(sweep_clearing(&sc, &psc(), &[0.5], &SimOptions::default()).is_err());
    }

    #[test]
    fn deterministic() {
        let a = integrate(&case2(Some(1.7)), &psc(), 6.0, 1e-10).unwrap();
        let b = integrate(&case2(Some(1.7)), &psc(), 6.0, 1e-10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn undamped_machine_oscillates() {
        let sc = case1();
        let sg = SgParams::new(1.0, 0.05, 0.0).unwrap();
        // small perturbation: shift pre-fault SEP a little and keep the network
        let pre = sc.pre;
        let steady = FaultScenario::line_loss(pre, pre, 0.0)
            .unwrap()
            .with_delta0(0.445f64.asin() + 0.05)
            .unwrap();
        let (tr, r) = run_sg(&steady, &sg, 1.0, 1.0, 5.0, &SimOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::BoundedOscillation);
        let sep = 0.445f64.asin();
        assert!(tr.samples.iter().any(|s| s.delta < sep - 0.04));
        assert!(tr.samples.iter().any(|s| s.delta > sep + 0.04));
    }

    #[test]
    fn machine_runs_away_without_equilibrium() {
        let sc = case2(None);
        let sg = SgParams::new(1.0, 0.05, 0.0).unwrap();
        let (tr, r) = run_sg(&sc, &sg, 1.0, 1.0, 6.0, &SimOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::Unbounded);
        let fault_on: Vec<_> = tr.samples.iter().filter(|s| s.t >= 1.0).collect();
        assert!(fault_on
            .windows(2)
            .all(|w| w[1].delta_dot > w[0].delta_dot - 1e-9 || w[1].delta_dot > 0.0));
    }

    #[test]
    fn crossings_of_a_uniform_rotation() {
        let samples: Vec<Sample> = (0..=100)
            .map(|i| {
                let t = i as f64 * 0.1;
                Sample {
                    t,
                    delta: 2.0 * t,
                    delta_dot: 2.0,
                    p_e: 0.0,
                    i_g: 0.0,
                }
            })
            .collect();
        let tr = Trajectory {
            samples,
            events: vec![],
            model: Model::Psc,
        };
        let x = tr.angle_crossings(0.0, TAU);
        assert_eq!(x.len(), 3);
        for (m, t) in x.iter().enumerate() {
            assert!((t - (m + 1) as f64 * TAU / 2.0).abs() < 1e-12);
        }
        assert!((tr.delta_at(3.05).unwrap() - 6.1).abs() < 1e-12);
    }
}
