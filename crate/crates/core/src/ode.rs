//! Dormand–Prince 5(4) embedded Runge–Kutta integrator for small fixed-size systems.
//!
//! Integration always stops exactly at the requested end time so that network
//! switching instants are step boundaries.

use std::ops::ControlFlow;

use crate::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step, which also bounds the spacing of recorded samples.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.01,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    /// The observer asked to stop before the end time.
    pub stopped: bool,
    pub steps: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], opts: &Options) -> f64 {
    let mut sum = 0.0;
    for i in 0..N {
        let sc = opts.abs_tol + opts.rel_tol * y0[i].abs().max(y1[i].abs());
        sum += (err[i] / sc).powi(2);
    }
    (sum / N as f64).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (`t1 >= t0`).
///
/// `observer` sees every accepted step (not the initial point) and may return
/// `ControlFlow::Break` to stop at that step.
pub fn integrate<const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &Options,
    mut observer: O,
) -> Result<Outcome<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]) -> ControlFlow<()>,
{
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0 && opts.max_step > 0.0) {
        return Err(Error::invalid("tolerances and max_step must be positive"));
    }
    if !(t1 >= t0) {
        return Err(Error::invalid(format!("end time {t1} precedes start {t0}")));
    }
    let mut t = t0;
    let mut y = y0;
    if t1 == t0 {
        return Ok(Outcome {
            t,
            y,
            stopped: false,
            steps: 0,
        });
    }

    let mut k1 = f(t, &y);
    let mut h = initial_step(&mut f, t, &y, &k1, t1 - t0, opts);
    let mut steps = 0;
    let mut last_rejected = false;

    while t < t1 {
        if steps >= opts.max_steps {
            return Err(Error::IntegrationFailure { t, delta: y[0] });
        }
        let remaining = t1 - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h <= 1e-14 * t.abs().max(1.0) && !last {
            return Err(Error::IntegrationFailure { t, delta: y[0] });
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let t_new = if last { t1 } else { t + h };
        let k7 = f(t_new, &y_new);

        let mut err = [0.0; N];
        for i in 0..N {
            err[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &y_new, opts);
        if !en.is_finite() {
            h *= FAC_MIN;
            last_rejected = true;
            continue;
        }

        if en <= 1.0 {
            t = t_new;
            y = y_new;
            k1 = k7;
            steps += 1;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::IntegrationFailure { t, delta: y[0] });
            }
            if observer(t, &y).is_break() {
                return Ok(Outcome {
                    t,
                    y,
                    stopped: true,
                    steps,
                });
            }
            let fac_max = if last_rejected { 1.0 } else { FAC_MAX };
            let fac = if en == 0.0 {
                fac_max
            } else {
                (SAFETY * en.powf(-0.2)).clamp(FAC_MIN, fac_max)
            };
            h = (h * fac).min(opts.max_step);
            last_rejected = false;
        } else {
            h *= (SAFETY * en.powf(-0.2)).max(FAC_MIN);
            last_rejected = true;
        }
    }

    Ok(Outcome {
        t,
        y,
        stopped: false,
        steps,
    })
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    span: f64,
    opts: &Options,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let scale = |i: usize| opts.abs_tol + opts.rel_tol * y[i].abs();
    let norm = |v: &[f64; N]| {
        let s: f64 = (0..N).map(|i| (v[i] / scale(i)).powi(2)).sum();
        (s / N as f64).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span).min(opts.max_step);
    let y1 = axpy(y, h0, &[(1.0, f0)]);
    let f1 = f(t + h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span).min(opts.max_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let out = integrate(
            |_, y: &[f64; 1]| [-2.0 * y[0]],
            0.0,
            [1.0],
            3.0,
            &Options::default(),
            |_, _| ControlFlow::Continue(()),
        )
        .unwrap();
        assert_eq!(out.t, 3.0);
        assert!((out.y[0] - (-6.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator() {
        let opts = Options {
            max_step: 1.0,
            ..Options::default()
        };
        let out = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            20.0,
            &opts,
            |_, _| ControlFlow::Continue(()),
        )
        .unwrap();
        assert!((out.y[0] - 20f64.cos()).abs() < 1e-8);
        assert!((out.y[1] + 20f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn observer_can_stop() {
        let mut seen = Vec::new();
        let out = integrate(
            |_, _: &[f64; 1]| [1.0],
            0.0,
            [0.0],
            10.0,
            &Options::default(),
            |t, y| {
                seen.push(t);
                if y[0] > 0.5 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            },
        )
        .unwrap();
        assert!(out.stopped);
        assert!(out.y[0] > 0.5 && out.y[0] < 0.52);
        assert!(seen.windows(2).all(|w| w[1] > w[0]));
        assert!(seen.windows(2).all(|w| w[1] - w[0] <= 0.01 + 1e-15));
    }

    #[test]
    fn zero_span_is_identity() {
        let out = integrate(
            |_, y: &[f64; 1]| [y[0]],
            1.0,
            [2.0],
            1.0,
            &Options::default(),
            |_, _| ControlFlow::Continue(()),
        )
        .unwrap();
        assert_eq!(out.y, [2.0]);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn blow_up_is_reported() {
        let r = integrate(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            0.0,
            [1.0],
            2.0,
            &Options::default(),
            |_, _| ControlFlow::Continue(()),
        );
        assert!(matches!(r, Err(Error::IntegrationFailure { .. })));
    }
}
