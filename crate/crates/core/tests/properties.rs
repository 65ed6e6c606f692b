use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use psc_tsa::analytic::{cca, closed_form_time, find_equilibria, slip_period};
use psc_tsa::cli::config::{Quantity, ScenarioConfig, Unit};
use psc_tsa::cli::report::{Report, RunRecord};
use psc_tsa::dynamics::{psc_rhs, PscParams};
use psc_tsa::model::{
    from_per_unit, reduce_during_fault, reduce_post, reduce_pre, to_per_unit, NetworkElements,
    NetworkLabel, NetworkState, PerUnitBase, QuantityKind,
};

/// Transfer reactance between node 0 and the last node of a purely inductive
/// network, by eliminating every other node from the nodal susceptance matrix.
/// `branches` are `(from, to, x)`; `None` is ground.
#[allow(clippy::needless_range_loop)]
fn kron_transfer(n: usize, branches: &[(usize, Option<usize>, f64)]) -> f64 {
    let mut y = vec![vec![0.0; n]; n];
    for &(i, j, x) in branches {
        let b = 1.0 / x;
        y[i][i] += b;
        if let Some(j) = j {
            y[j][j] += b;
            y[i][j] -= b;
            y[j][i] -= b;
        }
    }
    // Schur complement onto {0, n-1}
    for k in (1..n - 1).rev() {
        let pivot = y[k][k];
        for i in 0..n {
            for j in 0..n {
                if i != k && j != k {
                    y[i][j] -= y[i][k] * y[k][j] / pivot;
                }
            }
        }
        for i in 0..n {
            y[i][k] = 0.0;
            y[k][i] = 0.0;
        }
    }
    -1.0 / y[0][n - 1]
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn reactance() -> impl Strategy<Value = f64> {
    (-3.0f64..1.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #[test]
    fn reductions_match_nodal_elimination(
        x_t in reactance(), x_g1 in reactance(), x_g2 in reactance(), x_gnd in reactance()
    ) {
        let e = NetworkElements::new(x_t, x_g1, x_g2).unwrap().with_ground(x_gnd).unwrap();
        // nodes: 0 converter, 1 star point, 2 grid
        let pre = kron_transfer(3, &[(0, Some(1), x_t), (1, Some(2), x_g1), (1, Some(2), x_g2)]);
        let during = kron_transfer(
            3,
            &[(0, Some(1), x_t), (1, Some(2), x_g1), (1, Some(2), x_g2), (1, None, x_gnd)],
        );
        let post = kron_transfer(3, &[(0, Some(1), x_t), (1, Some(2), x_g1)]);
        prop_assert!(close(reduce_pre(&e).unwrap().x_transfer(), pre, 1e-12));
        prop_assert!(close(reduce_during_fault(&e).unwrap().x_transfer(), during, 1e-12));
        prop_assert!(close(reduce_post(&e).unwrap().x_transfer(), post, 1e-12));
        prop_assert!(reduce_during_fault(&e).unwrap().x_transfer() > reduce_pre(&e).unwrap().x_transfer());
    }

    #[test]
    fn per_unit_round_trip(
        s in 1e2f64..1e10, v in 10f64..1e6, f in prop::sample::select(vec![50.0, 60.0]),
        value in 1e-6f64..1e9,
        kind in prop::sample::select(vec![
            QuantityKind::Inductance, QuantityKind::Impedance, QuantityKind::Power,
            QuantityKind::Voltage, QuantityKind::Gain,
        ]),
    ) {
        let base = PerUnitBase::new(s, v, f).unwrap();
        let back = from_per_unit(to_per_unit(value, kind, &base), kind, &base);
        prop_assert!(close(back, value, 1e-13));
    }

    #[test]
    fn rhs_is_periodic_and_signed(
        k in 0.1f64..50.0, p_ref in -2.0f64..2.0, x in 0.05f64..3.0, delta in -20.0f64..20.0
    ) {
        let p = PscParams::new(k, p_ref).unwrap();
        let net = NetworkState::new(NetworkLabel::PostFault, x).unwrap();
        let f = psc_rhs(delta, &p, &net);
        let g = psc_rhs(delta + TAU, &p, &net);
        prop_assert!((f - g).abs() <= 1e-12 * k * (p_ref.abs() + 1.0 / x));

        let eq = find_equilibria(&p, &net);
        match (eq.sep, eq.uep) {
            (Some(sep), Some(uep)) if sep < uep - 1e-6 => {
                let j = ((delta - sep) / TAU).floor();
                let d = delta - TAU * j; // in [sep, sep + 2π)
                if d > sep + 1e-9 && d < uep - 1e-9 {
                    prop_assert!(f < 0.0);
                } else if d > uep + 1e-9 && d < sep + TAU - 1e-9 {
                    prop_assert!(f > 0.0);
                }
            }
            (None, None) => prop_assert_eq!(f.signum(), p_ref.signum()),
            _ => {}
        }
    }

    #[test]
    fn closed_form_is_monotone_and_slips_periodically(
        a in 0.5f64..20.0, ratio in -0.95f64..0.95, delta0 in -PI..PI,
        span1 in 0.0f64..6.0, span2 in 0.0f64..6.0, n in 1usize..4,
    ) {
        let b = a * ratio;
        let (lo, hi) = (span1.min(span2), span1.max(span2));
        let t_lo = closed_form_time(delta0 + lo, delta0, a, b).unwrap();
        let t_hi = closed_form_time(delta0 + hi, delta0, a, b).unwrap();
        prop_assert!(t_lo <= t_hi);
        prop_assert!(t_lo >= 0.0);
        let t_n = closed_form_time(delta0 + lo + TAU * n as f64, delta0, a, b).unwrap();
        let period = slip_period(a, b).unwrap();
        prop_assert!((t_n - t_lo - n as f64 * period).abs() <= 1e-9 * (t_n + 1.0));
    }

    #[test]
    fn cca_ignores_the_fault_network(
        x_gnd in reactance(), x_t in 0.01f64..0.5, x_g1 in 0.05f64..0.5, x_g2 in 0.05f64..2.0
    ) {
        let p = PscParams::new(9.3, 1.0).unwrap();
        let a = NetworkElements::new(x_t, x_g1, x_g2).unwrap().with_ground(x_gnd).unwrap();
        let b = NetworkElements::new(x_t, x_g1, x_g2 * 3.0).unwrap().with_ground(0.5).unwrap();
        let ca = cca(&p, &reduce_post(&a).unwrap()).unwrap();
        let cb = cca(&p, &reduce_post(&b).unwrap()).unwrap();
        prop_assert_eq!(ca.to_bits(), cb.to_bits());
    }

    #[test]
    fn config_round_trip(
        x_t in 0.01f64..1.0, x_g1_mh in 10.0f64..900.0, x_gnd in 0.01f64..2.0,
        k in 1e-10f64..1e-8, p_ref_mw in 0.0f64..1500.0, t_fault in 0.0f64..3.0, dur in 0.01f64..2.0,
    ) {
        let path = format!("{}/scenarios/case2.json", env!("CARGO_MANIFEST_DIR"));
        let mut c = ScenarioConfig::parse(&std::fs::read_to_string(path).unwrap()).unwrap();
        c.elements.x_t = Quantity::new(x_t, Unit::Pu);
        c.elements.x_g1 = Quantity::new(x_g1_mh, Unit::MilliH);
        c.elements.x_gnd = Some(Quantity::new(x_gnd, Unit::Pu));
        c.psc.k = Quantity::new(k, Unit::RadPerWattSecond);
        c.psc.p_ref = Quantity::new(p_ref_mw, Unit::MW);
        c.fault.t_fault = t_fault;
        c.fault.t_clear = Some(t_fault + dur);
        let again = ScenarioConfig::parse(&c.to_json()).unwrap();
        prop_assert_eq!(&c, &again);
        prop_assert_eq!(c.resolve().unwrap(), again.resolve().unwrap());
    }
}

#[test]
fn report_round_trip_is_lossless() {
    let path = format!("{}/scenarios/case2.json", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    let r = ScenarioConfig::parse(&text).unwrap().resolve().unwrap();
    let sc = r.scenario(Some(Some(r.t_fault + 0.7))).unwrap();
    let (tr, sim) = psc_tsa::simulate::run(&sc, &r.psc, &r.sim).unwrap();
    let mut rep = Report::new(r.clone(), &text);
    rep.equilibria = r
        .networks()
        .iter()
        .map(|n| psc_tsa::cli::report::StateEquilibria::of(&r.psc, n))
        .collect();
    rep.cca = Some(cca(&r.psc, &r.post()).unwrap().into());
    rep.runs.push(RunRecord::new(&tr, sim, Some(0.7)));
    let back = Report::from_json(&rep.to_json()).unwrap();
    assert_eq!(back, rep);
}
