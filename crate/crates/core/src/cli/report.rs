//! JSON report and CSV writers.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{find_equilibria, PhasePortrait};
use crate::dynamics::PscParams;
use crate::model::{NetworkLabel, NetworkState};
use crate::simulate::{Event, Model, SimReport, Trajectory};

use super::config::Resolved;

pub const TRAJECTORY_HEADER: &str = "t,delta_rad,delta_dot_rad_s,p_e_pu,i_g_pu";
pub const PORTRAIT_HEADER: &str = "delta_rad,delta_dot_rad_s";
pub const SWEEP_HEADER: &str = "clear_time_s,clearing_angle_deg,classification,cycle_slips";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    pub rad: f64,
    pub deg: f64,
}

impl From<f64> for Angle {
    fn from(rad: f64) -> Self {
        Self {
            rad,
            deg: rad.to_degrees(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEquilibria {
    pub state: NetworkLabel,
    pub x_transfer_pu: f64,
    pub p_max_pu: f64,
    pub sep: Option<Angle>,
    pub uep: Option<Angle>,
}

impl StateEquilibria {
    pub fn of(p: &PscParams, net: &NetworkState) -> Self {
        let eq = find_equilibria(p, net);
        Self {
            state: net.label(),
            x_transfer_pu: net.x_transfer(),
            p_max_pu: eq.p_max,
            sep: eq.sep.map(Angle::from),
            uep: eq.uep.map(Angle::from),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CctRecord {
    pub delta0: Angle,
    pub cca: Angle,
    pub analytic_s: f64,
    pub numeric_s: f64,
    pub difference_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: Model,
    /// Fault duration from inception; absent for a line loss or a permanent fault.
    pub clear_after_s: Option<f64>,
    pub t_end: Option<f64>,
    pub report: SimReport,
    pub events: Vec<Event>,
}

impl RunRecord {
    pub fn new(tr: &Trajectory, report: SimReport, clear_after_s: Option<f64>) -> Self {
        Self {
            model: tr.model,
            clear_after_s,
            t_end: Some(tr.last().t),
            report,
            events: tr.events.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
}

impl Provenance {
    pub fn of(config_text: &str) -> Self {
        let digest = Sha256::digest(config_text.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: hex,
        }
    }
}

/// Everything one command computed. Fields a command does not touch stay empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub parameters: Resolved,
    pub equilibria: Vec<StateEquilibria>,
    pub cca: Option<Angle>,
    pub cct: Option<CctRecord>,
    pub runs: Vec<RunRecord>,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(parameters: Resolved, config_text: &str) -> Self {
        Self {
            parameters,
            equilibria: Vec::new(),
            cca: None,
            cct: None,
            runs: Vec::new(),
            provenance: Provenance::of(config_text),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

// `{}` on f64 prints the shortest string that parses back to the same value,
// independent of locale.
pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut out = String::with_capacity(64 * (tr.samples.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &tr.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.t, s.delta, s.delta_dot, s.p_e, s.i_g
        );
    }
    out
}

pub fn portrait_csv(p: &PhasePortrait) -> String {
    let mut out = String::from(PORTRAIT_HEADER);
    out.push('\n');
    for (d, dd) in &p.samples {
        let _ = writeln!(out, "{d},{dd}");
    }
    out
}

pub struct SweepRow {
    pub clear_after_s: f64,
    pub report: SimReport,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let angle = r
            .report
            .clearing_angle
            .map(|a| a.to_degrees().to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.clear_after_s, angle, r.report.classification, r.report.cycle_slips
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{Classification, Sample};

    #[test]
    fn csv_is_exact() {
        let tr = Trajectory {
            samples: vec![Sample {
                t: 0.1,
                delta: 1.0 / 3.0,
                delta_dot: -0.0,
                p_e: 1e-17,
                i_g: 2.0,
            }],
            events: vec![],
            model: Model::Psc,
        };
        let csv = trajectory_csv(&tr);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|f| f.parse().unwrap())
            .collect();
        assert_eq!(row, vec![0.1, 1.0 / 3.0, 0.0, 1e-17, 2.0]);
    }

    #[test]
    fn sweep_rows() {
        let rows = [SweepRow {
            clear_after_s: 0.5,
            report: SimReport {
                classification: Classification::ConvergedAfterSlip(2),
                final_delta: Some(1.0),
                clearing_angle: None,
                cycle_slips: 2,
            },
        }];
        assert_eq!(
            sweep_csv(&rows),
            format!("{SWEEP_HEADER}\n0.5,,ConvergedAfterSlip(2),2\n")
        );
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            Provenance::of("abc").config_sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
