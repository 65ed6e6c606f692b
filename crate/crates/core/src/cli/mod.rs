//! `psc-tsa` command line: scenario ingestion, dispatch and file outputs.
//!
//! Time flags (`--clear-at`, `--clear-from`, `--clear-to`) are fault durations
//! measured from fault inception. Times inside config files are absolute.

pub mod config;
pub mod report;
pub mod svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::{self, find_equilibria, EquilibriumKind};
use crate::model::{FaultScenario, NetworkLabel, NetworkState};
use crate::simulate::{self, Trajectory};

use config::{ConfigError, Resolved, ScenarioConfig};
use report::{Angle, CctRecord, Report, RunRecord, StateEquilibria, SweepRow};
use svg::{Marker, Panel, Series};

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const DOMAIN: i32 = 4;
    pub const IO: i32 = 5;
    pub const SIMULATION: i32 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Domain(crate::Error),
    #[error("simulation: {0}")]
    Simulation(crate::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Config(_) => exit::CONFIG,
            CliError::Domain(_) => exit::DOMAIN,
            CliError::Io { .. } => exit::IO,
            CliError::Simulation(_) => exit::SIMULATION,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::IntegrationFailure { .. } | crate::Error::Inconclusive { .. } => {
                CliError::Simulation(e)
            }
            other => CliError::Domain(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "psc-tsa",
    version,
    about = "Transient stability of power-synchronization controlled converters"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (JSON with unit-tagged quantities).
    #[arg(long)]
    pub config: PathBuf,
    /// Output path. JSON for equilibria/cca/cct, CSV otherwise (the JSON report
    /// and SVG are written next to it).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write an SVG plot next to `--out`.
    #[arg(long, requires = "out")]
    pub svg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Psc,
    Sg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateArg {
    Pre,
    During,
    Post,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Clear the fault this many seconds after inception.
    #[arg(long)]
    pub clear_at: Option<f64>,
    /// Never clear the fault.
    #[arg(long, conflicts_with = "clear_at")]
    pub permanent: bool,
    /// Absolute end time; defaults to a horizon long enough to classify.
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, value_enum, default_value = "psc")]
    pub model: ModelArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SEP, UEP and p_max of every network state.
    Equilibria {
        #[command(flatten)]
        common: Common,
    },
    /// Critical clearing angle of the post-fault network.
    Cca {
        #[command(flatten)]
        common: Common,
    },
    /// Critical clearing time, closed form and numeric.
    Cct {
        #[command(flatten)]
        common: Common,
        /// Initial angle override [deg].
        #[arg(long)]
        delta0_deg: Option<f64>,
        /// Bisection tolerance of the numeric CCT [s].
        #[arg(long, default_value_t = 1e-6)]
        time_tol: f64,
    },
    /// Time-domain run; writes the trajectory CSV.
    Simulate(SimulateArgs),
    /// Phase portrait δ̇(δ) of one network state.
    Portrait {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "post")]
        state: StateArg,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        from_deg: f64,
        #[arg(long, default_value_t = 360.0, allow_negative_numbers = true)]
        to_deg: f64,
        #[arg(long, default_value_t = 721)]
        n: usize,
    },
    /// Classification over a grid of fault durations.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        clear_from: f64,
        #[arg(long)]
        clear_to: f64,
        /// Grid intervals; `steps + 1` runs.
        #[arg(long)]
        steps: usize,
    },
    /// Time-domain run of the synchronous machine baseline.
    SgSimulate(SimulateArgs),
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::USAGE
            } else {
                exit::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            eprintln!("psc-tsa: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Equilibria { common } => cmd_equilibria(&common),
        Command::Cca { common } => cmd_cca(&common),
        Command::Cct {
            common,
            delta0_deg,
            time_tol,
        } => cmd_cct(&common, delta0_deg, time_tol),
        Command::Simulate(a) => cmd_simulate(&a, a.model),
        Command::SgSimulate(a) => cmd_simulate(&a, ModelArg::Sg),
        Command::Portrait {
            common,
            state,
            from_deg,
            to_deg,
            n,
        } => cmd_portrait(&common, state, from_deg, to_deg, n),
        Command::Sweep {
            common,
            clear_from,
            clear_to,
            steps,
        } => cmd_sweep(&common, clear_from, clear_to, steps),
    }
}

struct Loaded {
    text: String,
    resolved: Resolved,
}

fn load(path: &Path) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let resolved = ScenarioConfig::parse(&text)?.resolve()?;
    Ok(Loaded { text, resolved })
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn sibling(path: &Path, ext: &str) -> CliResult<PathBuf> {
    if path.extension().and_then(|e| e.to_str()) == Some(ext) {
        return Err(CliError::Usage(format!(
            "{} would be overwritten by the .{ext} output; pick another extension",
            path.display()
        )));
    }
    Ok(path.with_extension(ext))
}

fn fmt_angle(a: Option<Angle>) -> String {
    match a {
        Some(a) => format!("{:9.4}° ({:.6} rad)", a.deg, a.rad),
        None => "     none".to_string(),
    }
}

fn state_of(r: &Resolved, label: NetworkLabel) -> CliResult<NetworkState> {
    match label {
        NetworkLabel::PreFault => Ok(r.pre()),
        NetworkLabel::PostFault => Ok(r.post()),
        NetworkLabel::DuringFault => r.during().ok_or_else(|| {
            CliError::Domain(crate::Error::Scenario(
                "a line loss has no during-fault network".into(),
            ))
        }),
    }
}

fn power_angle_svg(r: &Resolved) -> String {
    let p = &r.psc;
    let grid: Vec<f64> = (0..=360).map(|i| i as f64 * 0.5).collect();
    let mut panel = Panel {
        title: format!("{}: power-angle curves", r.name),
        x_label: "delta [deg]".into(),
        y_label: "p_e [pu]".into(),
        ..Panel::default()
    };
    panel.series.push(Series {
        label: "p_ref".into(),
        points: vec![(0.0, p.p_ref), (180.0, p.p_ref)],
    });
    for net in r.networks() {
        let eq = find_equilibria(p, &net);
        panel.series.push(Series {
            label: net.label().to_string(),
            points: grid
                .iter()
                .map(|&d| (d, eq.p_max * d.to_radians().sin()))
                .collect(),
        });
        for (angle, filled) in [(eq.sep, true), (eq.uep, false)] {
            if let Some(a) = angle {
                panel.markers.push(Marker {
                    x: a.to_degrees(),
                    y: p.p_ref,
                    filled,
                });
            }
        }
    }
    svg::render(&[panel])
}

fn finish_json(common: &Common, rep: &Report) -> CliResult<()> {
    if let Some(out) = &common.out {
        write(out, &rep.to_json())?;
        if common.svg {
            write(&sibling(out, "svg")?, &power_angle_svg(&rep.parameters))?;
        }
    }
    Ok(())
}

fn cmd_equilibria(common: &Common) -> CliResult<()> {
    let l = load(&common.config)?;
    let mut rep = Report::new(l.resolved, &l.text);
    println!("{}", rep.parameters.name);
    for net in rep.parameters.networks() {
        let e = StateEquilibria::of(&rep.parameters.psc, &net);
        println!(
            "{:>12}  x = {:.6} pu  p_max = {:.6} pu  SEP {}  UEP {}",
            e.state.to_string(),
            e.x_transfer_pu,
            e.p_max_pu,
            fmt_angle(e.sep),
            fmt_angle(e.uep)
        );
        rep.equilibria.push(e);
    }
    finish_json(common, &rep)
}

fn cmd_cca(common: &Common) -> CliResult<()> {
    let l = load(&common.config)?;
    let mut rep = Report::new(l.resolved, &l.text);
    let r = &rep.parameters;
    let angle = Angle::from(analytic::cca(&r.psc, &r.post())?);
    println!("CCA = {:.4}° ({:.6} rad)", angle.deg, angle.rad);
    rep.equilibria.push(StateEquilibria::of(&r.psc, &r.post()));
    rep.cca = Some(angle);
    finish_json(common, &rep)
}

fn cmd_cct(common: &Common, delta0_deg: Option<f64>, time_tol: f64) -> CliResult<()> {
    let l = load(&common.config)?;
    let mut rep = Report::new(l.resolved, &l.text);
    let r = &rep.parameters;
    let during = state_of(r, NetworkLabel::DuringFault)?;
    let mut sc = r.scenario(None)?;
    if let Some(d) = delta0_deg {
        sc = sc.with_delta0(d.to_radians())?;
    }
    let delta0 = match sc.delta0 {
        Some(d) => d,
        None => find_equilibria(&r.psc, &r.pre()).sep.ok_or_else(|| {
            crate::Error::NoEquilibrium(
                NetworkLabel::PreFault.to_string(),
                "no steady state to start from; pass --delta0-deg".into(),
            )
        })?,
    };
    let cca = analytic::cca(&r.psc, &r.post())?;
    let analytic_s = analytic::cct(&r.psc, &during, &r.post(), delta0)?;
    let numeric_s = simulate::numeric_cct(&sc, &r.psc, time_tol)?;
    let rec = CctRecord {
        delta0: delta0.into(),
        cca: cca.into(),
        analytic_s,
        numeric_s,
        difference_s: numeric_s - analytic_s,
    };
    println!("delta0         = {:.4}°", rec.delta0.deg);
    println!(
        "CCA            = {:.4}° ({:.6} rad)",
        rec.cca.deg, rec.cca.rad
    );
    println!("CCT analytic   = {:.6} s", rec.analytic_s);
    println!("CCT numeric    = {:.6} s", rec.numeric_s);
    println!("difference     = {:.3e} s", rec.difference_s);
    rep.cca = Some(rec.cca);
    rep.cct = Some(rec);
    finish_json(common, &rep)
}

fn trajectory_svg(title: &str, tr: &Trajectory, i_limit: Option<f64>) -> String {
    let pts = |f: fn(&simulate::Sample) -> f64| -> Vec<(f64, f64)> {
        tr.samples.iter().map(|s| (s.t, f(s))).collect()
    };
    let mut i_panel = Panel {
        title: "grid current".into(),
        x_label: "t [s]".into(),
        y_label: "i_g [pu]".into(),
        series: vec![Series {
            label: "i_g".into(),
            points: pts(|s| s.i_g),
        }],
        ..Panel::default()
    };
    if let Some(lim) = i_limit {
        let (t0, t1) = (tr.first().t, tr.last().t);
        i_panel.series.push(Series {
            label: "i_limit".into(),
            points: vec![(t0, lim), (t1, lim)],
        });
    }
    svg::render(&[
        Panel {
            title: format!("{title}: power angle"),
            x_label: "t [s]".into(),
            y_label: "delta [deg]".into(),
            series: vec![Series {
                label: "delta".into(),
                points: pts(|s| s.delta.to_degrees()),
            }],
            ..Panel::default()
        },
        Panel {
            title: "active power".into(),
            x_label: "t [s]".into(),
            y_label: "p_e [pu]".into(),
            series: vec![Series {
                label: "p_e".into(),
                points: pts(|s| s.p_e),
            }],
            ..Panel::default()
        },
        i_panel,
    ])
}

fn clearing_override(r: &Resolved, a: &SimulateArgs) -> CliResult<Option<Option<f64>>> {
    if a.permanent {
        return Ok(Some(None));
    }
    match a.clear_at {
        None => Ok(None),
        Some(d) if !(d > 0.0 && d.is_finite()) => Err(CliError::Usage(format!(
            "--clear-at must be positive, got {d}"
        ))),
        Some(d) => Ok(Some(Some(r.t_fault + d))),
    }
}

fn cmd_simulate(a: &SimulateArgs, model: ModelArg) -> CliResult<()> {
    let l = load(&a.common.config)?;
    let mut rep = Report::new(l.resolved, &l.text);
    let r = &rep.parameters;
    let sc: FaultScenario = r.scenario(clearing_override(r, a)?)?;
    let mut opts = r.sim;
    if a.t_end.is_some() {
        opts.t_end = a.t_end;
    }
    let (tr, sim_report) = match model {
        ModelArg::Psc => simulate::run(&sc, &r.psc, &opts)?,
        ModelArg::Sg => {
            let sg = r.sg.as_ref().ok_or_else(|| ConfigError {
                field: "sg".into(),
                message: "the machine model needs an sg block".into(),
            })?;
            let t_end = opts.t_end.unwrap_or(sc.last_event() + 20.0);
            simulate::run_sg(&sc, sg, r.psc.v_mref, r.psc.v_g, t_end, &opts)?
        }
    };

    println!("classification  {}", sim_report.classification);
    if let Some(d) = sim_report.clearing_angle {
        println!("clearing angle  {:.4}°", d.to_degrees());
    }
    if let Some(d) = sim_report.final_delta {
        println!("final angle     {:.4}°", d.to_degrees());
    }
    println!("cycle slips     {}", sim_report.cycle_slips);
    for e in &tr.events {
        println!("event           {:?} at t = {:.6} s", e.kind, e.t);
    }

    let clear_after = sc.t_clear.map(|tc| tc - sc.t_fault);
    rep.equilibria = r
        .networks()
        .iter()
        .map(|n| StateEquilibria::of(&r.psc, n))
        .collect();
    rep.runs.push(RunRecord::new(&tr, sim_report, clear_after));

    if let Some(out) = &a.common.out {
        let json = sibling(out, "json")?;
        write(out, &report::trajectory_csv(&tr))?;
        write(&json, &rep.to_json())?;
        if a.common.svg {
            let limit = (model == ModelArg::Psc).then_some(rep.parameters.psc.i_limit);
            write(
                &sibling(out, "svg")?,
                &trajectory_svg(&rep.parameters.name, &tr, limit),
            )?;
        }
    }
    Ok(())
}

fn cmd_portrait(
    common: &Common,
    state: StateArg,
    from_deg: f64,
    to_deg: f64,
    n: usize,
) -> CliResult<()> {
    let l = load(&common.config)?;
    let mut rep = Report::new(l.resolved, &l.text);
    let r = &rep.parameters;
    let label = match state {
        StateArg::Pre => NetworkLabel::PreFault,
        StateArg::During => NetworkLabel::DuringFault,
        StateArg::Post => NetworkLabel::PostFault,
    };
    let net = state_of(r, label)?;
    let portrait =
        analytic::sample_portrait(&r.psc, &net, from_deg.to_radians(), to_deg.to_radians(), n)?;
    println!("{} portrait, {} samples", label, portrait.samples.len());
    for e in &portrait.equilibria {
        let kind = match e.kind {
            EquilibriumKind::Sep => "SEP",
            EquilibriumKind::Uep => "UEP",
        };
        println!(
            "{kind} at {:.4}° ({:.6} rad)",
            e.delta.to_degrees(),
            e.delta
        );
    }
    rep.equilibria.push(StateEquilibria::of(&r.psc, &net));

    if let Some(out) = &common.out {
        let json = sibling(out, "json")?;
        write(out, &report::portrait_csv(&portrait))?;
        write(&json, &rep.to_json())?;
        if common.svg {
            let panel = Panel {
                title: format!("{}: {} phase portrait", rep.parameters.name, label),
                x_label: "delta [deg]".into(),
                y_label: "d(delta)/dt [rad/s]".into(),
                series: vec![Series {
                    label: label.to_string(),
                    points: portrait
                        .samples
                        .iter()
                        .map(|&(d, dd)| (d.to_degrees(), dd))
                        .collect(),
                }],
                markers: portrait
                    .equilibria
                    .iter()
                    .map(|e| Marker {
                        x: e.delta.to_degrees(),
                        y: 0.0,
                        filled: e.kind == EquilibriumKind::Sep,
                    })
                    .collect(),
                zero_line: true,
            };
            write(&sibling(out, "svg")?, &svg::render(&[panel]))?;
        }
    }
    Ok(())
}

/// `steps + 1` fault durations spanning `[from, to]`.
pub fn duration_grid(from: f64, to: f64, steps: usize) -> CliResult<Vec<f64>> {
    if steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    if !(from > 0.0 && to >= from && to.is_finite()) {
        return Err(CliError::Usage(format!(
            "need 0 < --clear-from <= --clear-to, got {from} and {to}"
        )));
    }
    let h = (to - from) / steps as f64;
    Ok((0..=steps)
        .map(|i| if i == steps { to } else { from + h * i as f64 })
        .collect())
}

fn cmd_sweep(common: &Common, from: f64, to: f64, steps: usize) -> CliResult<()> {
    let durations = duration_grid(from, to, steps)?;
    let l = load(&common.config)?;
    let mut rep = Report::new(l.resolved, &l.text);
    let r = &rep.parameters;
    let sc = r.scenario(None)?;
    let clear_times: Vec<f64> = durations.iter().map(|d| sc.t_fault + d).collect();
    let reports = simulate::sweep_clearing(&sc, &r.psc, &clear_times, &r.sim)?;
    let rows: Vec<SweepRow> = durations
        .iter()
        .zip(&reports)
        .map(|(&d, &rep)| SweepRow {
            clear_after_s: d,
            report: rep,
        })
        .collect();
    let csv = report::sweep_csv(&rows);
    rep.runs = rows
        .iter()
        .map(|row| RunRecord {
            model: simulate::Model::Psc,
            clear_after_s: Some(row.clear_after_s),
            t_end: None,
            report: row.report,
            events: Vec::new(),
        })
        .collect();

    match &common.out {
        None => print!("{csv}"),
        Some(out) => {
            let json = sibling(out, "json")?;
            write(out, &csv)?;
            write(&json, &rep.to_json())?;
            if common.svg {
                let angle = Panel {
                    title: format!("{}: clearing sweep", rep.parameters.name),
                    x_label: "fault duration [s]".into(),
                    y_label: "clearing angle [deg]".into(),
                    series: vec![Series {
                        label: "clearing angle".into(),
                        points: rows
                            .iter()
                            .filter_map(|row| {
                                row.report
                                    .clearing_angle
                                    .map(|a| (row.clear_after_s, a.to_degrees()))
                            })
                            .collect(),
                    }],
                    ..Panel::default()
                };
                let slips = Panel {
                    title: "cycle slips before resynchronization".into(),
                    x_label: "fault duration [s]".into(),
                    y_label: "slips".into(),
                    series: vec![Series {
                        label: "cycle slips".into(),
                        points: rows
                            .iter()
                            .map(|row| (row.clear_after_s, row.report.cycle_slips as f64))
                            .collect(),
                    }],
                    ..Panel::default()
                };
                write(&sibling(out, "svg")?, &svg::render(&[angle, slips]))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_steps_plus_one_points() {
        let g = duration_grid(0.1, 1.0, 90).unwrap();
        assert_eq!(g.len(), 91);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[90], 1.0);
        assert!((g[47] - 0.57).abs() < 1e-12);
        assert!(duration_grid(0.1, 1.0, 0).is_err());
        assert!(duration_grid(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn error_codes_are_distinct() {
        let codes = [
            CliError::Usage(String::new()).exit_code(),
            CliError::from(ConfigError {
                field: String::new(),
                message: String::new(),
            })
            .exit_code(),
            CliError::from(crate::Error::BracketFailure(String::new())).exit_code(),
            CliError::Io {
                path: PathBuf::new(),
                source: std::io::Error::other("x"),
            }
            .exit_code(),
            CliError::from(crate::Error::IntegrationFailure { t: 0.0, delta: 0.0 }).exit_code(),
        ];
        let mut sorted = codes.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), codes.len());
        assert!(!codes.contains(&exit::SUCCESS));
    }

    #[test]
    fn sibling_refuses_to_clobber() {
        assert!(sibling(Path::new("run.json"), "json").is_err());
        assert_eq!(
            sibling(Path::new("run.csv"), "svg").unwrap(),
            PathBuf::from("run.svg")
        );
    }
}
