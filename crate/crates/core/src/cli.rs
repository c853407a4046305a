//! Scenario runner behind the `gvf` binary.
//!
//! Exit codes: 0 on success (including runs that stop at a singular point or
//! in the excluded heading set, which is recorded in `report.json`), 2 for
//! invalid input, 3 for I/O failures.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{distance_to_path, guiding_point_trace, ConvergenceReport};
use crate::error::GvfError;
use crate::field::singular_scan;
use crate::output::{trajectory_plots, write_trajectory, LinePlot, Series, PALETTE};
use crate::scenario::{bundled, parse_scenario, sweep_start, Built, ScenarioFile};
use crate::sim::{simulate, Termination, Trajectory};

pub const REPRODUCTIONS: [&str; 4] = ["trefoil", "lissajous3d", "circle-impossibility", "figure8-scan"];

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Input(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<GvfError> for CliError {
    fn from(e: GvfError) -> Self {
        CliError::Input(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write(path, &text)
}

fn prepare(out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_scenario(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Units of the quantities in `trajectory.csv` and `report.json`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Units {
    pub length: &'static str,
    pub angle: &'static str,
    pub time: &'static str,
}

const UNITS: Units = Units {
    length: "m",
    angle: "rad",
    time: "s",
};

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GuidingPointSummary {
    pub w_dot_sign_changes: usize,
    pub bidirectional: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub model: &'static str,
    pub lambda: Option<f64>,
    pub r2: Option<f64>,
    pub ultimate_bound: f64,
    pub final_error: f64,
    pub termination: Termination,
    pub records: usize,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    /// Largest `|phi_i|` after burn-in, in surface units.
    pub settled_phi_max: Vec<f64>,
    /// Largest coordinate deviation `|x_i - f_i(w)|` after burn-in, in meters
    /// (parametric paths only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settled_deviation_max: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_distance_after_burn_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guiding_point: Option<GuidingPointSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singular_points: Option<Vec<Vec<f64>>>,
    pub units: Units,
}

const DISTANCE_POINTS: usize = 200;

fn name_of(file: &ScenarioFile) -> String {
    file.name.clone().unwrap_or_else(|| file.path.kind.clone())
}

/// Simulates a validated scenario and summarizes it.
pub fn analyze(file: &ScenarioFile, built: &Built, traj: &Trajectory) -> Result<RunReport> {
    let a = &file.analysis;
    let conv = ConvergenceReport::from_trajectory(traj, a.burn_in, a.r2_threshold, None)?;
    let t0 = traj.records[0].t;
    let start = t0 + a.burn_in * (traj.last().t - t0);
    let settled: Vec<&crate::sim::Record> = traj.records.iter().filter(|r| r.t >= start).collect();
    let k = traj.gains.len();
    let settled_phi_max: Vec<f64> = (0..k)
        .map(|i| settled.iter().map(|r| r.e[i].abs()).fold(0.0, f64::max))
        .collect();
    let settled_deviation_max = built
        .path
        .as_ref()
        .map(|_| settled_phi_max.iter().map(|p| p / file.path.scale).collect());

    let (mut final_distance, mut max_distance) = (None, None);
    if let (Some(path), Some([lo, hi])) = (&built.path, a.distance_w_range) {
        let stride = traj.records.len().div_ceil(DISTANCE_POINTS).max(1);
        let last = traj.records.len() - 1;
        let mut worst: f64 = 0.0;
        for (i, r) in traj.records.iter().enumerate() {
            if i % stride != 0 && i != last {
                continue;
            }
            let p = DVector::from_vec(traj.position(r));
            let d = distance_to_path(&p, path, (lo, hi), a.distance_samples)?.distance;
            if r.t >= start {
                worst = worst.max(d);
            }
            if i == last {
                final_distance = Some(d);
            }
        }
        max_distance = Some(worst);
    }
    let guiding_point = match &built.path {
        Some(path) if traj.layout.virtual_coordinate => {
            let trace = guiding_point_trace(traj, path)?;
            Some(GuidingPointSummary {
                w_dot_sign_changes: trace.sign_changes,
                bidirectional: trace.bidirectional,
            })
        }
        _ => None,
    };
    let last = traj.last();
    let mut final_state: Vec<f64> = last.xi.iter().copied().collect();
    if let Some(theta) = last.theta {
        final_state.push(theta);
    }
    Ok(RunReport {
        scenario: name_of(file),
        model: traj.model.as_str(),
        lambda: conv.lambda,
        r2: conv.r2,
        ultimate_bound: conv.ultimate_bound,
        final_error: conv.final_error,
        termination: conv.termination,
        records: traj.records.len(),
        final_time: last.t,
        final_state,
        settled_phi_max,
        settled_deviation_max,
        final_distance,
        max_distance_after_burn_in: max_distance,
        guiding_point,
        singular_points: None,
        units: UNITS,
    })
}

fn path_trace(built: &Built, file: &ScenarioFile, traj: &Trajectory) -> Option<Vec<Vec<f64>>> {
    let path = built.path.as_ref()?;
    let (lo, hi) = match file.analysis.distance_w_range {
        Some([lo, hi]) => (lo, hi),
        None => {
            let w: Vec<f64> = traj.records.iter().filter_map(|r| traj.w(r)).collect();
            let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                return None;
            }
            (lo, hi)
        }
    };
    let n = 2000;
    Some(
        (0..=n)
            .map(|i| path.point(lo + (hi - lo) * i as f64 / n as f64).iter().copied().collect())
            .collect(),
    )
}

fn scan_points(file: &ScenarioFile, built: &Built) -> Result<Option<Vec<Vec<f64>>>> {
    let (Some(region), Some(spec)) = (file.scan_box(), &file.scan) else {
        return Ok(None);
    };
    let pts = singular_scan(built.field.as_ref(), &region, spec.grid)?;
    Ok(Some(pts.into_iter().map(|p| p.iter().copied().collect()).collect()))
}

/// `run`: simulation, report, CSV, plots and an echo of the scenario.
pub fn run_file(file: &ScenarioFile, out_dir: &Path) -> Result<RunReport> {
    let built = file.build()?;
    let traj = simulate(&built.scenario)?;
    let mut report = analyze(file, &built, &traj)?;
    report.singular_points = scan_points(file, &built)?;
    prepare(out_dir)?;
    write_json(&out_dir.join("scenario.json"), file)?;
    if file.outputs.csv {
        let p = out_dir.join("trajectory.csv");
        write_trajectory(&traj, &p).map_err(|e| io_err(&p, e))?;
    }
    if file.outputs.svg {
        let trace = path_trace(&built, file, &traj);
        for (name, svg) in trajectory_plots(&traj, trace.as_deref()) {
            write(&out_dir.join(name), &svg)?;
        }
    }
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ScanReport {
    pub scenario: String,
    pub grid: usize,
    #[serde(rename = "box")]
    pub region: Vec<[f64; 2]>,
    pub singular_points: Vec<Vec<f64>>,
    /// `|chi|` at each reported point.
    pub residuals: Vec<f64>,
}

/// `scan`: singular points of the scenario's field inside `scan.box`.
pub fn scan_file(file: &ScenarioFile, out_dir: &Path) -> Result<ScanReport> {
    let spec = file
        .scan
        .as_ref()
        .ok_or_else(|| CliError::Input("scan: scenario has no `scan` section".into()))?;
    let built = file.build()?;
    let points = scan_points(file, &built)?.unwrap_or_default();
    let residuals = points
        .iter()
        .map(|p| built.field.sample(&DVector::from_column_slice(p)).map(|s| s.chi.norm()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let report = ScanReport {
        scenario: name_of(file),
        grid: spec.grid,
        region: spec.region.clone(),
        singular_points: points,
        residuals,
    };
    prepare(out_dir)?;
    write_json(&out_dir.join("scenario.json"), file)?;
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepEntry {
    pub index: usize,
    pub initial_position: Vec<f64>,
    pub initial_theta: f64,
    pub initial_w: f64,
    pub final_error: f64,
    pub lambda: Option<f64>,
    pub termination: Termination,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepReport {
    pub scenario: String,
    pub seed: u64,
    pub count: usize,
    pub converged: usize,
    pub max_final_error: f64,
    pub entries: Vec<SweepEntry>,
}

/// `sweep`: independent runs from seeded random starts, in parallel;
/// entries are ordered by start index.
pub fn sweep_file(file: &ScenarioFile, out_dir: Option<&Path>, threads: Option<usize>) -> Result<SweepReport> {
    let spec = file
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Input("sweep: scenario has no `sweep` section".into()))?;
    let built = file.build()?;
    let base = file.initial_state();
    let one = |index: usize| -> Result<SweepEntry> {
        let mut scenario = built.scenario.clone();
        scenario.initial = sweep_start(spec, &base, index);
        let traj = simulate(&scenario)?;
        let conv = ConvergenceReport::from_trajectory(&traj, file.analysis.burn_in, file.analysis.r2_threshold, None)?;
        Ok(SweepEntry {
            index,
            initial_position: scenario.initial.position.clone(),
            initial_theta: scenario.initial.theta,
            initial_w: scenario.initial.w,
            final_error: conv.final_error,
            lambda: conv.lambda,
            termination: conv.termination,
            converged: conv.termination == Termination::Completed && conv.final_error <= spec.converged_tol,
        })
    };
    let run_all = || (0..spec.count).into_par_iter().map(one).collect::<Result<Vec<_>>>();
    let entries = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Input(format!("--threads: {e}")))?
            .install(run_all)?,
        None => run_all()?,
    };
    let report = SweepReport {
        scenario: name_of(file),
        seed: spec.seed,
        count: spec.count,
        converged: entries.iter().filter(|e| e.converged).count(),
        max_final_error: entries.iter().map(|e| e.final_error).fold(0.0, f64::max),
        entries,
    };
    if let Some(dir) = out_dir {
        prepare(dir)?;
        write_json(&dir.join("scenario.json"), file)?;
        write_json(&dir.join("sweep.json"), &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ImpossibilityReport {
    pub scenario: String,
    pub origin_termination: Termination,
    /// Largest distance from the origin reached by the origin start.
    pub origin_max_displacement: f64,
    pub origin_stationary: bool,
    pub starts: usize,
    pub converged: usize,
    pub max_final_error: f64,
}

fn bundled_file(name: &str) -> Result<ScenarioFile> {
    let text = bundled(name).ok_or_else(|| CliError::Input(format!("no bundled scenario `{name}`")))?;
    Ok(parse_scenario(text)?)
}

/// Output of `reproduce`, by experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Reproduction {
    Run(RunReport),
    Scan(ScanReport),
    Impossibility(ImpossibilityReport),
}

pub fn reproduce(name: &str, out_dir: &Path, threads: Option<usize>) -> Result<Reproduction> {
    match name {
        "trefoil" | "lissajous3d" => Ok(Reproduction::Run(run_file(&bundled_file(name)?, out_dir)?)),
        "figure8-scan" => Ok(Reproduction::Scan(scan_file(&bundled_file("figure8-singularities")?, out_dir)?)),
        "circle-impossibility" => {
            let file = bundled_file("circle-impossibility")?;
            let origin = run_file(&file, &out_dir.join("origin"))?;
            let built = file.build()?;
            let traj = simulate(&built.scenario)?;
            let displacement = traj
                .records
                .iter()
                .map(|r| r.xi.norm())
                .fold(0.0, f64::max);
            let sweep = sweep_file(&file, Some(&out_dir.join("sweep")), threads)?;
            let report = ImpossibilityReport {
                scenario: name_of(&file),
                origin_termination: origin.termination,
                origin_max_displacement: displacement,
                origin_stationary: displacement == 0.0,
                starts: sweep.count,
                converged: sweep.converged,
                max_final_error: sweep.max_final_error,
            };
            prepare(out_dir)?;
            write_json(&out_dir.join("report.json"), &report)?;
            write_sweep_plot(&file, &built, &sweep, &out_dir.join("starts.svg"))?;
            Ok(Reproduction::Impossibility(report))
        }
        other => Err(CliError::Input(format!(
            "unknown reproduction `{other}` (expected one of {})",
            REPRODUCTIONS.join(", ")
        ))),
    }
}

fn write_sweep_plot(file: &ScenarioFile, built: &Built, sweep: &SweepReport, path: &Path) -> Result<()> {
    let mut plot = LinePlot::new("Sweep trajectories", "x", "y").equal_aspect();
    for e in sweep.entries.iter().take(24) {
        let mut scenario = built.scenario.clone();
        scenario.initial = sweep_start(file.sweep.as_ref().expect("sweep section"), &file.initial_state(), e.index);
        let traj = simulate(&scenario)?;
        let pts = traj.records.iter().map(|r| (r.xi[0], r.xi[1])).collect();
        plot = plot.series(Series::new("", pts, PALETTE[e.index % PALETTE.len()]));
    }
    write(path, &plot.render())
}

pub fn default_out_dir(name: &str) -> PathBuf {
    PathBuf::from("out").join(name)
}
