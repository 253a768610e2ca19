//! Run artifacts: time series, snapshots, summary and convergence tables.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use willmore::geometry::AssumptionReport;
use willmore::harness::{ConvergenceRow, RunRecord};
use willmore::{ClosedCurve, Error};

pub const TIMESERIES_HEADER: [&str; 11] = [
    "m",
    "t",
    "E",
    "Ebar",
    "length",
    "mesh_ratio",
    "dissipation",
    "stability_residual",
    "picard_iters",
    "lambda_mult",
    "dL",
];

/// Full-precision decimal: 17 significant digits round-trip every `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_timeseries(path: &Path, record: &RunRecord) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(TIMESERIES_HEADER)?;
    for r in &record.rows {
        w.write_record([
            r.m.to_string(),
            num(r.t),
            num(r.energy),
            num(r.e_bar),
            num(r.length),
            num(r.mesh_ratio),
            num(r.dissipation),
            num(r.stability_residual),
            r.picard_iters.to_string(),
            opt(r.multiplier),
            opt(r.length_change),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `0.05 → "0.05"`, `10.0 → "10"`; at most six decimals.
pub fn time_label(t: f64) -> String {
    let s = format!("{t:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn write_curve(path: &Path, curve: &ClosedCurve) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["x", "y"])?;
    for v in curve.vertices() {
        w.write_record([num(v.x), num(v.y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `snapshots/curve_<t>.csv` for every snapshot; returns the paths.
pub fn write_snapshots(dir: &Path, record: &RunRecord) -> anyhow::Result<Vec<PathBuf>> {
    let dir = dir.join("snapshots");
    fs::create_dir_all(&dir)?;
    record
        .snapshots
        .iter()
        .map(|s| {
            let path = dir.join(format!("curve_{}.csv", time_label(s.t)));
            write_curve(&path, &s.curve).map(|_| path)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

impl ErrorInfo {
    pub fn from_anyhow(e: &anyhow::Error) -> Self {
        let kind = match e.downcast_ref::<Error>() {
            Some(err) => core_kind(err),
            None if e.downcast_ref::<std::io::Error>().is_some() => "io",
            None => "config",
        };
        Self {
            kind: kind.to_string(),
            message: format!("{e:#}"),
        }
    }
}

fn core_kind(e: &Error) -> &'static str {
    match e {
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::TooFewNodes(_) | Error::InvalidConfig(_) | Error::UnknownExperiment(_) => "config",
        Error::UnsupportedDegree(_) | Error::Misuse(_) => "misuse",
        Error::DegenerateElement { .. } | Error::DegenerateCurve { .. } => "degenerate_curve",
        Error::Solvability { .. } => "solvability",
        Error::PicardDivergence { .. } => "picard_divergence",
        Error::Linalg(_) => "linear_algebra",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentInfo {
    pub name: String,
    pub seed: String,
    pub scheme: String,
    pub nodes: usize,
    pub dt: f64,
    pub t_end: f64,
    pub lambda: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionInfo {
    pub nonzero_normals: bool,
    pub spanning_normals: bool,
    pub min_normal_norm: f64,
    pub min_singular_value: f64,
}

impl From<&AssumptionReport> for AssumptionInfo {
    fn from(r: &AssumptionReport) -> Self {
        Self {
            nonzero_normals: r.nonzero_normals,
            spanning_normals: r.spanning_normals,
            min_normal_norm: r.min_normal_norm,
            min_singular_value: r.min_singular_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalState {
    pub t: f64,
    pub energy: f64,
    pub e_bar: f64,
    pub length: f64,
    pub mesh_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub status: &'static str,
    pub experiment: Option<ExperimentInfo>,
    pub total_steps: usize,
    pub requested_steps: Option<usize>,
    pub initial_energy: Option<f64>,
    #[serde(rename = "final")]
    pub final_state: Option<FinalState>,
    pub max_stability_residual: Option<f64>,
    pub max_picard_iters: Option<usize>,
    pub max_abs_length_change: Option<f64>,
    pub assumptions: Option<AssumptionInfo>,
    pub snapshots: Vec<String>,
    pub error: Option<ErrorInfo>,
}

impl Summary {
    /// Summary of a run that never started.
    pub fn failed(error: ErrorInfo) -> Self {
        Self {
            status: "error",
            experiment: None,
            total_steps: 0,
            requested_steps: None,
            initial_energy: None,
            final_state: None,
            max_stability_residual: None,
            max_picard_iters: None,
            max_abs_length_change: None,
            assumptions: None,
            snapshots: Vec::new(),
            error: Some(error),
        }
    }

    pub fn of_record(record: &RunRecord, requested: usize, error: Option<ErrorInfo>) -> Self {
        let e = &record.experiment;
        let last = record.last();
        let steps = record.rows.len() - 1;
        Self {
            status: if error.is_some() { "error" } else { "ok" },
            experiment: Some(ExperimentInfo {
                name: e.name.clone(),
                seed: e.seed.key().to_string(),
                scheme: e.scheme.variant.key().to_string(),
                nodes: e.nodes,
                dt: e.scheme.dt,
                t_end: e.t_end,
                lambda: e.scheme.lambda,
                picard_tol: e.scheme.picard_tol,
                picard_max: e.scheme.picard_max,
            }),
            total_steps: steps,
            requested_steps: Some(requested),
            initial_energy: Some(record.initial_energy()),
            final_state: Some(FinalState {
                t: last.t,
                energy: last.energy,
                e_bar: last.e_bar,
                length: last.length,
                mesh_ratio: last.mesh_ratio,
            }),
            max_stability_residual: (steps > 0).then(|| record.max_stability_residual()),
            max_picard_iters: record.rows.iter().skip(1).map(|r| r.picard_iters).max(),
            max_abs_length_change: record
                .rows
                .iter()
                .filter_map(|r| r.length_change)
                .map(f64::abs)
                .reduce(f64::max),
            assumptions: Some((&record.initial_assumptions).into()),
            snapshots: record.snapshots.iter().map(|s| time_label(s.t)).collect(),
            error,
        }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub const CONVERGENCE_HEADER: [&str; 12] = [
    "J",
    "h",
    "dt",
    "errX",
    "eocX",
    "errvarkappa",
    "eocvarkappa",
    "errkappa",
    "eockappa",
    "max_picard_after_warmup",
    "max_stability_residual",
    "initial_energy",
];

pub fn write_convergence(path: &Path, rows: &[ConvergenceRow]) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(CONVERGENCE_HEADER)?;
    for r in rows {
        w.write_record([
            r.nodes.to_string(),
            num(r.h),
            num(r.dt),
            num(r.errors.position),
            opt(r.eoc_position),
            num(r.errors.varkappa),
            opt(r.eoc_varkappa),
            num(r.errors.kappa),
            opt(r.eoc_kappa),
            r.max_picard_after_warmup.to_string(),
            num(r.max_stability_residual),
            num(r.initial_energy),
        ])?;
    }
    w.flush()?;
    Ok(())
}
