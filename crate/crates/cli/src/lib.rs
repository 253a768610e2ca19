//! Command-line front end: configuration, run artifacts and the convergence
//! table.

pub mod config;
pub mod output;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use willmore::harness::{
    convergence_study, ladder, ConvergenceRow, ReferenceErrors, Simulation, LINEAR_REFERENCE,
    NONLINEAR_REFERENCE,
};
use willmore::Variant;

use config::RawConfig;
use output::{ErrorInfo, Summary};

/// What a `run` produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub summary: Summary,
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        self.summary.error.is_none()
    }
}

/// Runs a configured experiment and writes its artifacts.
///
/// Configuration errors leave only `summary.json`; a failing step keeps the
/// rows computed so far. Errors are returned only when not even the summary
/// could be written.
pub fn cmd_run(config: Option<&Path>, sets: &[String]) -> anyhow::Result<RunOutcome> {
    let raw = RawConfig::load(config, sets)?;
    let dir = raw.output_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let summary_path = dir.join("summary.json");

    let cfg = match raw.resolve() {
        Ok(c) => c,
        Err(e) => {
            let summary = Summary::failed(ErrorInfo::from_anyhow(&e));
            output::write_json(&summary_path, &summary)?;
            return Ok(RunOutcome {
                output_dir: dir,
                summary,
            });
        }
    };
    let mut sim = match Simulation::new(cfg.experiment.clone()) {
        Ok(s) => s,
        Err(e) => {
            let summary = Summary::failed(ErrorInfo::from_anyhow(&e.into()));
            output::write_json(&summary_path, &summary)?;
            return Ok(RunOutcome {
                output_dir: dir,
                summary,
            });
        }
    };
    let requested = sim.total_steps();
    log::info!(
        "running {} ({} steps) into {}",
        cfg.experiment.name,
        requested,
        dir.display()
    );
    let started = std::time::Instant::now();
    let mut failure = None;
    while !sim.is_finished() {
        if let Err(e) = sim.advance() {
            log::error!("step {} failed: {e}", sim.state().m + 1);
            failure = Some(ErrorInfo::from_anyhow(&e.into()));
            break;
        }
    }
    log::info!("finished in {:.2?}", started.elapsed());

    let record = sim.into_record();
    output::write_timeseries(&dir.join("timeseries.csv"), &record)?;
    output::write_snapshots(&dir, &record)?;
    if cfg.emit_svg {
        fs::write(dir.join("energy.svg"), svg::energy_plot(&record))?;
        let mut snaps = record.snapshots.clone();
        if snaps.last().map(|s| s.t) != Some(record.last().t) {
            snaps.push(willmore::harness::Snapshot {
                t: record.last().t,
                curve: record.final_curve().clone(),
            });
        }
        fs::write(dir.join("curves.svg"), svg::curves_plot(&snaps))?;
    }
    let summary = Summary::of_record(&record, requested, failure);
    output::write_json(&summary_path, &summary)?;
    Ok(RunOutcome {
        output_dir: dir,
        summary,
    })
}

/// Verdict of a convergence study against the reference table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    pub scheme: String,
    pub levels: usize,
    /// `pass`, `fail` or `insufficient levels`.
    pub verdict: String,
    pub failures: Vec<String>,
}

const REFERENCE_TOLERANCE: f64 = 0.03;
const EOC_WINDOW: (f64, f64) = (1.9, 2.1);
const PICARD_BOUND: usize = 5;
const STABILITY_SLACK: f64 = 1e-10;

/// Compares a study with the reference errors (±3%), the EOC window, the
/// stability slack and, for the nonlinear scheme, the Picard bound.
pub fn verdict(variant: Variant, rows: &[ConvergenceRow]) -> ConvergenceVerdict {
    let mut failures = Vec::new();
    let (reference, fields): (ReferenceErrors, &[&str]) = match variant {
        Variant::Nonlinear => (NONLINEAR_REFERENCE, &["errX"]),
        _ => (LINEAR_REFERENCE, &["errX", "errvarkappa", "errkappa"]),
    };
    for (k, r) in rows.iter().enumerate().take(5) {
        let refs = [
            ("errX", r.errors.position, reference.position[k]),
            ("errvarkappa", r.errors.varkappa, reference.varkappa[k]),
            ("errkappa", r.errors.kappa, reference.kappa[k]),
        ];
        for (name, got, want) in refs {
            if fields.contains(&name) && ((got - want) / want).abs() > REFERENCE_TOLERANCE {
                failures.push(format!(
                    "level {}: {name} = {got:.4e}, reference {want:.2e}",
                    k + 1
                ));
            }
        }
    }
    for (k, r) in rows.iter().enumerate().skip(1) {
        for (name, e) in [
            ("eocX", r.eoc_position),
            ("eocvarkappa", r.eoc_varkappa),
            ("eockappa", r.eoc_kappa),
        ] {
            if let Some(e) = e {
                if !(EOC_WINDOW.0..=EOC_WINDOW.1).contains(&e) {
                    failures.push(format!("level {}: {name} = {e:.4}", k + 1));
                }
            }
        }
    }
    for (k, r) in rows.iter().enumerate() {
        if r.max_stability_residual > STABILITY_SLACK * r.initial_energy {
            failures.push(format!(
                "level {}: stability residual {:.3e}",
                k + 1,
                r.max_stability_residual
            ));
        }
        if variant == Variant::Nonlinear && r.max_picard_after_warmup > PICARD_BOUND {
            failures.push(format!(
                "level {}: {} Picard solves after step 10",
                k + 1,
                r.max_picard_after_warmup
            ));
        }
    }
    let verdict = if rows.len() < 2 {
        "insufficient levels"
    } else if failures.is_empty() {
        "pass"
    } else {
        "fail"
    };
    ConvergenceVerdict {
        scheme: variant.key().to_string(),
        levels: rows.len(),
        verdict: verdict.to_string(),
        failures,
    }
}

/// Runs the ladder and writes `convergence.csv` and `verdict.json`.
pub fn cmd_converge(
    variant: Variant,
    levels: usize,
    output_dir: Option<&Path>,
) -> anyhow::Result<ConvergenceVerdict> {
    anyhow::ensure!(levels >= 1, "need at least one level");
    let dir = config::resolve_output(
        output_dir
            .map(Path::to_path_buf)
            .unwrap_or_else(|| Path::new("runs").join(format!("converge_{}", variant.key()))),
    );
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let rows = convergence_study(variant, &ladder(levels))?;
    output::write_convergence(&dir.join("convergence.csv"), &rows)?;
    let v = verdict(variant, &rows);
    output::write_json(&dir.join("verdict.json"), &v)?;
    Ok(v)
}
