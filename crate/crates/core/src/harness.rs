//! Canned experiments, error norms against the expanding circle, and the
//! convergence study.

use std::thread;

use crate::error::{Error, Result};
use crate::geometry::{check_assumptions, mesh_ratio, AssumptionReport, ClosedCurve};
use crate::initial::{initial_data, Parameterization};
use crate::schemes::{step, SchemeConfig, SchemeState, Variant};

/// Circle of radius `(1 + 2t)^{1/4}` about the origin: the self-similar
/// solution of the flow with `λ = 0` starting from the unit circle.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExactExpandingCircle;

impl ExactExpandingCircle {
    pub fn radius(&self, t: f64) -> f64 {
        (1.0 + 2.0 * t).powf(0.25)
    }

    pub fn curvature(&self, t: f64) -> f64 {
        -(1.0 + 2.0 * t).powf(-0.25)
    }
}

/// Reference errors on the ladder `(J, Δt) = (32·2^k, 0.04/4^k)`, `T = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceErrors {
    pub position: [f64; 5],
    pub varkappa: [f64; 5],
    pub kappa: [f64; 5],
}

pub const LINEAR_REFERENCE: ReferenceErrors = ReferenceErrors {
    position: [8.30e-3, 2.04e-3, 5.10e-4, 1.27e-4, 3.18e-5],
    varkappa: [1.38e-2, 3.66e-3, 9.27e-4, 2.33e-4, 5.82e-5],
    kappa: [4.42e-2, 1.11e-2, 2.80e-3, 7.01e-4, 1.75e-4],
};

pub const NONLINEAR_REFERENCE: ReferenceErrors = ReferenceErrors {
    position: [4.38e-3, 1.09e-3, 2.73e-4, 6.82e-5, 1.71e-5],
    varkappa: [4.92e-3, 1.22e-3, 3.07e-4, 7.67e-5, 1.92e-5],
    kappa: [4.41e-2, 1.10e-2, 2.80e-3, 7.01e-4, 1.75e-4],
};

/// Coarsest level of the convergence ladder.
pub const LADDER_BASE: (usize, f64) = (32, 0.04);

/// `levels` rungs of `(32·2^k, 0.04/4^k)`.
pub fn ladder(levels: usize) -> Vec<(usize, f64)> {
    (0..levels)
        .map(|k| (LADDER_BASE.0 << k, LADDER_BASE.1 / 4f64.powi(k as i32)))
        .collect()
}

/// A fully specified run.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub seed: Parameterization,
    pub nodes: usize,
    pub scheme: SchemeConfig,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
}

/// Optional replacements for preset fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<Parameterization>,
    pub variant: Option<Variant>,
    pub nodes: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub lambda: Option<f64>,
    pub picard_tol: Option<f64>,
    pub picard_max: Option<usize>,
    pub snapshot_times: Option<Vec<f64>>,
}

pub const PRESETS: [&str; 14] = [
    "example1",
    "example1_nonlinear",
    "example2",
    "example2_nonlinear",
    "example2_lam05",
    "example2_lam2",
    "example3",
    "example3_uniform",
    "example4",
    "example4_alt",
    "example5",
    "example5_lam04",
    "example5_nonlinear",
    "example6",
];

impl Experiment {
    /// Named preset with the settings of the reference experiments.
    pub fn preset(name: &str) -> Result<Self> {
        use Parameterization as P;
        use Variant::*;
        let (seed, variant, lambda, nodes, dt, t_end, snaps): (_, _, _, _, _, _, &[f64]) =
            match name {
                "example1" => (P::CircleSeed, Linear, 0.0, 32, 0.04, 1.0, &[0.0, 0.5, 1.0]),
                "example1_nonlinear" => (
                    P::CircleSeed,
                    Nonlinear,
                    0.0,
                    32,
                    0.04,
                    1.0,
                    &[0.0, 0.5, 1.0],
                ),
                "example2" | "example2_nonlinear" => (
                    P::Stadium,
                    if name == "example2" {
                        Linear
                    } else {
                        Nonlinear
                    },
                    0.0,
                    128,
                    1e-3,
                    50.0,
                    &[0.0, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0],
                ),
                "example2_lam05" => (
                    P::Stadium,
                    Linear,
                    0.5,
                    256,
                    1e-4,
                    10.0,
                    &[0.0, 0.2, 0.4, 1.0, 2.0, 3.0, 4.0, 10.0],
                ),
                "example2_lam2" => (
                    P::Stadium,
                    Linear,
                    2.0,
                    256,
                    1e-4,
                    10.0,
                    &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 2.0, 10.0],
                ),
                "example3" | "example3_uniform" => (
                    if name == "example3" {
                        P::Ellipse
                    } else {
                        P::EllipseArcLength
                    },
                    Linear,
                    0.0,
                    256,
                    1e-3,
                    20.0,
                    &[0.0, 0.2, 0.4, 1.0, 2.0, 5.0, 10.0, 20.0],
                ),
                "example4" | "example4_alt" => (
                    P::Ellipse,
                    if name == "example4" {
                        Linear
                    } else {
                        AltLinear
                    },
                    0.5,
                    256,
                    1e-3,
                    10.0,
                    &[0.0, 0.2, 0.4, 1.0, 2.0, 3.0, 4.0, 10.0],
                ),
                "example5" | "example5_lam04" | "example5_nonlinear" => (
                    P::Lemniscate,
                    if name == "example5_nonlinear" {
                        Nonlinear
                    } else {
                        Linear
                    },
                    if name == "example5_lam04" { 0.4 } else { 0.0 },
                    256,
                    1e-3,
                    10.0,
                    &[0.0, 0.2, 0.4, 1.0, 2.0, 3.0, 5.0, 10.0],
                ),
                "example6" => (
                    P::Lemniscate,
                    LengthPreserving,
                    0.0,
                    256,
                    1e-3,
                    1.0,
                    &[0.0, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0],
                ),
                other => return Err(Error::UnknownExperiment(other.to_string())),
            };
        Ok(Self {
            name: name.to_string(),
            seed,
            nodes,
            scheme: SchemeConfig::new(variant, lambda, dt)?,
            t_end,
            snapshot_times: snaps.to_vec(),
        })
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        if let Some(s) = &o.seed {
            self.seed = s.clone();
        }
        if let Some(v) = o.variant {
            self.scheme.variant = v;
        }
        if let Some(n) = o.nodes {
            self.nodes = n;
        }
        if let Some(dt) = o.dt {
            self.scheme.dt = dt;
        }
        if let Some(t) = o.t_end {
            self.t_end = t;
        }
        if let Some(l) = o.lambda {
            self.scheme.lambda = l;
        }
        if let Some(t) = o.picard_tol {
            self.scheme.picard_tol = t;
        }
        if let Some(m) = o.picard_max {
            self.scheme.picard_max = m;
        }
        if let Some(s) = &o.snapshot_times {
            self.snapshot_times = s.clone();
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        if self.nodes < 3 {
            return Err(Error::TooFewNodes(self.nodes));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.scheme.dt) {
            return Err(Error::InvalidConfig(format!(
                "T = {} must be finite and at least dt = {}",
                self.t_end, self.scheme.dt
            )));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(t.is_finite() && **t >= 0.0))
        {
            return Err(Error::InvalidConfig(format!("invalid snapshot time {t}")));
        }
        Ok(())
    }

    /// `M = round(T / Δt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.scheme.dt).round() as usize
    }
}

/// Diagnostics of time level `m`. Step quantities refer to the step that
/// produced this level and are zero or absent at `m = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRow {
    pub m: usize,
    pub t: f64,
    /// The variant's stability energy.
    pub energy: f64,
    /// `½ (ϰ², |X_ρ|) + λ |Γ|` with single-level weights.
    pub e_bar: f64,
    pub length: f64,
    pub mesh_ratio: f64,
    pub dissipation: f64,
    pub stability_residual: f64,
    pub picard_iters: usize,
    pub multiplier: Option<f64>,
    pub length_change: Option<f64>,
}

/// Nodal extremes of one time level, enough to evaluate distances to any
/// circle centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRanges {
    pub t: f64,
    pub radius: (f64, f64),
    pub varkappa: (f64, f64),
    pub kappa: (f64, f64),
}

impl FieldRanges {
    fn of(state: &SchemeState, t: f64) -> Self {
        let range = |it: &mut dyn Iterator<Item = f64>| {
            it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
        };
        Self {
            t,
            radius: range(&mut state.x_cur.vertices().iter().map(|v| v.norm())),
            varkappa: range(&mut state.varkappa.values().iter().copied()),
            kappa: range(&mut state.kappa.values().iter().copied()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub curve: ClosedCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub experiment: Experiment,
    pub rows: Vec<TimeSeriesRow>,
    pub ranges: Vec<FieldRanges>,
    pub snapshots: Vec<Snapshot>,
    pub initial_assumptions: AssumptionReport,
    /// Curve at the last completed level.
    pub final_curve: ClosedCurve,
}

impl RunRecord {
    pub fn initial_energy(&self) -> f64 {
        self.rows[0].energy
    }

    /// Largest step residual; `−∞` before the first step.
    pub fn max_stability_residual(&self) -> f64 {
        self.rows
            .iter()
            .skip(1)
            .map(|r| r.stability_residual)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn last(&self) -> &TimeSeriesRow {
        self.rows
            .last()
            .expect("a record has at least the initial row")
    }

    pub fn final_curve(&self) -> &ClosedCurve {
        &self.final_curve
    }
}

/// A run advanced one step at a time, so that callers can keep partial
/// records when a step fails.
#[derive(Debug, Clone)]
pub struct Simulation {
    state: SchemeState,
    record: RunRecord,
    total_steps: usize,
    pending_snapshots: Vec<f64>,
}

impl Simulation {
    pub fn new(experiment: Experiment) -> Result<Self> {
        experiment.validate()?;
        let data = initial_data(&experiment.seed, experiment.nodes)?;
        let state = SchemeState::from_initial(&data);
        let cfg = experiment.scheme;
        let e = state.energies(cfg.effective_lambda())?;
        let row = TimeSeriesRow {
            m: 0,
            t: 0.0,
            energy: state.variant_energy(&cfg)?,
            e_bar: e.e_bar,
            length: e.length,
            mesh_ratio: mesh_ratio(&state.x_cur),
            dissipation: 0.0,
            stability_residual: 0.0,
            picard_iters: 0,
            multiplier: None,
            length_change: (cfg.variant == Variant::LengthPreserving).then_some(0.0),
        };
        let total_steps = experiment.steps();
        let mut pending: Vec<f64> = experiment.snapshot_times.clone();
        pending.sort_by(f64::total_cmp);
        pending.dedup();
        let mut sim = Self {
            record: RunRecord {
                initial_assumptions: check_assumptions(&state.x_cur, cfg.effective_lambda()),
                rows: vec![row],
                ranges: vec![FieldRanges::of(&state, 0.0)],
                snapshots: Vec::new(),
                final_curve: state.x_cur.clone(),
                experiment,
            },
            state,
            total_steps,
            pending_snapshots: pending,
        };
        sim.take_snapshots();
        Ok(sim)
    }

    pub fn state(&self) -> &SchemeState {
        &self.state
    }

    pub fn record(&self) -> &RunRecord {
        &self.record
    }

    pub fn into_record(self) -> RunRecord {
        self.record
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn is_finished(&self) -> bool {
        self.state.m >= self.total_steps
    }

    /// Takes one step and returns its row.
    pub fn advance(&mut self) -> Result<&TimeSeriesRow> {
        if self.is_finished() {
            return Err(Error::Misuse(
                "the run has already reached its final time".into(),
            ));
        }
        let cfg = self.record.experiment.scheme;
        let result = step(&self.state, &cfg)?;
        let mut next = self.state.advanced(&result, cfg.dt);
        next.t = next.m as f64 * cfg.dt;
        let e = next.energies(cfg.effective_lambda())?;
        let d = &result.diagnostics;
        self.record.rows.push(TimeSeriesRow {
            m: next.m,
            t: next.t,
            energy: d.energy_after,
            e_bar: e.e_bar,
            length: e.length,
            mesh_ratio: mesh_ratio(&next.x_cur),
            dissipation: d.dissipation,
            stability_residual: d.stability_residual,
            picard_iters: d.picard_iters,
            multiplier: d.multiplier,
            length_change: d.length_change,
        });
        self.record.ranges.push(FieldRanges::of(&next, next.t));
        self.record.final_curve = next.x_cur.clone();
        self.state = next;
        self.take_snapshots();
        Ok(self.record.last())
    }

    /// Advances to the final time, calling `observe` after every step.
    pub fn run_with(
        mut self,
        mut observe: impl FnMut(&TimeSeriesRow, &SchemeState),
    ) -> Result<RunRecord> {
        while !self.is_finished() {
            self.advance()?;
            observe(self.record.last(), &self.state);
        }
        Ok(self.record)
    }

    pub fn run(self) -> Result<RunRecord> {
        self.run_with(|_, _| {})
    }

    /// Records the current curve once for every requested time within half
    /// a step of it.
    fn take_snapshots(&mut self) {
        let limit = self.state.t + 0.5 * self.record.experiment.scheme.dt;
        let before = self.pending_snapshots.len();
        self.pending_snapshots.retain(|&s| s > limit);
        if self.pending_snapshots.len() != before {
            self.record.snapshots.push(Snapshot {
                t: self.state.t,
                curve: self.state.x_cur.clone(),
            });
        }
    }
}

/// Runs a named preset with overrides applied.
pub fn run_experiment(name: &str, overrides: &Overrides) -> Result<RunRecord> {
    let exp = Experiment::preset(name)?.with_overrides(overrides)?;
    Simulation::new(exp)?.run()
}

/// Max-in-time nodal errors against the expanding circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub position: f64,
    pub varkappa: f64,
    pub kappa: f64,
}

fn range_distance((lo, hi): (f64, f64), target: f64) -> f64 {
    (target - lo).abs().max((hi - target).abs())
}

/// `max_m max_j | |X_j| − r(t_m) |` and the analogous curvature errors, all
/// levels including `m = 0`.
pub fn error_norms(record: &RunRecord, exact: &ExactExpandingCircle) -> Result<ErrorNorms> {
    match record.experiment.seed {
        Parameterization::CircleSeed | Parameterization::Circle { radius: _ } => {}
        ref other => {
            return Err(Error::Misuse(format!(
                "errors against the expanding circle need a circular seed, got `{}`",
                other.key()
            )))
        }
    }
    let mut out = ErrorNorms {
        position: 0.0,
        varkappa: 0.0,
        kappa: 0.0,
    };
    for r in &record.ranges {
        let (rad, curv) = (exact.radius(r.t), exact.curvature(r.t));
        out.position = out.position.max(range_distance(r.radius, rad));
        out.varkappa = out.varkappa.max(range_distance(r.varkappa, curv));
        out.kappa = out.kappa.max(range_distance(r.kappa, curv));
    }
    Ok(out)
}

/// One rung of the convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub nodes: usize,
    pub h: f64,
    pub dt: f64,
    pub errors: ErrorNorms,
    pub eoc_position: Option<f64>,
    pub eoc_varkappa: Option<f64>,
    pub eoc_kappa: Option<f64>,
    /// Largest Picard count after the tenth step.
    pub max_picard_after_warmup: usize,
    pub max_stability_residual: f64,
    pub initial_energy: f64,
}

/// Steps excluded from the Picard count bound.
pub const PICARD_WARMUP_STEPS: usize = 10;

pub fn eoc(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).ln() / 2f64.ln()
}

/// Runs the expanding-circle experiment on each `(J, Δt)` level with `T = 1`,
/// in parallel, and tabulates errors and orders.
pub fn convergence_study(variant: Variant, levels: &[(usize, f64)]) -> Result<Vec<ConvergenceRow>> {
    let results: Vec<Result<ConvergenceRow>> = thread::scope(|scope| {
        let handles: Vec<_> = levels
            .iter()
            .map(|&(nodes, dt)| scope.spawn(move || convergence_level(variant, nodes, dt)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("convergence worker panicked"))
            .collect()
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    for k in 1..rows.len() {
        let (c, f) = (rows[k - 1].errors, rows[k].errors);
        rows[k].eoc_position = Some(eoc(c.position, f.position));
        rows[k].eoc_varkappa = Some(eoc(c.varkappa, f.varkappa));
        rows[k].eoc_kappa = Some(eoc(c.kappa, f.kappa));
    }
    Ok(rows)
}

fn convergence_level(variant: Variant, nodes: usize, dt: f64) -> Result<ConvergenceRow> {
    let mut exp = Experiment::preset("example1")?;
    exp.nodes = nodes;
    exp.scheme.variant = variant;
    exp.scheme.dt = dt;
    exp.snapshot_times = vec![];
    let record = Simulation::new(exp)?.run()?;
    let errors = error_norms(&record, &ExactExpandingCircle)?;
    Ok(ConvergenceRow {
        nodes,
        h: 1.0 / nodes as f64,
        dt,
        errors,
        eoc_position: None,
        eoc_varkappa: None,
        eoc_kappa: None,
        max_picard_after_warmup: record
            .rows
            .iter()
            .filter(|r| r.m > PICARD_WARMUP_STEPS)
            .map(|r| r.picard_iters)
            .max()
            .unwrap_or(0),
        max_stability_residual: record.max_stability_residual(),
        initial_energy: record.initial_energy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::PeriodicNodalField;
    use crate::geometry::Vec2;

    #[test]
    fn exact_circle_identities() {
        let e = ExactExpandingCircle;
        assert_eq!(e.radius(0.0), 1.0);
        for t in [0.0, 0.3, 1.0, 7.5] {
            assert!((e.radius(t).powi(4) - 2.0 * t - 1.0).abs() < 1e-12);
            assert!((e.radius(t) * e.curvature(t) + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ladder_levels() {
        let l = ladder(5);
        assert_eq!(l[0], (32, 0.04));
        assert_eq!(l[4].0, 512);
        assert!((l[4].1 - 0.04 / 256.0).abs() < 1e-18);
        assert_eq!((1.0 / l[4].1).round() as usize, 6400);
    }

    #[test]
    fn presets_are_valid() {
        for name in PRESETS {
            let e = Experiment::preset(name).unwrap();
            e.validate().unwrap();
            assert_eq!(e.name, name);
        }
        assert_eq!(Experiment::preset("example2").unwrap().steps(), 50_000);
        assert!(matches!(
            Experiment::preset("example9"),
            Err(Error::UnknownExperiment(_))
        ));
    }

    #[test]
    fn overrides_are_validated() {
        let o = Overrides {
            lambda: Some(-1.0),
            ..Default::default()
        };
        assert!(Experiment::preset("example1")
            .unwrap()
            .with_overrides(&o)
            .is_err());
        let o = Overrides {
            nodes: Some(16),
            t_end: Some(0.08),
            ..Default::default()
        };
        let e = Experiment::preset("example1")
            .unwrap()
            .with_overrides(&o)
            .unwrap();
        assert_eq!((e.nodes, e.steps()), (16, 2));
    }

    fn synthetic(radii: &[f64], scale: f64) -> RunRecord {
        let mut exp = Experiment::preset("example1").unwrap();
        exp.nodes = 8;
        let ranges = radii
            .iter()
            .enumerate()
            .map(|(m, &r)| {
                let t = m as f64 * 0.04;
                let circle = ExactExpandingCircle;
                let c = circle.curvature(t);
                let curve = ClosedCurve::new(
                    (0..8)
                        .map(|j| {
                            let a = j as f64 * std::f64::consts::FRAC_PI_4;
                            scale * r * Vec2::new(a.cos(), a.sin())
                        })
                        .collect(),
                )
                .unwrap();
                let state = SchemeState {
                    x_prev: curve.clone(),
                    x_cur: curve,
                    varkappa: PeriodicNodalField::constant(8, c),
                    kappa: PeriodicNodalField::constant(8, c),
                    t,
                    m,
                    initial_length: 1.0,
                };
                FieldRanges::of(&state, t)
            })
            .collect();
        RunRecord {
            experiment: exp,
            rows: vec![],
            ranges,
            snapshots: vec![],
            final_curve: ClosedCurve::from_points(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]).unwrap(),
            initial_assumptions: AssumptionReport {
                nonzero_normals: true,
                spanning_normals: true,
                min_normal_norm: 1.0,
                min_singular_value: 1.0,
            },
        }
    }

    #[test]
    fn exact_data_has_zero_error_and_scaling_is_linear() {
        let e = ExactExpandingCircle;
        let radii: Vec<f64> = (0..5).map(|m| e.radius(m as f64 * 0.04)).collect();
        let errs = error_norms(&synthetic(&radii, 1.0), &e).unwrap();
        assert!(errs.position < 1e-15 && errs.varkappa < 1e-15 && errs.kappa < 1e-15);

        let unit = vec![1.0; 5];
        let once = error_norms(&synthetic(&unit, 1.0), &e).unwrap().position;
        let twice_r = vec![2.0; 5];
        let twice = error_norms(&synthetic(&twice_r, 1.0), &e).unwrap().position;
        let brute = |s: f64| {
            (0..5)
                .map(|m| (s - e.radius(m as f64 * 0.04)).abs())
                .fold(0.0, f64::max)
        };
        assert!((once - brute(1.0)).abs() < 1e-15);
        assert!((twice - brute(2.0)).abs() < 1e-15);
    }

    #[test]
    fn distance_doubles_when_radius_doubles_around_zero_target() {
        let r = synthetic(&[0.5, 0.7], 1.0);
        let d = range_distance(r.ranges[1].radius, 0.0);
        let r2 = synthetic(&[0.5, 0.7], 2.0);
        assert!((range_distance(r2.ranges[1].radius, 0.0) - 2.0 * d).abs() < 1e-15);
    }

    #[test]
    fn error_norms_need_a_circle() {
        let mut r = synthetic(&[1.0], 1.0);
        r.experiment.seed = Parameterization::Stadium;
        assert!(matches!(
            error_norms(&r, &ExactExpandingCircle),
            Err(Error::Misuse(_))
        ));
    }

    #[test]
    fn simulation_rows_and_snapshots() {
        let o = Overrides {
            nodes: Some(16),
            t_end: Some(0.4),
            snapshot_times: Some(vec![0.0, 0.2, 0.37, 5.0]),
            ..Default::default()
        };
        let exp = Experiment::preset("example1")
            .unwrap()
            .with_overrides(&o)
            .unwrap();
        let mut sim = Simulation::new(exp).unwrap();
        assert_eq!(sim.total_steps(), 10);
        while !sim.is_finished() {
            sim.advance().unwrap();
        }
        assert!(matches!(sim.advance(), Err(Error::Misuse(_))));
        let rec = sim.into_record();
        assert_eq!(rec.rows.len(), 11);
        for w in rec.rows.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].energy <= w[0].energy + 1e-12);
        }
        let times: Vec<f64> = rec.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times.len(), 3);
        assert!((times[1] - 0.2).abs() < 1e-12 && (times[2] - 0.36).abs() < 1e-12);
        assert_eq!(rec.final_curve(), &rec_final(&rec));
    }

    fn rec_final(rec: &RunRecord) -> ClosedCurve {
        let mut exp = rec.experiment.clone();
        exp.snapshot_times = vec![exp.t_end];
        Simulation::new(exp).unwrap().run().unwrap().snapshots[0]
            .curve
            .clone()
    }

    #[test]
    fn uniform_circle_stays_equidistributed() {
        let o = Overrides {
            seed: Some(Parameterization::Circle { radius: 1.0 }),
            ..Default::default()
        };
        let rec = run_experiment("example1", &o).unwrap();
        assert_eq!(rec.rows.len(), 26);
        for r in &rec.rows {
            assert!((r.mesh_ratio - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn single_level_study_has_no_orders() {
        let rows = convergence_study(Variant::Linear, &[(16, 0.1)]).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].eoc_position.is_none());
    }

    #[test]
    fn two_level_study_fills_orders() {
        let rows = convergence_study(Variant::Linear, &[(32, 0.04), (64, 0.01)]).unwrap();
        let o = rows[1].eoc_position.unwrap();
        assert!((o - eoc(rows[0].errors.position, rows[1].errors.position)).abs() < 1e-15);
    }
}
