//! Fully discrete time steppers.
//!
//! Each step solves for `(𝒱, ϰ, X, κ)` at the new time level: the normal
//! velocity, the evolved curvature, the vertex positions and the curvature
//! that ties `X` to its polygon. The rows, per nodal test function, are
//!
//! ```text
//! (a) (𝒱, φ w) − (ϰ_ρ, φ_ρ w⁻¹) + ½ (c² ϰ, φ w) − λ (κ, φ w)          = 0
//! (b) (ϰ/Δt, χ w) + (𝒱_ρ, χ_ρ w⁻¹) − ½ (c² 𝒱, χ w)
//!         − ½ (τ·U, ϰ_ρ χ − ϰ χ_ρ)                              = (ϰᵐ √𝒥 / Δt, χ w)
//! (c) (ν·X/Δt, ξ w)ʰ − (𝒱, ξ w)                                     = (ν·Xᵐ/Δt, ξ w)ʰ
//! (d) (κ ν, η w)ʰ + (X_ρ, η_ρ w⁻¹)                                   = 0
//! ```
//!
//! with `w = |Xᵐ_ρ|`, `τ`, `ν` the frame of `Xᵐ`, `c` the lagged curvature and
//! `U` a discrete tangential-motion velocity. Products marked `ʰ` are lumped,
//! all others use 3-point Gauss quadrature.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fem::{
    exact_inner, local_load, local_mass, local_skew, local_stiffness, ElementField,
    PeriodicNodalField,
};
use crate::geometry::{
    check_assumptions, energies, frame, AssumptionReport, ClosedCurve, EnergyReport, Vec2,
};
use crate::initial::InitialData;
use crate::sparse::{self, CooMatrix, CscMatrix, LinalgError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Linear scheme with two-level energy.
    Linear,
    /// Single-level-energy scheme solved by Picard iteration.
    Nonlinear,
    /// Linear scheme with the squared curvature taken from `κᵐ`.
    AltLinear,
    /// Linear scheme with a Lagrange multiplier that keeps the length fixed.
    LengthPreserving,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Linear,
        Variant::Nonlinear,
        Variant::AltLinear,
        Variant::LengthPreserving,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Variant::Linear => "linear",
            Variant::Nonlinear => "nonlinear",
            Variant::AltLinear => "alt_linear",
            Variant::LengthPreserving => "length_preserving",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.key() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub variant: Variant,
    /// Length penalty; ignored by the length-preserving variant.
    pub lambda: f64,
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
}

impl SchemeConfig {
    pub const DEFAULT_PICARD_TOL: f64 = 1e-10;
    pub const DEFAULT_PICARD_MAX: usize = 100;

    pub fn new(variant: Variant, lambda: f64, dt: f64) -> Result<Self> {
        let cfg = Self {
            variant,
            lambda,
            dt,
            picard_tol: Self::DEFAULT_PICARD_TOL,
            picard_max: Self::DEFAULT_PICARD_MAX,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!(
                "lambda must be finite and ≥ 0, got {}",
                self.lambda
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be finite and > 0, got {}", self.dt));
        }
        if !(self.picard_tol > 0.0) {
            return bad(format!("picard_tol must be > 0, got {}", self.picard_tol));
        }
        if self.picard_max == 0 {
            return bad("picard_max must be ≥ 1".into());
        }
        Ok(())
    }

    /// Length penalty entering the energy and the assembled rows.
    pub fn effective_lambda(&self) -> f64 {
        match self.variant {
            Variant::LengthPreserving => 0.0,
            _ => self.lambda,
        }
    }
}

/// Unknowns at time level `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub x_cur: ClosedCurve,
    pub x_prev: ClosedCurve,
    pub varkappa: PeriodicNodalField,
    pub kappa: PeriodicNodalField,
    pub t: f64,
    pub m: usize,
    /// `|Γ⁰|`, the reference for the relative length change.
    pub initial_length: f64,
}

impl SchemeState {
    /// Level 0 with `X⁻¹ = X⁰`.
    pub fn from_initial(data: &InitialData) -> Self {
        Self {
            x_cur: data.x0.clone(),
            x_prev: data.x0.clone(),
            varkappa: data.varkappa0.clone(),
            kappa: data.kappa0.clone(),
            t: 0.0,
            m: 0,
            initial_length: data.x0.length(),
        }
    }

    pub fn nodes(&self) -> usize {
        self.x_cur.nodes()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes();
        for found in [self.x_prev.nodes(), self.varkappa.len(), self.kappa.len()] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        Ok(())
    }

    /// State at level `m + 1`.
    pub fn advanced(&self, result: &StepResult, dt: f64) -> Self {
        Self {
            x_cur: result.x_new.clone(),
            x_prev: self.x_cur.clone(),
            varkappa: result.varkappa.clone(),
            kappa: result.kappa.clone(),
            t: self.t + dt,
            m: self.m + 1,
            initial_length: self.initial_length,
        }
    }

    /// Energies at this level; `e_linear` uses the weights of the previous level.
    pub fn energies(&self, lambda: f64) -> Result<EnergyReport> {
        let prev = frame(&self.x_prev).weights;
        let cur = frame(&self.x_cur).weights;
        energies(&self.varkappa, &prev, &cur, lambda)
    }

    /// The energy the variant's stability inequality is stated in.
    pub fn variant_energy(&self, cfg: &SchemeConfig) -> Result<f64> {
        let r = self.energies(cfg.effective_lambda())?;
        Ok(match cfg.variant {
            Variant::Nonlinear => r.e_bar,
            _ => r.e_linear,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub energy_before: f64,
    pub energy_after: f64,
    /// `Δt (𝒱, 𝒱 |Xᵐ_ρ|)`.
    pub dissipation: f64,
    /// `energy_after + dissipation − energy_before`; nonpositive up to round-off.
    pub stability_residual: f64,
    pub picard_iters: usize,
    /// `λᵐ⁺¹` for the length-preserving variant.
    pub multiplier: Option<f64>,
    /// `(|Γᵐ⁺¹| − |Γ⁰|) / |Γ⁰|` for the length-preserving variant.
    pub length_change: Option<f64>,
    pub assumptions: AssumptionReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub velocity: PeriodicNodalField,
    pub varkappa: PeriodicNodalField,
    pub kappa: PeriodicNodalField,
    pub x_new: ClosedCurve,
    pub diagnostics: StepDiagnostics,
}

/// Index map of the block-by-field unknown vector. The normal-motion rows
/// sit at the `κ` indices and the curvature-identity rows at the `X` indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub nodes: usize,
}

impl Layout {
    pub fn velocity(&self, j: usize) -> usize {
        j
    }
    pub fn varkappa(&self, j: usize) -> usize {
        self.nodes + j
    }
    /// Component `c` (0 = x, 1 = y) of vertex `j`.
    pub fn position(&self, c: usize, j: usize) -> usize {
        (2 + c) * self.nodes + j
    }
    pub fn kappa(&self, j: usize) -> usize {
        4 * self.nodes + j
    }
    pub fn multiplier(&self) -> usize {
        5 * self.nodes
    }
    pub fn dim(&self, variant: Variant) -> usize {
        match variant {
            Variant::LengthPreserving => 5 * self.nodes + 1,
            _ => 5 * self.nodes,
        }
    }
}

/// Assembled step system in coordinate form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub layout: Layout,
    pub matrix: CooMatrix,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn to_csc(&self) -> Result<CscMatrix> {
        Ok(CscMatrix::from_coo(&self.matrix)?)
    }
}

/// `√(|a^{m−1}_e| / |a^m_e|)` per element.
pub fn sqrt_jacobian(x_cur: &ClosedCurve, x_prev: &ClosedCurve) -> Result<ElementField> {
    if x_cur.nodes() != x_prev.nodes() {
        return Err(Error::DimensionMismatch {
            expected: x_cur.nodes(),
            found: x_prev.nodes(),
        });
    }
    let (cur, prev) = (x_cur.edge_lengths(), x_prev.edge_lengths());
    Ok(ElementField(
        prev.iter().zip(&cur).map(|(p, c)| (p / c).sqrt()).collect(),
    ))
}

/// Builds the step system. For the nonlinear variant `frozen` is the current
/// Picard iterate `X^{m+1,ℓ}`; `None` means `ℓ = 0`, i.e. `Xᵐ`.
pub fn assemble(
    state: &SchemeState,
    cfg: &SchemeConfig,
    frozen: Option<&ClosedCurve>,
) -> Result<SparseSystem> {
    state.validate()?;
    cfg.validate()?;
    let n = state.nodes();
    if let Some(f) = frozen {
        if f.nodes() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.nodes(),
            });
        }
    }
    let layout = Layout { nodes: n };
    let dim = layout.dim(cfg.variant);
    let h = 1.0 / n as f64;
    let dt = cfg.dt;
    let lambda = cfg.effective_lambda();
    let fr = frame(&state.x_cur);
    let sqrt_j = sqrt_jacobian(&state.x_cur, &state.x_prev)?;
    let lagged = match cfg.variant {
        Variant::AltLinear => &state.kappa,
        _ => &state.varkappa,
    };
    let nonlinear = cfg.variant == Variant::Nonlinear;
    let iterate = frozen.unwrap_or(&state.x_cur);
    // U: nodal velocity in the convection term
    let convect: Vec<Vec2> = (0..n)
        .map(|j| {
            if nonlinear {
                (iterate.vertex(j) - state.x_cur.vertex(j)) / dt
            } else {
                (state.x_cur.vertex(j) - state.x_prev.vertex(j)) / dt
            }
        })
        .collect();

    let mut a = CooMatrix::with_capacity(dim, 60 * n + 4 * n);
    let mut rhs = vec![0.0; dim];
    for e in 0..n {
        let nodes = [e, (e + 1) % n];
        let len = fr.lengths[e];
        let w = fr.weights[e];
        let winv = 1.0 / w;
        let tau = fr.tangents[e];
        let nu = fr.normals[e];
        let (c0, c1) = (lagged[nodes[0]], lagged[nodes[1]]);
        let c = |t: f64| (1.0 - t) * c0 + t * c1;
        let mass = local_mass(h, |_| w);
        let cubic = local_mass(h, |t| 0.5 * w * c(t) * c(t));
        let stiff = local_stiffness(h, winv);
        let (g0, g1) = (tau.dot(&convect[nodes[0]]), tau.dot(&convect[nodes[1]]));
        let skew = local_skew(h, |t| (1.0 - t) * g0 + t * g1);
        let stretch = if nonlinear {
            let d = (iterate.edge(e) - state.x_cur.edge(e)) / h;
            let s = d.dot(&(iterate.edge(e) / h)) * winv;
            local_mass(h, |_| s / (2.0 * dt))
        } else {
            [[0.0; 2]; 2]
        };
        let (k0, k1) = (state.varkappa[nodes[0]], state.varkappa[nodes[1]]);
        let jac = if nonlinear { 1.0 } else { sqrt_j[e] };
        let load = local_load(h, |t| w * jac * ((1.0 - t) * k0 + t * k1));
        let lump = 0.5 * len;

        for (p, &i) in nodes.iter().enumerate() {
            let (row_a, row_b) = (layout.velocity(i), layout.varkappa(i));
            let row_c = layout.kappa(i);
            for (q, &j) in nodes.iter().enumerate() {
                a.push(row_a, layout.velocity(j), mass[p][q]);
                a.push(row_a, layout.varkappa(j), cubic[p][q] - stiff[p][q]);
                if lambda != 0.0 {
                    a.push(row_a, layout.kappa(j), -lambda * mass[p][q]);
                }
                a.push(
                    row_b,
                    layout.varkappa(j),
                    mass[p][q] / dt - 0.5 * skew[p][q] + stretch[p][q],
                );
                a.push(row_b, layout.velocity(j), stiff[p][q] - cubic[p][q]);
                a.push(row_c, layout.velocity(j), -mass[p][q]);
                for comp in 0..2 {
                    a.push(
                        layout.position(comp, i),
                        layout.position(comp, j),
                        stiff[p][q],
                    );
                }
            }
            rhs[row_b] += load[p] / dt;
            // lumped rows: only the diagonal node contributes
            for comp in 0..2 {
                a.push(row_c, layout.position(comp, i), lump * nu[comp] / dt);
                a.push(layout.position(comp, i), layout.kappa(i), lump * nu[comp]);
            }
            rhs[row_c] += lump * nu.dot(&state.x_cur.vertex(i)) / dt;
            if cfg.variant == Variant::LengthPreserving {
                let coeff = lump * state.kappa[i];
                a.push(row_a, layout.multiplier(), -coeff);
                a.push(layout.multiplier(), layout.velocity(i), coeff);
            }
        }
    }
    Ok(SparseSystem {
        layout,
        matrix: a,
        rhs,
    })
}

/// Solves a step or projection system, mapping a failed factorization to a
/// solvability error and warning when the checks fail but the solve succeeds.
pub(crate) fn solve_checked(
    matrix: &CooMatrix,
    rhs: &[f64],
    report: &AssumptionReport,
) -> Result<Vec<f64>> {
    let csc = CscMatrix::from_coo(matrix)?;
    match sparse::solve(&csc, rhs) {
        Ok(x) => {
            if !report.ok() {
                log::warn!(
                    "vertex normal checks failed (nonzero: {}, spanning: {}) but the system was solved",
                    report.nonzero_normals,
                    report.spanning_normals
                );
            }
            Ok(x)
        }
        Err(source @ (LinalgError::Singular { .. } | LinalgError::Inaccurate { .. })) => {
            Err(Error::Solvability {
                nonzero_normals: report.nonzero_normals,
                spanning_normals: report.spanning_normals,
                source,
            })
        }
        Err(other) => Err(other.into()),
    }
}

struct Unknowns {
    velocity: PeriodicNodalField,
    varkappa: PeriodicNodalField,
    positions: Vec<Vec2>,
    kappa: PeriodicNodalField,
    multiplier: Option<f64>,
}

fn split(x: &[f64], layout: Layout, variant: Variant) -> Unknowns {
    let n = layout.nodes;
    Unknowns {
        velocity: PeriodicNodalField(x[..n].to_vec()),
        varkappa: PeriodicNodalField(x[n..2 * n].to_vec()),
        positions: (0..n)
            .map(|j| Vec2::new(x[layout.position(0, j)], x[layout.position(1, j)]))
            .collect(),
        kappa: PeriodicNodalField(x[4 * n..5 * n].to_vec()),
        multiplier: (variant == Variant::LengthPreserving).then(|| x[layout.multiplier()]),
    }
}

fn solve_once(
    state: &SchemeState,
    cfg: &SchemeConfig,
    frozen: Option<&ClosedCurve>,
    report: &AssumptionReport,
) -> Result<Unknowns> {
    let system = assemble(state, cfg, frozen)?;
    let x = solve_checked(&system.matrix, &system.rhs, report)?;
    Ok(split(&x, system.layout, cfg.variant))
}

/// One time step of the variant selected in `cfg`.
pub fn step(state: &SchemeState, cfg: &SchemeConfig) -> Result<StepResult> {
    state.validate()?;
    cfg.validate()?;
    let report = check_assumptions(&state.x_cur, cfg.effective_lambda());
    let (sol, x_new, picard_iters) = if cfg.variant == Variant::Nonlinear {
        picard(state, cfg, &report)?
    } else {
        let sol = solve_once(state, cfg, None, &report)?;
        let x_new = ClosedCurve::new(sol.positions.clone())?;
        (sol, x_new, 1)
    };

    let energy_before = state.variant_energy(cfg)?;
    let w = frame(&state.x_cur).weights;
    let dissipation = cfg.dt * exact_inner(&sol.velocity, &sol.velocity, &w, 2)?;
    let length_change = (cfg.variant == Variant::LengthPreserving)
        .then(|| (x_new.length() - state.initial_length) / state.initial_length);
    let mut result = StepResult {
        velocity: sol.velocity,
        varkappa: sol.varkappa,
        kappa: sol.kappa,
        x_new,
        diagnostics: StepDiagnostics {
            energy_before,
            energy_after: 0.0,
            dissipation,
            stability_residual: 0.0,
            picard_iters,
            multiplier: sol.multiplier,
            length_change,
            assumptions: report,
        },
    };
    let energy_after = state.advanced(&result, cfg.dt).variant_energy(cfg)?;
    let d = &mut result.diagnostics;
    d.energy_after = energy_after;
    d.stability_residual = energy_after + dissipation - energy_before;
    Ok(result)
}

fn picard(
    state: &SchemeState,
    cfg: &SchemeConfig,
    report: &AssumptionReport,
) -> Result<(Unknowns, ClosedCurve, usize)> {
    let mut iterate = state.x_cur.clone();
    let mut varkappa = state.varkappa.clone();
    let mut increment = f64::INFINITY;
    for it in 1..=cfg.picard_max {
        let sol = solve_once(state, cfg, Some(&iterate), report)?;
        let next = ClosedCurve::new(sol.positions.clone())?;
        increment = next
            .max_vertex_distance(&iterate)
            .max(sol.varkappa.max_abs_diff(&varkappa));
        if increment <= cfg.picard_tol {
            return Ok((sol, next, it));
        }
        iterate = next;
        varkappa = sol.varkappa;
    }
    Err(Error::PicardDivergence {
        iterations: cfg.picard_max,
        last_increment: increment,
    })
}

pub fn step_linear(state: &SchemeState, cfg: &SchemeConfig) -> Result<StepResult> {
    step(state, &cfg.with_variant(Variant::Linear))
}

pub fn step_nonlinear(state: &SchemeState, cfg: &SchemeConfig) -> Result<StepResult> {
    step(state, &cfg.with_variant(Variant::Nonlinear))
}

pub fn step_alt_linear(state: &SchemeState, cfg: &SchemeConfig) -> Result<StepResult> {
    step(state, &cfg.with_variant(Variant::AltLinear))
}

pub fn step_length_preserving(state: &SchemeState, cfg: &SchemeConfig) -> Result<StepResult> {
    step(state, &cfg.with_variant(Variant::LengthPreserving))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{initial_data, interpolate, Parameterization};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn state_of(key: &str, n: usize) -> SchemeState {
        let p = Parameterization::from_key(key).unwrap();
        SchemeState::from_initial(&initial_data(&p, n).unwrap())
    }

    /// A state two steps in, so that `X^{m−1} ≠ Xᵐ`.
    fn evolved(key: &str, n: usize, cfg: &SchemeConfig) -> SchemeState {
        let mut s = state_of(key, n);
        for _ in 0..2 {
            let r = step(&s, cfg).unwrap();
            s = s.advanced(&r, cfg.dt);
        }
        s
    }

    fn cfg(variant: Variant, lambda: f64, dt: f64) -> SchemeConfig {
        SchemeConfig::new(variant, lambda, dt).unwrap()
    }

    #[test]
    fn variant_keys_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.key().parse::<Variant>().unwrap(), v);
        }
        assert!("explicit".parse::<Variant>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::new(Variant::Linear, -1.0, 0.1).is_err());
        assert!(SchemeConfig::new(Variant::Linear, 0.0, 0.0).is_err());
        assert!(SchemeConfig::new(Variant::Linear, 0.0, f64::NAN).is_err());
        let mut c = cfg(Variant::Nonlinear, 0.0, 0.1);
        c.picard_tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn sqrt_jacobian_reference_values() {
        let c = interpolate(&Parameterization::Ellipse, 9).unwrap();
        assert!(sqrt_jacobian(&c, &c)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 1.0));
        let big = c.scaled(2.0).unwrap();
        for v in sqrt_jacobian(&big, &c).unwrap().values() {
            assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
        }
        let mut r = rand::rngs::StdRng::seed_from_u64(3);
        let moved = ClosedCurve::new(
            c.vertices()
                .iter()
                .map(|v| v + Vec2::new(r.gen_range(-0.1..0.1), r.gen_range(-0.1..0.1)))
                .collect(),
        )
        .unwrap();
        let sj = sqrt_jacobian(&moved, &c).unwrap();
        for e in 0..9 {
            let brute = (c.edge(e).norm() / moved.edge(e).norm()).sqrt();
            assert!((sj[e] - brute).abs() < 1e-14);
        }
        let small = interpolate(&Parameterization::Ellipse, 8).unwrap();
        assert!(sqrt_jacobian(&small, &c).is_err());
    }

    #[test]
    fn system_shape_and_nonempty_rows() {
        for v in Variant::ALL {
            let s = state_of("ellipse", 8);
            let sys = assemble(&s, &cfg(v, 0.5, 0.01), None).unwrap();
            assert_eq!(sys.dim(), sys.layout.dim(v));
            let csc = sys.to_csc().unwrap();
            let dense = csc.to_dense();
            for (i, row) in dense.iter().enumerate() {
                assert!(row.iter().any(|&x| x != 0.0), "{v}: row {i} empty");
            }
        }
    }

    #[test]
    fn zero_lambda_decouples_rows() {
        let c = cfg(Variant::Linear, 0.0, 0.01);
        let s = evolved("ellipse", 12, &c);
        let sys = assemble(&s, &c, None).unwrap();
        let n = 12;
        for (i, j, v) in sys.matrix.triplets() {
            if i < 2 * n && v != 0.0 {
                assert!(j < 2 * n, "row {i} couples to column {j}");
            }
            if i >= 2 * n && j >= n && j < 2 * n {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn zero_lambda_sequential_solve_matches_coupled() {
        let c = cfg(Variant::Linear, 0.0, 0.01);
        let s = evolved("tube", 12, &c);
        let sys = assemble(&s, &c, None).unwrap();
        let n = 12;
        let dense = sys.to_csc().unwrap().to_dense();
        let full = sparse::solve(&sys.to_csc().unwrap(), &sys.rhs).unwrap();
        let first: Vec<Vec<f64>> = dense[..2 * n].iter().map(|r| r[..2 * n].to_vec()).collect();
        let upper =
            sparse::solve(&CscMatrix::from_dense(&first).unwrap(), &sys.rhs[..2 * n]).unwrap();
        let second: Vec<Vec<f64>> = dense[2 * n..].iter().map(|r| r[2 * n..].to_vec()).collect();
        let rhs2: Vec<f64> = (2 * n..5 * n)
            .map(|i| sys.rhs[i] - (0..2 * n).map(|j| dense[i][j] * upper[j]).sum::<f64>())
            .collect();
        let lower = sparse::solve(&CscMatrix::from_dense(&second).unwrap(), &rhs2).unwrap();
        for (k, v) in upper.iter().chain(&lower).enumerate() {
            assert!((v - full[k]).abs() < 1e-11, "{k}");
        }
    }

    #[test]
    fn rhs_vanishes_except_normal_data_at_rest() {
        let mut s = state_of("ellipse", 8);
        s.varkappa = PeriodicNodalField::zeros(8);
        let sys = assemble(&s, &cfg(Variant::Linear, 0.3, 0.1), None).unwrap();
        for (i, v) in sys.rhs.iter().enumerate() {
            if !(32..40).contains(&i) {
                assert_eq!(*v, 0.0, "{i}");
            }
        }
    }

    #[test]
    fn regular_polygon_stays_regular_under_every_stepper() {
        for v in Variant::ALL {
            for dt in [1e-3, 0.5] {
                let c = cfg(v, 0.0, dt);
                let mut s = state_of("circle", 16);
                let e0 = s.variant_energy(&c).unwrap();
                for _ in 0..3 {
                    let r = step(&s, &c).unwrap();
                    assert!(r.diagnostics.stability_residual <= 1e-12 * e0, "{v}");
                    s = s.advanced(&r, dt);
                    let radii: Vec<f64> = s.x_cur.vertices().iter().map(|p| p.norm()).collect();
                    let lens = s.x_cur.edge_lengths();
                    let spread = |x: &[f64]| {
                        x.iter().cloned().fold(f64::MIN, f64::max)
                            - x.iter().cloned().fold(f64::MAX, f64::min)
                    };
                    assert!(spread(&radii) < 1e-10 && spread(&lens) < 1e-10, "{v}");
                }
            }
        }
    }

    #[test]
    fn alt_linear_matches_linear_when_curvatures_agree() {
        let s = state_of("ellipse", 16);
        assert_eq!(s.varkappa, s.kappa);
        let c = cfg(Variant::Linear, 0.5, 0.01);
        let a = step_linear(&s, &c).unwrap();
        let b = step_alt_linear(&s, &c).unwrap();
        assert!(a.x_new.max_vertex_distance(&b.x_new) < 1e-12);
        assert!(a.varkappa.max_abs_diff(&b.varkappa) < 1e-12);
    }

    #[test]
    fn loose_picard_tolerance_gives_one_linear_solve() {
        let mut c = cfg(Variant::Nonlinear, 0.2, 0.01);
        let s = evolved("ellipse", 12, &c);
        c.picard_tol = 1e3;
        let r = step(&s, &c).unwrap();
        assert_eq!(r.diagnostics.picard_iters, 1);
        let sys = assemble(&s, &c, Some(&s.x_cur)).unwrap();
        let x = sparse::solve(&sys.to_csc().unwrap(), &sys.rhs).unwrap();
        assert_eq!(r.velocity.values(), &x[..12]);
    }

    #[test]
    fn picard_budget_exhaustion_is_an_error() {
        let mut c = cfg(Variant::Nonlinear, 0.0, 0.05);
        let s = state_of("ellipse", 16);
        c.picard_max = 1;
        c.picard_tol = 1e-15;
        assert!(matches!(
            step(&s, &c),
            Err(Error::PicardDivergence { iterations: 1, .. })
        ));
    }

    #[test]
    fn picard_converges_within_a_few_solves() {
        let c = cfg(Variant::Nonlinear, 0.0, 1e-3);
        let mut s = state_of("tube", 64);
        for _ in 0..20 {
            let r = step(&s, &c).unwrap();
            assert!(r.diagnostics.picard_iters <= 8);
            s = s.advanced(&r, c.dt);
        }
    }

    #[test]
    fn length_preserving_circle_is_stationary() {
        let r0 = 1.5;
        let n = 64;
        let d = initial_data(&Parameterization::Circle { radius: r0 }, n).unwrap();
        let s = SchemeState::from_initial(&d);
        let res = step_length_preserving(&s, &cfg(Variant::LengthPreserving, 0.0, 0.01)).unwrap();
        assert!(res.velocity.values().iter().all(|v| v.abs() < 1e-10));
        let lam = res.diagnostics.multiplier.unwrap();
        assert!((lam * 2.0 * r0 * r0 - 1.0).abs() < 1e-2, "{lam}");
        let exact = 0.5 * d.kappa0[0] * d.kappa0[0];
        assert!((lam - exact).abs() < 1e-10);
        assert!(res.diagnostics.length_change.unwrap().abs() < 1e-12);
    }

    #[test]
    fn length_preserving_with_zero_curvature_is_singular() {
        let mut s = state_of("circle", 12);
        s.kappa = PeriodicNodalField::zeros(12);
        let r = step_length_preserving(&s, &cfg(Variant::LengthPreserving, 0.0, 0.01));
        assert!(matches!(r, Err(Error::Solvability { .. })), "{r:?}");
    }

    #[test]
    fn stability_on_random_states() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        for v in Variant::ALL {
            for _ in 0..4 {
                let n = rng.gen_range(8..24);
                let lambda = rng.gen_range(0.0..2.0);
                let dt = 10f64.powf(rng.gen_range(-4.0..0.0));
                let c = cfg(v, lambda, dt);
                let mut s = state_of("ellipse", n);
                s.varkappa = PeriodicNodalField::from_fn(n, |_| rng.gen_range(-3.0..3.0));
                s.kappa = PeriodicNodalField::from_fn(n, |_| rng.gen_range(-3.0..-0.5));
                let e0 = s.variant_energy(&c).unwrap();
                for _ in 0..3 {
                    let r = step(&s, &c).unwrap();
                    assert!(
                        r.diagnostics.stability_residual <= 1e-12 * e0.max(1.0),
                        "{v} {:?}",
                        r.diagnostics
                    );
                    s = s.advanced(&r, dt);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn steppers_are_rigid_motion_equivariant(
            vi in 0usize..4,
            angle in -PI..PI,
            sx in -3.0f64..3.0,
            sy in -3.0f64..3.0,
        ) {
            let c = cfg(Variant::ALL[vi], 0.4, 0.01);
            let s = evolved("ellipse", 12, &c);
            let shift = Vec2::new(sx, sy);
            let mut moved = s.clone();
            moved.x_cur = s.x_cur.rotated(angle).translated(shift);
            moved.x_prev = s.x_prev.rotated(angle).translated(shift);
            let (a, b) = (step(&s, &c).unwrap(), step(&moved, &c).unwrap());
            let expect = a.x_new.rotated(angle).translated(shift);
            prop_assert!(b.x_new.max_vertex_distance(&expect) < 1e-10);
            prop_assert!(a.velocity.max_abs_diff(&b.velocity) < 1e-10);
            prop_assert!(a.varkappa.max_abs_diff(&b.varkappa) < 1e-10);
            prop_assert!(a.kappa.max_abs_diff(&b.kappa) < 1e-10);
        }
    }
}
