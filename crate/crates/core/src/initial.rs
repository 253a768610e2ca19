//! Named initial curves and the projection that turns a sampled polygon into
//! consistent discrete initial data.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fem::{PeriodicNodalField, GAUSS3};
use crate::geometry::{check_assumptions, perp, ClosedCurve, Vec2};
use crate::schemes::solve_checked;
use crate::sparse::CooMatrix;

/// A closed map `ρ ∈ [0, 1] ↦ ℝ²`, or an explicit vertex list.
#[derive(Debug, Clone, PartialEq)]
pub enum Parameterization {
    /// Unit circle through `(cos g, sin g)` with `g(ρ) = 2πρ + 0.1 sin 2πρ`.
    CircleSeed,
    /// Circle sampled at equal angles.
    Circle {
        radius: f64,
    },
    /// Rounded 8×1 tube: caps of radius ½ joined by straights of length 7,
    /// traversed counterclockwise at constant speed from `(4, 0)`.
    Stadium,
    /// `(3 cos 2πρ, ½ sin 2πρ)`.
    Ellipse,
    /// The same ellipse reparameterized by arc length.
    EllipseArcLength,
    /// Asymmetric 2:1 lemniscate with amplitude 1 on `[¼, ¾]` and 2 elsewhere.
    Lemniscate,
    Vertices(Vec<Vec2>),
}

const ELLIPSE_AXES: (f64, f64) = (3.0, 0.5);
const STADIUM_HALF_STRAIGHT: f64 = 3.5;
const STADIUM_RADIUS: f64 = 0.5;

impl Parameterization {
    /// Keys accepted by [`Parameterization::from_key`].
    pub const KEYS: [&'static str; 6] = [
        "circle_seed",
        "circle",
        "tube",
        "ellipse",
        "ellipse_uniform",
        "lemniscate",
    ];

    pub fn from_key(key: &str) -> Result<Self> {
        Ok(match key {
            "circle_seed" => Self::CircleSeed,
            "circle" => Self::Circle { radius: 1.0 },
            "tube" | "stadium" => Self::Stadium,
            "ellipse" => Self::Ellipse,
            "ellipse_uniform" => Self::EllipseArcLength,
            "lemniscate" => Self::Lemniscate,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown seed `{other}` (expected one of {})",
                    Self::KEYS.join(", ")
                )))
            }
        })
    }

    pub fn key(&self) -> &'static str {
        match self {
            Self::CircleSeed => "circle_seed",
            Self::Circle { .. } => "circle",
            Self::Stadium => "tube",
            Self::Ellipse => "ellipse",
            Self::EllipseArcLength => "ellipse_uniform",
            Self::Lemniscate => "lemniscate",
            Self::Vertices(_) => "vertices",
        }
    }

    /// Point at parameter `rho`; `None` for explicit vertex lists.
    pub fn eval(&self, rho: f64) -> Option<Vec2> {
        let theta = 2.0 * PI * rho;
        Some(match self {
            Self::CircleSeed => {
                let g = theta + 0.1 * theta.sin();
                Vec2::new(g.cos(), g.sin())
            }
            Self::Circle { radius } => Vec2::new(radius * theta.cos(), radius * theta.sin()),
            Self::Stadium => stadium(rho),
            Self::Ellipse => Vec2::new(ELLIPSE_AXES.0 * theta.cos(), ELLIPSE_AXES.1 * theta.sin()),
            Self::EllipseArcLength => {
                let phi = ellipse_arc_length_inverse(rho.rem_euclid(1.0));
                Vec2::new(
                    ELLIPSE_AXES.0 * (2.0 * PI * phi).cos(),
                    ELLIPSE_AXES.1 * (2.0 * PI * phi).sin(),
                )
            }
            Self::Lemniscate => {
                let r = rho.rem_euclid(1.0);
                let a = if (0.25..=0.75).contains(&r) { 1.0 } else { 2.0 };
                let (s, c) = theta.sin_cos();
                let d = 1.0 + s * s;
                Vec2::new(a * c / d, a * c * s / d)
            }
            Self::Vertices(_) => return None,
        })
    }
}

fn stadium(rho: f64) -> Vec2 {
    let (l, r) = (STADIUM_HALF_STRAIGHT, STADIUM_RADIUS);
    let quarter = 0.5 * PI * r;
    let straight = 2.0 * l;
    let total = 2.0 * straight + 2.0 * PI * r;
    let mut s = rho.rem_euclid(1.0) * total;
    // right cap, upper half
    if s < quarter {
        let a = s / r;
        return Vec2::new(l + r * a.cos(), r * a.sin());
    }
    s -= quarter;
    if s < straight {
        return Vec2::new(l - s, r);
    }
    s -= straight;
    if s < 2.0 * quarter {
        let a = 0.5 * PI + s / r;
        return Vec2::new(-l + r * a.cos(), r * a.sin());
    }
    s -= 2.0 * quarter;
    if s < straight {
        return Vec2::new(-l + s, -r);
    }
    s -= straight;
    let a = 1.5 * PI + s / r;
    Vec2::new(l + r * a.cos(), r * a.sin())
}

fn ellipse_speed(phi: f64) -> f64 {
    let theta = 2.0 * PI * phi;
    2.0 * PI * (ELLIPSE_AXES.0 * theta.sin()).hypot(ELLIPSE_AXES.1 * theta.cos())
}

const ELLIPSE_PANELS: usize = 4096;

fn gauss_panel(a: f64, b: f64) -> f64 {
    GAUSS3
        .iter()
        .map(|&(t, g)| g * ellipse_speed(a + t * (b - a)))
        .sum::<f64>()
        * (b - a)
}

/// Parameter `φ` at which the ellipse has covered the fraction `s` of its length.
fn ellipse_arc_length_inverse(s: f64) -> f64 {
    let n = ELLIPSE_PANELS;
    let dp = 1.0 / n as f64;
    let mut cumulative = Vec::with_capacity(n + 1);
    cumulative.push(0.0);
    for k in 0..n {
        let last = cumulative[k];
        cumulative.push(last + gauss_panel(k as f64 * dp, (k + 1) as f64 * dp));
    }
    let target = s * cumulative[n];
    let k = cumulative.partition_point(|&c| c <= target).clamp(1, n) - 1;
    let start = k as f64 * dp;
    let mut phi = start + dp * (target - cumulative[k]) / (cumulative[k + 1] - cumulative[k]);
    for _ in 0..20 {
        let step = (cumulative[k] + gauss_panel(start, phi) - target) / ellipse_speed(phi);
        phi -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    phi
}

/// Samples vertex `j` at `ρ_j = j / J`.
pub fn interpolate(param: &Parameterization, nodes: usize) -> Result<ClosedCurve> {
    if nodes < 3 {
        return Err(Error::TooFewNodes(nodes));
    }
    match param {
        Parameterization::Vertices(v) => {
            if v.len() != nodes {
                return Err(Error::DimensionMismatch {
                    expected: v.len(),
                    found: nodes,
                });
            }
            ClosedCurve::new(v.clone())
        }
        Parameterization::Lemniscate if !nodes.is_multiple_of(4) => Err(Error::InvalidConfig(
            format!("the lemniscate needs a vertex count divisible by 4, got {nodes}"),
        )),
        _ => ClosedCurve::new(
            (0..nodes)
                .map(|j| param.eval(j as f64 / nodes as f64).expect("parametric"))
                .collect(),
        ),
    }
}

/// Consistent initial positions and curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub x0: ClosedCurve,
    pub varkappa0: PeriodicNodalField,
    pub kappa0: PeriodicNodalField,
    /// `max_j |δY_j|`.
    pub max_shift: f64,
}

/// Solves for a vertex correction `δY` with zero lumped normal component and
/// a curvature `κ` such that `(κν, η|Y_ρ|)^h = −((Y + δY)_ρ, η_ρ|Y_ρ|⁻¹)`.
///
/// Unknowns are laid out as `[δY_x | δY_y | κ]`.
pub fn bgn_project(y0: &ClosedCurve) -> Result<InitialData> {
    let n = y0.nodes();
    let lengths = y0.edge_lengths();
    let mut a = CooMatrix::with_capacity(3 * n, 15 * n);
    let mut rhs = vec![0.0; 3 * n];
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        // lumped normal (h/2) Σ_e |X_ρ| ν_e at node i
        let nl = -0.5 * perp(y0.vertex(next) - y0.vertex(prev));
        let (ix, iy, ik) = (i, n + i, 2 * n + i);
        a.push(ik, ix, nl.x);
        a.push(ik, iy, nl.y);
        for (c, row) in [(0usize, ix), (1, iy)] {
            a.push(row, ik, nl[c]);
            let off = c * n;
            let (kp, kn) = (1.0 / lengths[prev], 1.0 / lengths[i]);
            a.push(row, off + i, kp + kn);
            a.push(row, off + prev, -kp);
            a.push(row, off + next, -kn);
            let y = |j: usize| y0.vertex(j)[c];
            rhs[row] = -(kp * (y(i) - y(prev)) + kn * (y(i) - y(next)));
        }
    }
    let report = check_assumptions(y0, 0.0);
    let x = solve_checked(&a, &rhs, &report)?;
    let shifted: Vec<Vec2> = (0..n)
        .map(|j| y0.vertex(j) + Vec2::new(x[j], x[n + j]))
        .collect();
    let max_shift = (0..n).map(|j| x[j].hypot(x[n + j])).fold(0.0, f64::max);
    let kappa = PeriodicNodalField(x[2 * n..].to_vec());
    Ok(InitialData {
        x0: ClosedCurve::new(shifted)?,
        varkappa0: kappa.clone(),
        kappa0: kappa,
        max_shift,
    })
}

/// Interpolation followed by projection.
pub fn initial_data(param: &Parameterization, nodes: usize) -> Result<InitialData> {
    bgn_project(&interpolate(param, nodes)?)
}

/// One `x,y` pair per line. Blank lines, `#` comments and a non-numeric
/// header line are skipped; the polygon is closed implicitly.
pub fn parse_vertices_csv(text: &str) -> Result<Vec<Vec2>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => out.push(Vec2::new(v[0], v[1])),
            None if out.is_empty() && lineno == 0 => continue,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "line {}: expected `x,y`, got `{line}`",
                    lineno + 1
                )))
            }
        }
    }
    Ok(out)
}
