//! Discrete differential geometry of closed polygonal curves.
//!
//! Orientation convention: `(a, b)^⊥ = (−b, a)` and `ν = −τ^⊥`, so the
//! normal of a counterclockwise curve points outward and a counterclockwise
//! circle of radius `r` has curvature `−1/r`.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::fem::{positive_weights, ElementField, PeriodicNodalField};

pub type Vec2 = Vector2<f64>;

/// Counterclockwise rotation by a right angle.
#[inline]
pub fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// A closed polygon with `J ≥ 3` vertices and no zero-length edge.
///
/// Edge `e` joins vertex `e` to vertex `(e + 1) mod J`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    vertices: Vec<Vec2>,
}

impl ClosedCurve {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::TooFewNodes(n));
        }
        if let Some(bad) = vertices
            .iter()
            .position(|v| !(v.x.is_finite() && v.y.is_finite()))
        {
            return Err(Error::InvalidConfig(format!("vertex {bad} is not finite")));
        }
        let curve = Self { vertices };
        if let Some(edge) = (0..n).find(|&e| curve.edge(e).norm() == 0.0) {
            return Err(Error::DegenerateCurve { edge });
        }
        Ok(curve)
    }

    pub fn from_points(points: &[[f64; 2]]) -> Result<Self> {
        Self::new(points.iter().map(|p| Vec2::new(p[0], p[1])).collect())
    }

    pub fn nodes(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn vertex(&self, j: usize) -> Vec2 {
        self.vertices[j % self.vertices.len()]
    }

    /// `X(ρ_{e+1}) − X(ρ_e)`.
    pub fn edge(&self, e: usize) -> Vec2 {
        let n = self.vertices.len();
        self.vertices[(e + 1) % n] - self.vertices[e]
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        (0..self.nodes()).map(|e| self.edge(e).norm()).collect()
    }

    pub fn length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    /// Vertex average.
    pub fn centroid(&self) -> Vec2 {
        self.vertices.iter().sum::<Vec2>() / self.nodes() as f64
    }

    /// Diagonal of the axis-aligned bounding box.
    pub fn extent(&self) -> f64 {
        let (mut lo, mut hi) = (self.vertices[0], self.vertices[0]);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (hi - lo).norm()
    }

    pub fn translated(&self, shift: Vec2) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + shift).collect(),
        }
    }

    /// Rotation about the origin by `angle` radians.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|v| Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y))
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.vertices.iter().map(|v| v * factor).collect())
    }

    /// Same polygon traversed in the opposite direction, keeping vertex 0.
    pub fn reversed(&self) -> Self {
        let n = self.nodes();
        Self {
            vertices: (0..n).map(|j| self.vertices[(n - j) % n]).collect(),
        }
    }

    /// `max_j |X_j − Y_j|` for curves with the same vertex count.
    pub fn max_vertex_distance(&self, other: &Self) -> f64 {
        self.vertices
            .iter()
            .zip(&other.vertices)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Split into x and y nodal fields.
    pub fn components(&self) -> (PeriodicNodalField, PeriodicNodalField) {
        (
            PeriodicNodalField(self.vertices.iter().map(|v| v.x).collect()),
            PeriodicNodalField(self.vertices.iter().map(|v| v.y).collect()),
        )
    }
}

/// Element-wise tangent frame of a polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFrame {
    /// `|a_e|`.
    pub lengths: ElementField,
    pub tangents: Vec<Vec2>,
    pub normals: Vec<Vec2>,
    /// `|X_ρ| = |a_e| / h`.
    pub weights: ElementField,
}

impl CurveFrame {
    pub fn inverse_weights(&self) -> ElementField {
        self.weights.recip()
    }
}

pub fn frame(curve: &ClosedCurve) -> CurveFrame {
    let n = curve.nodes();
    let mut lengths = Vec::with_capacity(n);
    let mut tangents = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for e in 0..n {
        let a = curve.edge(e);
        let len = a.norm();
        let tau = a / len;
        lengths.push(len);
        tangents.push(tau);
        normals.push(-perp(tau));
    }
    let weights = ElementField(lengths.iter().map(|l| l * n as f64).collect());
    CurveFrame {
        lengths: ElementField(lengths),
        tangents,
        normals,
        weights,
    }
}

/// Length-weighted average of the two edge normals meeting at each vertex.
///
/// This is the unique nodal field `ω` with `(ω·e, ξ|X_ρ|)^h = (ν·e, ξ|X_ρ|)`
/// for every nodal `ξ` and direction `e`.
pub fn vertex_normal(curve: &ClosedCurve) -> Vec<Vec2> {
    let n = curve.nodes();
    (0..n)
        .map(|j| {
            let before = curve.edge((j + n - 1) % n);
            let after = curve.edge(j);
            -perp(before + after) / (before.norm() + after.norm())
        })
        .collect()
}

/// Outcome of the solvability checks on the vertex normals of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionReport {
    /// `λ > 0` or every vertex normal is nonzero.
    pub nonzero_normals: bool,
    /// The vertex normals span the plane.
    pub spanning_normals: bool,
    pub min_normal_norm: f64,
    /// Smallest singular value of the `J × 2` matrix of vertex normals.
    pub min_singular_value: f64,
}

impl AssumptionReport {
    pub fn ok(&self) -> bool {
        self.nonzero_normals && self.spanning_normals
    }
}

/// Relative tolerance used for the vertex-normal degeneracy checks.
pub const NORMAL_TOLERANCE: f64 = 1e-12;

pub fn check_assumptions(curve: &ClosedCurve, lambda: f64) -> AssumptionReport {
    let omega = vertex_normal(curve);
    let tol = NORMAL_TOLERANCE * curve.extent();
    let min_normal_norm = omega.iter().map(|w| w.norm()).fold(f64::INFINITY, f64::min);
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for w in &omega {
        a += w.x * w.x;
        b += w.x * w.y;
        c += w.y * w.y;
    }
    let mean = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let min_singular_value = (mean - radius).max(0.0).sqrt();
    AssumptionReport {
        nonzero_normals: lambda > 0.0 || min_normal_norm > tol,
        spanning_normals: min_singular_value > tol,
        min_normal_norm,
        min_singular_value,
    }
}

/// Longest over shortest edge.
pub fn mesh_ratio(curve: &ClosedCurve) -> f64 {
    let lengths = curve.edge_lengths();
    let max = lengths.iter().copied().fold(0.0, f64::max);
    let min = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// Discrete energies of a curvature field on a polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `½ (ϰ², w_cur)`.
    pub bending: f64,
    /// `Σ_e w_cur,e h`.
    pub length: f64,
    /// `½ (ϰ², w_prev) + λ·length`: the energy of the two-level linear schemes.
    pub e_linear: f64,
    /// `½ (ϰ², w_cur) + λ·length`.
    pub e_bar: f64,
    pub lambda: f64,
}

/// `½ ∫ ϰ² w dρ`, exact for P1 `ϰ` and element-constant `w` (Simpson per element).
pub fn bending_energy(varkappa: &PeriodicNodalField, weight: &ElementField) -> f64 {
    let n = weight.len();
    let h = 1.0 / n as f64;
    (0..n)
        .map(|e| {
            let (a, b) = (varkappa[e], varkappa[(e + 1) % n]);
            weight[e] * h / 6.0 * (a * a + a * b + b * b)
        })
        .sum()
}

pub fn energies(
    varkappa: &PeriodicNodalField,
    prev_weight: &ElementField,
    cur_weight: &ElementField,
    lambda: f64,
) -> Result<EnergyReport> {
    let n = cur_weight.len();
    for len in [varkappa.len(), prev_weight.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    positive_weights(prev_weight)?;
    positive_weights(cur_weight)?;
    let h = 1.0 / n as f64;
    let length: f64 = cur_weight.values().iter().map(|w| w * h).sum();
    let bending = bending_energy(varkappa, cur_weight);
    let previous = bending_energy(varkappa, prev_weight);
    Ok(EnergyReport {
        bending,
        length,
        e_linear: previous + lambda * length,
        e_bar: bending + lambda * length,
        lambda,
    })
}
