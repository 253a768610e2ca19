//! Periodic piecewise-linear finite elements on the reference circle `ℝ/ℤ`.
//!
//! The reference mesh is uniform: `J` nodes `ρ_j = j/J` and `J` elements,
//! element `e` spanning nodes `e` and `(e + 1) mod J`. Quantities that live on
//! elements (edge lengths, weights `|X_ρ|`, tangents) are [`ElementField`]s;
//! continuous P1 data are [`PeriodicNodalField`]s.
//!
//! Three inner products are provided: the exact one (3-point Gauss–Legendre
//! per element), the mass-lumped (vertex trapezoid) one and the weighted
//! stiffness product. The `local_*` helpers give the 2×2 element matrices the
//! step assembly is built from, using the same quadrature.

use std::ops::Index;

use crate::error::{Error, Result};

/// Gauss–Legendre points on `[0, 1]` with weights summing to one; exact for
/// polynomials of degree ≤ 5.
pub const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Highest polynomial degree integrated exactly by [`GAUSS3`].
pub const MAX_EXACT_DEGREE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceMesh {
    nodes: usize,
}

impl ReferenceMesh {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < 3 {
            return Err(Error::TooFewNodes(nodes));
        }
        Ok(Self { nodes })
    }

    /// Number of nodes, equal to the number of elements.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn h(&self) -> f64 {
        1.0 / self.nodes as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    /// The two nodes bounding element `e`.
    pub fn element_nodes(&self, e: usize) -> (usize, usize) {
        (e, (e + 1) % self.nodes)
    }
}

/// A field that is a polynomial of fixed degree on every element and may jump
/// across nodes.
pub trait Piecewise {
    fn elements(&self) -> usize;
    /// Polynomial degree on each element.
    fn degree(&self) -> usize;
    /// Value in element `e` at local coordinate `t ∈ [0, 1]`; `t = 0` and
    /// `t = 1` give the one-sided limits at the element's endpoints.
    fn eval(&self, e: usize, t: f64) -> f64;
}

/// Continuous P1 data: one value per node, affine on each element.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicNodalField(pub Vec<f64>);

impl PeriodicNodalField {
    pub fn zeros(nodes: usize) -> Self {
        Self(vec![0.0; nodes])
    }

    pub fn constant(nodes: usize, value: f64) -> Self {
        Self(vec![value; nodes])
    }

    pub fn from_fn(nodes: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self((0..nodes).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Index<usize> for PeriodicNodalField {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

impl Piecewise for PeriodicNodalField {
    fn elements(&self) -> usize {
        self.0.len()
    }
    fn degree(&self) -> usize {
        1
    }
    fn eval(&self, e: usize, t: f64) -> f64 {
        let a = self.0[e];
        let b = self.0[(e + 1) % self.0.len()];
        (1.0 - t) * a + t * b
    }
}

/// Piecewise-constant data, one value per element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementField(pub Vec<f64>);

impl ElementField {
    pub fn constant(elements: usize, value: f64) -> Self {
        Self(vec![value; elements])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Element-wise reciprocal.
    pub fn recip(&self) -> Self {
        Self(self.0.iter().map(|v| 1.0 / v).collect())
    }
}

impl Index<usize> for ElementField {
    type Output = f64;
    fn index(&self, e: usize) -> &f64 {
        &self.0[e]
    }
}

impl Piecewise for ElementField {
    fn elements(&self) -> usize {
        self.0.len()
    }
    fn degree(&self) -> usize {
        0
    }
    fn eval(&self, e: usize, _t: f64) -> f64 {
        self.0[e]
    }
}

/// Element-wise product of two piecewise fields.
pub struct Product<'a>(pub &'a dyn Piecewise, pub &'a dyn Piecewise);

impl Piecewise for Product<'_> {
    fn elements(&self) -> usize {
        self.0.elements()
    }
    fn degree(&self) -> usize {
        self.0.degree() + self.1.degree()
    }
    fn eval(&self, e: usize, t: f64) -> f64 {
        self.0.eval(e, t) * self.1.eval(e, t)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Mass-lumped product `(u, v w)^h = (h/2) Σ_e w_e [(uv)(ρ_{e+1}⁻) + (uv)(ρ_e⁺)]`.
pub fn lumped_inner(u: &dyn Piecewise, v: &dyn Piecewise, w: &ElementField) -> Result<f64> {
    let n = w.len();
    check_len(n, u.elements())?;
    check_len(n, v.elements())?;
    let h = 1.0 / n as f64;
    let sum: f64 = (0..n)
        .map(|e| w[e] * (u.eval(e, 0.0) * v.eval(e, 0.0) + u.eval(e, 1.0) * v.eval(e, 1.0)))
        .sum();
    Ok(0.5 * h * sum)
}

/// `∫_𝕀 u v w dρ` by 3-point Gauss per element. `degree` is the caller's
/// bound on the polynomial degree of `u v`; both it and the fields' actual
/// degree must not exceed [`MAX_EXACT_DEGREE`].
pub fn exact_inner(
    u: &dyn Piecewise,
    v: &dyn Piecewise,
    w: &ElementField,
    degree: usize,
) -> Result<f64> {
    if degree > MAX_EXACT_DEGREE {
        return Err(Error::UnsupportedDegree(degree));
    }
    let actual = u.degree() + v.degree();
    if actual > degree {
        return Err(Error::UnsupportedDegree(actual));
    }
    let n = w.len();
    check_len(n, u.elements())?;
    check_len(n, v.elements())?;
    let h = 1.0 / n as f64;
    let sum: f64 = (0..n)
        .map(|e| {
            let local: f64 = GAUSS3
                .iter()
                .map(|&(t, g)| g * u.eval(e, t) * v.eval(e, t))
                .sum();
            w[e] * local
        })
        .sum();
    Ok(h * sum)
}

/// `∫_𝕀 u_ρ v_ρ winv dρ = Σ_e (u_{e+1} − u_e)(v_{e+1} − v_e) winv_e / h`.
pub fn stiffness_inner(
    u: &PeriodicNodalField,
    v: &PeriodicNodalField,
    winv: &ElementField,
) -> Result<f64> {
    let n = winv.len();
    check_len(n, u.len())?;
    check_len(n, v.len())?;
    positive_weights(winv)?;
    let h = 1.0 / n as f64;
    let sum: f64 = (0..n)
        .map(|e| {
            let f = (e + 1) % n;
            (u[f] - u[e]) * (v[f] - v[e]) * winv[e]
        })
        .sum();
    Ok(sum / h)
}

/// Fails on the first element weight that is not strictly positive and finite.
pub fn positive_weights(w: &ElementField) -> Result<()> {
    match w.0.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        Some(index) => Err(Error::DegenerateElement {
            index,
            value: w[index],
        }),
        None => Ok(()),
    }
}

/// Local hat functions on `[0, 1]`.
#[inline]
fn hat(t: f64) -> [f64; 2] {
    [1.0 - t, t]
}

/// `M[a][b] = ∫_e c φ_a φ_b dρ` on an element of reference length `h`, with
/// `c` given as a function of the local coordinate.
pub fn local_mass(h: f64, coeff: impl Fn(f64) -> f64) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for &(t, g) in &GAUSS3 {
        let phi = hat(t);
        let c = g * h * coeff(t);
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] += c * phi[a] * phi[b];
            }
        }
    }
    m
}

/// `F[a] = ∫_e c φ_a dρ`.
pub fn local_load(h: f64, coeff: impl Fn(f64) -> f64) -> [f64; 2] {
    let mut f = [0.0; 2];
    for &(t, g) in &GAUSS3 {
        let phi = hat(t);
        let c = g * h * coeff(t);
        f[0] += c * phi[0];
        f[1] += c * phi[1];
    }
    f
}

/// `K[a][b] = ∫_e c φ_a' φ_b' dρ` for an element-constant coefficient `c`.
pub fn local_stiffness(h: f64, c: f64) -> [[f64; 2]; 2] {
    let k = c / h;
    [[k, -k], [-k, k]]
}

/// `S[a][b] = ∫_e g (φ_b' φ_a − φ_b φ_a') dρ`: the skew-symmetric convection
/// form with trial index `b` and test index `a`.
pub fn local_skew(h: f64, g: impl Fn(f64) -> f64) -> [[f64; 2]; 2] {
    let dphi = [-1.0 / h, 1.0 / h];
    let mut s = [[0.0; 2]; 2];
    for &(t, w) in &GAUSS3 {
        let phi = hat(t);
        let c = w * h * g(t);
        for a in 0..2 {
            for b in 0..2 {
                s[a][b] += c * (dphi[b] * phi[a] - phi[b] * dphi[a]);
            }
        }
    }
    s
}

/// Diagonal of the lumped element mass: `∫^h_e c φ_a φ_a = (h/2) c(end_a)`.
pub fn local_lumped(h: f64, c_at_ends: [f64; 2]) -> [f64; 2] {
    [0.5 * h * c_at_ends[0], 0.5 * h * c_at_ends[1]]
}
