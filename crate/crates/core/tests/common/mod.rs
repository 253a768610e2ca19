//! Independent oracles shared by the integration tests: 10-point Gauss
//! quadrature, a dense brute-force assembly of the step system from global hat
//! functions, and dense Gaussian elimination.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use willmore::fem::PeriodicNodalField;
use willmore::initial::{initial_data, Parameterization};
use willmore::schemes::{SchemeConfig, SchemeState, Variant};
use willmore::{ClosedCurve, Vec2};

/// Gauss–Legendre nodes and weights on `[−1, 1]`, exact to degree 19.
pub const GAUSS10: [(f64, f64); 10] = [
    (-0.973_906_528_517_171_7, 0.066_671_344_308_688_1),
    (-0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (-0.679_409_568_299_024_4, 0.219_086_362_515_982_0),
    (-0.433_395_394_129_247_2, 0.269_266_719_309_996_3),
    (-0.148_874_338_981_631_2, 0.295_524_224_714_752_9),
    (0.148_874_338_981_631_2, 0.295_524_224_714_752_9),
    (0.433_395_394_129_247_2, 0.269_266_719_309_996_3),
    (0.679_409_568_299_024_4, 0.219_086_362_515_982_0),
    (0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (0.973_906_528_517_171_7, 0.066_671_344_308_688_1),
];

/// `∫_a^b f`.
pub fn gauss10(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    GAUSS10
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Periodic hat function of node `i` and its derivative, on element `e`
/// (to pick the one-sided derivative at element ends).
pub fn hat(n: usize, i: usize, e: usize, rho: f64) -> (f64, f64) {
    let h = 1.0 / n as f64;
    let left = e;
    let right = (e + 1) % n;
    let t = rho * n as f64 - e as f64;
    let mut v = 0.0;
    let mut d = 0.0;
    if i == left {
        v += 1.0 - t;
        d -= 1.0 / h;
    }
    if i == right {
        v += t;
        d += 1.0 / h;
    }
    (v, d)
}

pub fn nodal(values: &[f64], e: usize, rho: f64) -> f64 {
    let n = values.len();
    let t = rho * n as f64 - e as f64;
    (1.0 - t) * values[e] + t * values[(e + 1) % n]
}

/// Geometry of element `e` computed from raw coordinates.
pub struct Edge {
    pub len: f64,
    pub weight: f64,
    pub tau: Vec2,
    pub nu: Vec2,
}

pub fn edge(curve: &ClosedCurve, e: usize) -> Edge {
    let n = curve.nodes();
    let p = curve.vertices()[e];
    let q = curve.vertices()[(e + 1) % n];
    let (dx, dy) = (q.x - p.x, q.y - p.y);
    let len = (dx * dx + dy * dy).sqrt();
    let tau = Vec2::new(dx / len, dy / len);
    Edge {
        len,
        weight: len * n as f64,
        tau,
        // clockwise rotation of the tangent
        nu: Vec2::new(tau.y, -tau.x),
    }
}

/// Dense matrix and right-hand side of the step system, with rows ordered as
/// the library does: velocity rows, curvature-evolution rows, the two
/// curvature-identity rows, the normal-motion rows, then the constraint.
pub fn brute_force_system(
    state: &SchemeState,
    cfg: &SchemeConfig,
    frozen: Option<&ClosedCurve>,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = state.x_cur.nodes();
    let lp = cfg.variant == Variant::LengthPreserving;
    let nonlinear = cfg.variant == Variant::Nonlinear;
    let dim = if lp { 5 * n + 1 } else { 5 * n };
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    let h = 1.0 / n as f64;
    let dt = cfg.dt;
    let lambda = if lp { 0.0 } else { cfg.lambda };
    let lagged: Vec<f64> = match cfg.variant {
        Variant::AltLinear => state.kappa.values().to_vec(),
        _ => state.varkappa.values().to_vec(),
    };
    let iterate = frozen.unwrap_or(&state.x_cur);
    let xm = state.x_cur.vertices();
    let convect: Vec<Vec2> = (0..n)
        .map(|j| {
            if nonlinear {
                (iterate.vertices()[j] - xm[j]) / dt
            } else {
                (xm[j] - state.x_prev.vertices()[j]) / dt
            }
        })
        .collect();

    let (vel, cur, pos, kap) = (0, n, 2 * n, 4 * n);
    for e in 0..n {
        let g = edge(&state.x_cur, e);
        let prev = edge(&state.x_prev, e);
        let sqrt_j = if nonlinear {
            1.0
        } else {
            (prev.len / g.len).sqrt()
        };
        let (a0, b0) = (e as f64 * h, (e + 1) as f64 * h);
        let stretch = if nonlinear {
            let it = edge(iterate, e);
            let old = g.tau * g.len;
            let new = it.tau * it.len;
            (new - old).dot(&new) / (h * h) / g.weight
        } else {
            0.0
        };
        let ends = [(e, a0), ((e + 1) % n, b0)];
        for i in 0..n {
            // lumped contributions: only at the element's own nodes
            for &(node, rho) in &ends {
                let (phi_i, _) = hat(n, i, e, rho);
                if phi_i == 0.0 || node != i {
                    continue;
                }
                let m = 0.5 * h * g.weight * phi_i;
                for c in 0..2 {
                    a[kap + i][pos + c * n + i] += m * g.nu[c] / dt;
                    a[pos + c * n + i][kap + i] += m * g.nu[c];
                }
                b[kap + i] += m * g.nu.dot(&xm[i]) / dt;
                if lp {
                    a[i][5 * n] -= m * state.kappa[i];
                    a[5 * n][i] += m * state.kappa[i];
                }
            }
            b[cur + i] += gauss10(a0, b0, |r| {
                nodal(state.varkappa.values(), e, r) * sqrt_j * hat(n, i, e, r).0 * g.weight
            }) / dt;
            for j in 0..n {
                let mass = gauss10(a0, b0, |r| hat(n, j, e, r).0 * hat(n, i, e, r).0 * g.weight);
                let stiff = gauss10(a0, b0, |r| hat(n, j, e, r).1 * hat(n, i, e, r).1 / g.weight);
                let cubic = gauss10(a0, b0, |r| {
                    let c = nodal(&lagged, e, r);
                    0.5 * c * c * hat(n, j, e, r).0 * hat(n, i, e, r).0 * g.weight
                });
                let skew = gauss10(a0, b0, |r| {
                    let u = Vec2::new(
                        nodal(&convect.iter().map(|v| v.x).collect::<Vec<_>>(), e, r),
                        nodal(&convect.iter().map(|v| v.y).collect::<Vec<_>>(), e, r),
                    );
                    let (pj, dj) = hat(n, j, e, r);
                    let (pi, di) = hat(n, i, e, r);
                    g.tau.dot(&u) * (dj * pi - pj * di)
                });
                let unweighted = gauss10(a0, b0, |r| hat(n, j, e, r).0 * hat(n, i, e, r).0);
                a[vel + i][vel + j] += mass;
                a[vel + i][cur + j] += cubic - stiff;
                a[vel + i][kap + j] -= lambda * mass;
                a[cur + i][cur + j] += mass / dt - 0.5 * skew + stretch / (2.0 * dt) * unweighted;
                a[cur + i][vel + j] += stiff - cubic;
                a[kap + i][vel + j] -= mass;
                for c in 0..2 {
                    a[pos + c * n + i][pos + c * n + j] += stiff;
                }
            }
        }
    }
    (a, b)
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        m.swap(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    x
}

/// A state with `X^{m−1} ≠ Xᵐ` and unrelated random curvatures.
pub fn random_state(n: usize, seed: u64) -> SchemeState {
    let mut r = rand::rngs::StdRng::seed_from_u64(seed);
    let d = initial_data(&Parameterization::Ellipse, n).unwrap();
    let jitter = |c: &ClosedCurve, r: &mut rand::rngs::StdRng, s: f64| {
        ClosedCurve::new(
            c.vertices()
                .iter()
                .map(|v| v + Vec2::new(r.gen_range(-s..s), r.gen_range(-s..s)))
                .collect(),
        )
        .unwrap()
    };
    let x_cur = jitter(&d.x0, &mut r, 0.05);
    let x_prev = jitter(&x_cur, &mut r, 0.05);
    SchemeState {
        x_cur,
        x_prev,
        varkappa: PeriodicNodalField::from_fn(n, |_| r.gen_range(-2.0..2.0)),
        kappa: PeriodicNodalField::from_fn(n, |_| r.gen_range(-2.0..-0.2)),
        t: 0.3,
        m: 5,
        initial_length: d.x0.length(),
    }
}

/// A Picard iterate near `Xᵐ`.
pub fn random_iterate(state: &SchemeState, seed: u64) -> ClosedCurve {
    let mut r = rand::rngs::StdRng::seed_from_u64(seed);
    ClosedCurve::new(
        state
            .x_cur
            .vertices()
            .iter()
            .map(|v| v + Vec2::new(r.gen_range(-0.02..0.02), r.gen_range(-0.02..0.02)))
            .collect(),
    )
    .unwrap()
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}
