//! Sparse matrices in coordinate and compressed-column form, and a direct LU
//! solver with row pivoting.
//!
//! Factorization first computes a symmetric reverse Cuthill–McKee ordering of
//! the pattern of `A + Aᵀ`. Rows/columns whose degree is far above average
//! (the multiplier border of a constrained system) are excluded from the
//! ordering and placed last. When the reordered matrix is narrow-banded and has
//! no such border, a banded LU with partial pivoting is used; otherwise a
//! left-looking sparse LU (Gilbert–Peierls) with partial pivoting.

use std::cell::RefCell;
use thiserror::Error;

/// Pivots smaller than this multiple of `max |a_ij|` are reported as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-300;

/// Bound on the relative residual accepted by [`solve`].
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry ({row}, {col}) lies outside a {n}x{n} matrix")]
    IndexOutOfBounds { row: usize, col: usize, n: usize },
    #[error("singular matrix: pivot for unknown {index} has magnitude {pivot:e}")]
    Singular { index: usize, pivot: f64 },
    #[error("relative residual {residual:e} exceeds {tolerance:e}")]
    Inaccurate { residual: f64, tolerance: f64 },
}

/// Square matrix as an unordered list of `(row, col, value)` triplets.
///
/// Duplicate entries are allowed and are summed on compression.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CooMatrix {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl CooMatrix {
    pub fn new(n: usize) -> Self {
        Self::with_capacity(n, 0)
    }

    pub fn with_capacity(n: usize, capacity: usize) -> Self {
        Self {
            n,
            rows: Vec::with_capacity(capacity),
            cols: Vec::with_capacity(capacity),
            values: Vec::with_capacity(capacity),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.rows.push(row);
        self.cols.push(col);
        self.values.push(value);
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .zip(&self.cols)
            .zip(&self.values)
            .map(|((&r, &c), &v)| (r, c, v))
    }
}

/// Compressed sparse column matrix with sorted, duplicate-free row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Compresses a triplet list, summing duplicates.
    pub fn from_coo(coo: &CooMatrix) -> Result<Self, LinalgError> {
        let n = coo.n;
        for (r, c, _) in coo.triplets() {
            if r >= n || c >= n {
                return Err(LinalgError::IndexOutOfBounds { row: r, col: c, n });
            }
        }
        // Bucket by row, then stable-bucket by column: rows end up sorted
        // inside every column.
        let nnz = coo.nnz();
        let mut row_start = vec![0usize; n + 1];
        for &r in &coo.rows {
            row_start[r + 1] += 1;
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        let mut by_row = vec![0usize; nnz];
        let mut next = row_start.clone();
        for (k, &r) in coo.rows.iter().enumerate() {
            by_row[next[r]] = k;
            next[r] += 1;
        }

        let mut col_count = vec![0usize; n + 1];
        for &c in &coo.cols {
            col_count[c + 1] += 1;
        }
        for j in 0..n {
            col_count[j + 1] += col_count[j];
        }
        let mut slot = col_count.clone();
        let mut rows = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        for &k in &by_row {
            let c = coo.cols[k];
            rows[slot[c]] = coo.rows[k];
            vals[slot[c]] = coo.values[k];
            slot[c] += 1;
        }

        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for j in 0..n {
            let start = row_idx.len();
            for p in col_count[j]..col_count[j + 1] {
                if row_idx.len() > start && *row_idx.last().unwrap() == rows[p] {
                    *values.last_mut().unwrap() += vals[p];
                } else {
                    row_idx.push(rows[p]);
                    values.push(vals[p]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut coo = CooMatrix::new(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    coo.push(i, j, v);
                }
            }
        }
        Self::from_coo(&coo)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.col(j);
        match rows.binary_search(&i) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// Number of stored entries in each row.
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for &i in &self.row_idx {
            counts[i] += 1;
        }
        counts
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut sums = vec![0.0f64; self.n];
        for (&i, &v) in self.row_idx.iter().zip(&self.values) {
            sums[i] += v.abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for j in 0..self.n {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                dense[i][j] = v;
            }
        }
        dense
    }

    /// Symmetric permutation `B = P A Pᵀ` with `B[i][j] = A[perm[i]][perm[j]]`.
    fn permute_symmetric(&self, perm: &[usize]) -> CscMatrix {
        let n = self.n;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        col_ptr.push(0);
        for &old_col in perm {
            let (rows, vals) = self.col(old_col);
            scratch.clear();
            scratch.extend(rows.iter().zip(vals).map(|(&i, &v)| (inv[i], v)));
            scratch.sort_unstable_by_key(|e| e.0);
            for &(i, v) in &scratch {
                row_idx.push(i);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        CscMatrix {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    fn bandwidths(&self) -> (usize, usize) {
        let mut lower = 0;
        let mut upper = 0;
        for j in 0..self.n {
            let (rows, _) = self.col(j);
            if let (Some(&first), Some(&last)) = (rows.first(), rows.last()) {
                if first < j {
                    upper = upper.max(j - first);
                }
                if last > j {
                    lower = lower.max(last - j);
                }
            }
        }
        (lower, upper)
    }
}

/// Which elimination kernel a [`Factorization`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Pick banded when the reordered matrix is narrow and borderless.
    Auto,
    Banded,
    General,
}

/// LU factors of a symmetrically reordered square matrix; immutable once built.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Banded(BandLu),
    General(GeneralLu),
}

impl Factorization {
    pub fn new(a: &CscMatrix) -> Result<Self, LinalgError> {
        Self::with_method(a, Method::Auto)
    }

    pub fn with_method(a: &CscMatrix, method: Method) -> Result<Self, LinalgError> {
        let n = a.dim();
        let threshold = SINGULAR_PIVOT_RATIO * a.max_abs();
        let (perm, bordered) = cached_ordering(a);
        let b = a.permute_symmetric(&perm);
        let (kl, ku) = b.bandwidths();
        let banded = match method {
            Method::Banded => true,
            Method::General => false,
            Method::Auto => !bordered && 2 * (kl + ku) < n,
        };
        let kind = if banded {
            BandLu::factor(&b, kl, ku, threshold).map(Kind::Banded)
        } else {
            GeneralLu::factor(&b, threshold).map(Kind::General)
        }
        .map_err(|e| match e {
            LinalgError::Singular { index, pivot } => LinalgError::Singular {
                index: perm[index],
                pivot,
            },
            other => other,
        })?;
        Ok(Self { n, perm, kind })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_banded(&self) -> bool {
        matches!(self.kind, Kind::Banded(_))
    }

    /// `(kl, ku)` of the reordered matrix when the banded kernel is used.
    pub fn bandwidths(&self) -> Option<(usize, usize)> {
        match &self.kind {
            Kind::Banded(b) => Some((b.kl, b.ku)),
            Kind::General(_) => None,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: b.len(),
            });
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        match &self.kind {
            Kind::Banded(lu) => lu.solve_in_place(&mut y),
            Kind::General(lu) => lu.solve_in_place(&mut y),
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }
}

/// `‖b − A x‖∞ / max(‖b‖∞, ‖A‖∞ ‖x‖∞)`, zero when both scales vanish.
pub fn relative_residual(a: &CscMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r = ax
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (p, q)| m.max((q - p).abs()));
    let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = bn.max(a.norm_inf() * xn);
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

/// Solves `A x = b` by LU factorization with a few steps of iterative
/// refinement; fails if the relative residual stays above
/// [`RESIDUAL_TOLERANCE`].
pub fn solve(a: &CscMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if b.len() != a.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    let lu = Factorization::new(a)?;
    let mut x = lu.solve(b)?;
    let mut res = relative_residual(a, &x, b);
    let mut sweeps = 0;
    while res > 1e-13 && sweeps < 3 {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = lu.solve(&r)?;
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(p, q)| p + q).collect();
        let cres = relative_residual(a, &candidate, b);
        if cres >= res {
            break;
        }
        x = candidate;
        res = cres;
        sweeps += 1;
    }
    if res > RESIDUAL_TOLERANCE || !res.is_finite() {
        return Err(LinalgError::Inaccurate {
            residual: res,
            tolerance: RESIDUAL_TOLERANCE,
        });
    }
    Ok(x)
}

/// Column pointers, row indices, permutation, bordered flag.
type CachedOrdering = (Vec<usize>, Vec<usize>, Vec<usize>, bool);

thread_local! {
    /// Last pattern seen on this thread and its ordering. Time stepping
    /// factors a long run of matrices with one fixed pattern.
    static ORDERING_CACHE: RefCell<Option<CachedOrdering>> = const { RefCell::new(None) };
}

fn cached_ordering(a: &CscMatrix) -> (Vec<usize>, bool) {
    ORDERING_CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        if let Some((col_ptr, row_idx, perm, bordered)) = cache.as_ref() {
            if *col_ptr == a.col_ptr && *row_idx == a.row_idx {
                return (perm.clone(), *bordered);
            }
        }
        let (perm, bordered) = rcm_ordering(a);
        *cache = Some((a.col_ptr.clone(), a.row_idx.clone(), perm.clone(), bordered));
        (perm, bordered)
    })
}

/// Reverse Cuthill–McKee on the pattern of `A + Aᵀ`. Returns `perm[new] = old`
/// and whether any high-degree border vertices were moved to the end.
fn rcm_ordering(a: &CscMatrix) -> (Vec<usize>, bool) {
    let n = a.dim();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        let (rows, _) = a.col(j);
        for &i in rows {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let dense_cut = (n / 8).max(32);
    let is_border: Vec<bool> = adj.iter().map(|l| l.len() > dense_cut).collect();
    let degree = |v: usize| adj[v].iter().filter(|&&w| !is_border[w]).count();

    let mut visited = is_border.clone();
    let mut order = Vec::with_capacity(n);
    let mut candidates: Vec<usize> = (0..n).filter(|&v| !is_border[v]).collect();
    candidates.sort_by_key(|&v| (degree(v), v));

    let bfs_levels = |start: usize, visited: &[bool]| -> Vec<Vec<usize>> {
        let mut seen = visited.to_vec();
        seen[start] = true;
        let mut levels = vec![vec![start]];
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        levels
    };

    for &seed in &candidates {
        if visited[seed] {
            continue;
        }
        // George–Liu pseudo-peripheral start vertex.
        let mut start = seed;
        let mut levels = bfs_levels(start, &visited);
        loop {
            let last = levels.last().unwrap();
            let cand = *last
                .iter()
                .min_by_key(|&&v| (degree(v), v))
                .expect("nonempty level");
            let cand_levels = bfs_levels(cand, &visited);
            if cand_levels.len() > levels.len() {
                start = cand;
                levels = cand_levels;
            } else {
                break;
            }
        }
        visited[start] = true;
        let head = order.len();
        order.push(start);
        let mut q = head;
        while q < order.len() {
            let v = order[q];
            q += 1;
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree(w), w));
            for w in nbrs {
                visited[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    let mut bordered = false;
    for v in 0..n {
        if is_border[v] {
            order.push(v);
            bordered = true;
        }
    }
    (order, bordered)
}

/// Banded LU with partial pivoting in LAPACK `gbtrf` storage: column `j`
/// holds rows `j-kl-ku ..= j+kl`, the extra `kl` super-diagonals absorb the
/// fill produced by row interchanges.
#[derive(Debug, Clone)]
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        j * self.ld + self.kl + self.ku + i - j
    }

    fn factor(b: &CscMatrix, kl: usize, ku: usize, threshold: f64) -> Result<Self, LinalgError> {
        let n = b.dim();
        let ld = 2 * kl + ku + 1;
        let mut lu = BandLu {
            n,
            kl,
            ku,
            ld,
            ab: vec![0.0; ld * n],
            ipiv: vec![0; n],
        };
        for j in 0..n {
            let (rows, vals) = b.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                let p = lu.at(i, j);
                lu.ab[p] = v;
            }
        }
        let off = kl + ku;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let base = k * ld + off;
            let mut p = k;
            let mut best = lu.ab[base].abs();
            for i in k + 1..=last_row {
                let v = lu.ab[base + i - k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > threshold) {
                return Err(LinalgError::Singular {
                    index: k,
                    pivot: best,
                });
            }
            lu.ipiv[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (x, y) = (lu.at(k, j), lu.at(p, j));
                    lu.ab.swap(x, y);
                }
            }
            let pivot = lu.ab[base];
            let count = last_row - k;
            for v in &mut lu.ab[base + 1..base + 1 + count] {
                *v /= pivot;
            }
            if count == 0 {
                continue;
            }
            let (head, tail) = lu.ab.split_at_mut((k + 1) * ld);
            let multipliers = &head[base + 1..base + 1 + count];
            for j in k + 1..=last_col {
                let col = &mut tail[(j - k - 1) * ld..(j - k) * ld];
                let row_k = off + k - j;
                let f = col[row_k];
                if f == 0.0 {
                    continue;
                }
                for (dst, &l) in col[row_k + 1..row_k + 1 + count]
                    .iter_mut()
                    .zip(multipliers)
                {
                    *dst -= l * f;
                }
            }
        }
        Ok(lu)
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.ipiv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk == 0.0 {
                continue;
            }
            let last_row = (k + self.kl).min(n - 1);
            for i in k + 1..=last_row {
                x[i] -= self.ab[self.at(i, k)] * xk;
            }
        }
        let width = self.kl + self.ku;
        for k in (0..n).rev() {
            x[k] /= self.ab[self.at(k, k)];
            let xk = x[k];
            if xk == 0.0 {
                continue;
            }
            for i in k.saturating_sub(width)..k {
                x[i] -= self.ab[self.at(i, k)] * xk;
            }
        }
    }
}

/// Left-looking sparse LU with partial pivoting. `L` is unit lower triangular
/// with the diagonal stored first in each column; `U` stores its diagonal last.
#[derive(Debug, Clone)]
struct GeneralLu {
    n: usize,
    /// `pinv[row] = pivot position`.
    pinv: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

impl GeneralLu {
    fn factor(b: &CscMatrix, threshold: f64) -> Result<Self, LinalgError> {
        const NONE: usize = usize::MAX;
        let n = b.dim();
        let mut pinv = vec![NONE; n];
        let mut l_ptr = vec![0usize];
        let mut l_idx: Vec<usize> = Vec::with_capacity(4 * b.nnz());
        let mut l_val: Vec<f64> = Vec::with_capacity(4 * b.nnz());
        let mut u_ptr = vec![0usize];
        let mut u_idx: Vec<usize> = Vec::with_capacity(4 * b.nnz());
        let mut u_val: Vec<f64> = Vec::with_capacity(4 * b.nnz());

        let mut x = vec![0.0; n];
        let mut mark = vec![usize::MAX; n];
        let mut reach: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for k in 0..n {
            // Reach of column k in the graph of the L computed so far, in
            // reverse topological order (postorder of a DFS).
            reach.clear();
            let (rows, vals) = b.col(k);
            for &start in rows {
                if mark[start] == k {
                    continue;
                }
                mark[start] = k;
                stack.push((start, 0));
                while let Some(top) = stack.len().checked_sub(1) {
                    let (v, mut next) = stack[top];
                    let col = pinv[v];
                    let mut child = None;
                    if col != NONE {
                        let lo = l_ptr[col] + 1;
                        let hi = l_ptr[col + 1];
                        while lo + next < hi {
                            let w = l_idx[lo + next];
                            next += 1;
                            if mark[w] != k {
                                mark[w] = k;
                                child = Some(w);
                                break;
                            }
                        }
                    }
                    stack[top].1 = next;
                    match child {
                        Some(w) => stack.push((w, 0)),
                        None => {
                            reach.push(v);
                            stack.pop();
                        }
                    }
                }
            }
            for (&i, &v) in rows.iter().zip(vals) {
                x[i] = v;
            }
            for &v in reach.iter().rev() {
                let col = pinv[v];
                if col == NONE {
                    continue;
                }
                let xv = x[v];
                if xv == 0.0 {
                    continue;
                }
                for p in l_ptr[col] + 1..l_ptr[col + 1] {
                    x[l_idx[p]] -= l_val[p] * xv;
                }
            }

            let mut ipiv = NONE;
            let mut best = -1.0f64;
            for &i in reach.iter().rev() {
                if pinv[i] == NONE {
                    let v = x[i].abs();
                    if v > best || (v == best && i == k) {
                        best = v;
                        ipiv = i;
                    }
                } else {
                    u_idx.push(pinv[i]);
                    u_val.push(x[i]);
                }
            }
            if ipiv == NONE || !(best > threshold) {
                return Err(LinalgError::Singular {
                    index: k,
                    pivot: best.max(0.0),
                });
            }
            // Keep the diagonal when it ties the largest candidate.
            if pinv[k] == NONE && mark[k] == k && x[k].abs() >= best {
                ipiv = k;
            }
            let pivot = x[ipiv];
            u_idx.push(k);
            u_val.push(pivot);
            u_ptr.push(u_idx.len());
            pinv[ipiv] = k;
            l_idx.push(ipiv);
            l_val.push(1.0);
            for &i in reach.iter().rev() {
                if pinv[i] == NONE {
                    l_idx.push(i);
                    l_val.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
            l_ptr.push(l_idx.len());
        }
        for r in &mut l_idx {
            *r = pinv[*r];
        }
        Ok(Self {
            n,
            pinv,
            l_ptr,
            l_idx,
            l_val,
            u_ptr,
            u_idx,
            u_val,
        })
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let mut x = vec![0.0; self.n];
        for (i, &v) in b.iter().enumerate() {
            x[self.pinv[i]] = v;
        }
        for j in 0..self.n {
            let xj = x[j];
            for p in self.l_ptr[j] + 1..self.l_ptr[j + 1] {
                x[self.l_idx[p]] -= self.l_val[p] * xj;
            }
        }
        for j in (0..self.n).rev() {
            let last = self.u_ptr[j + 1] - 1;
            x[j] /= self.u_val[last];
            let xj = x[j];
            for p in self.u_ptr[j]..last {
                x[self.u_idx[p]] -= self.u_val[p] * xj;
            }
        }
        b.copy_from_slice(&x);
    }
}
