//! Finite sections of ℓ²(Γ) and of the twisted group algebra: the σ-regular
//! representation on a ball, twisted convolution kernels and the canonical
//! trace.
//!
//! Convention: U(γ)δ_x = σ(γ, x)δ_{γx}. An equivariant operator with kernel a
//! has matrix entries A_{γx, x} = a(γ)σ(γ, x), so that the matrix of a ∗ b is
//! the product of the matrices and tr(a) = a(e) is every diagonal entry.

use std::collections::BTreeMap;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::magnetic::{ball_cocycle, MagneticData};
use crate::par;
use crate::surface_group::{format_word, Ball, GroupElement, OUTSIDE};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Ball truncation of ℓ²(Γ) together with the interior margin.
#[derive(Clone, Debug)]
pub struct TruncatedSpace {
    ball: Ball,
    margin: usize,
}

impl TruncatedSpace {
    pub fn new(ball: Ball, margin: usize) -> Self {
        TruncatedSpace { ball, margin }
    }
    pub fn ball(&self) -> &Ball {
        &self.ball
    }
    pub fn dim(&self) -> usize {
        self.ball.len()
    }
    pub fn margin(&self) -> usize {
        self.margin
    }
    pub fn radius(&self) -> usize {
        self.ball.radius()
    }
    /// Sites of word length ≤ R − margin.
    pub fn interior(&self) -> Vec<usize> {
        self.ball.interior(self.margin)
    }
}

/// Area cocycle c(γ_i, γ_j) with k the index of the product. Falls back to the
/// matrix route when the magnetic base point differs from the ball's.
pub fn cocycle_indexed(ball: &Ball, m: &MagneticData, i: usize, j: usize, k: usize) -> f64 {
    if same_base(ball, m) {
        ball_cocycle(ball, i, j, k)
    } else {
        m.area_cocycle(ball.element(i), ball.element(j))
    }
}

fn same_base(ball: &Ball, m: &MagneticData) -> bool {
    (ball.base_point().half_plane_coords() - m.base_point().half_plane_coords()).norm() == 0.0
}

/// Compressed sparse rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

impl Csr {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, C64)>) -> Csr {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols: Vec<u32> = Vec::with_capacity(t.len());
        let mut vals: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c as u32);
            vals.push(v);
            last = Some((r, c));
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.cols[a..b].binary_search(&(c as u32)) {
            Ok(p) => self.vals[a + p],
            Err(_) => ZERO,
        }
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        par::for_each_chunk_mut(y, 256, |ci, chunk| {
            let base = ci * 256;
            for (off, out) in chunk.iter_mut().enumerate() {
                let r = base + off;
                let mut acc = ZERO;
                for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[p] * x[self.cols[p] as usize];
                }
                *out = acc;
            }
        });
    }

    /// Y = A·X for a column-major block X with `k` columns.
    pub fn matmat(&self, x: &[C64], k: usize, y: &mut [C64]) {
        let n = self.n;
        par::for_each_chunk_mut(y, n, |col, out| {
            let xc = &x[col * n..(col + 1) * n];
            for (r, o) in out.iter_mut().enumerate() {
                let mut acc = ZERO;
                for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[p] * xc[self.cols[p] as usize];
                }
                *o = acc;
            }
        });
        debug_assert_eq!(y.len(), n * k);
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn with_diagonal(&self, d: &[f64]) -> Csr {
        let mut t: Vec<(usize, usize, C64)> = Vec::with_capacity(self.nnz() + self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                t.push((r, c, v));
            }
            if d[r] != 0.0 {
                t.push((r, r, C64::new(d[r], 0.0)));
            }
        }
        Csr::from_triplets(self.n, t)
    }

    /// max |A_rc − conj(A_cr)|.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Largest absolute row sum, an upper bound for the operator norm of a
    /// Hermitian matrix.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r).re).collect()
    }
}

/// Finite section of an operator on ℓ²(Γ).
#[derive(Clone, Debug)]
pub enum TruncatedOperator {
    Dense(Mat<C64>),
    Sparse(Csr),
}

impl TruncatedOperator {
    pub fn dim(&self) -> usize {
        match self {
            TruncatedOperator::Dense(m) => m.nrows(),
            TruncatedOperator::Sparse(s) => s.dim(),
        }
    }

    pub fn entry(&self, r: usize, c: usize) -> C64 {
        match self {
            TruncatedOperator::Dense(m) => m[(r, c)],
            TruncatedOperator::Sparse(s) => s.get(r, c),
        }
    }

    pub fn to_dense(&self) -> Mat<C64> {
        match self {
            TruncatedOperator::Dense(m) => m.clone(),
            TruncatedOperator::Sparse(s) => s.to_dense(),
        }
    }

    pub fn as_sparse(&self) -> Option<&Csr> {
        match self {
            TruncatedOperator::Sparse(s) => Some(s),
            TruncatedOperator::Dense(_) => None,
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut y = vec![ZERO; n];
        match self {
            TruncatedOperator::Sparse(s) => s.matvec(x, &mut y),
            TruncatedOperator::Dense(m) => {
                for c in 0..n {
                    let xc = x[c];
                    if xc == ZERO {
                        continue;
                    }
                    for (r, yr) in y.iter_mut().enumerate() {
                        *yr += m[(r, c)] * xc;
                    }
                }
            }
        }
        y
    }

    pub fn adjoint(&self) -> TruncatedOperator {
        match self {
            TruncatedOperator::Dense(m) => TruncatedOperator::Dense(m.adjoint().to_owned()),
            TruncatedOperator::Sparse(s) => {
                let mut t = Vec::with_capacity(s.nnz());
                for r in 0..s.dim() {
                    for (c, v) in s.row(r) {
                        t.push((c, r, v.conj()));
                    }
                }
                TruncatedOperator::Sparse(Csr::from_triplets(s.dim(), t))
            }
        }
    }

    pub fn matmul(&self, other: &TruncatedOperator) -> TruncatedOperator {
        let a = self.to_dense();
        let b = other.to_dense();
        TruncatedOperator::Dense(&a * &b)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        match self {
            TruncatedOperator::Sparse(s) => s.hermiticity_residual(),
            TruncatedOperator::Dense(m) => {
                let n = m.nrows();
                let mut worst = 0.0f64;
                for c in 0..n {
                    for r in 0..=c {
                        worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    pub fn max_abs_diff(&self, other: &TruncatedOperator) -> f64 {
        let (a, b) = (self.to_dense(), other.to_dense());
        let n = a.nrows();
        let mut worst = 0.0f64;
        for c in 0..n {
            for r in 0..n {
                worst = worst.max((a[(r, c)] - b[(r, c)]).norm());
            }
        }
        worst
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.entry(i, i)).sum()
    }
}

/// σ-regular representation U(γ) truncated to the ball.
pub fn left_regular(space: &TruncatedSpace, m: &MagneticData, g: &GroupElement) -> TruncatedOperator {
    let ball = space.ball();
    let n = ball.len();
    let gi = ball.index_of(g);
    let cols: Vec<Option<(usize, C64)>> = par::map_range(n, |x| {
        let e = ball.element(x);
        let m2 = g.matrix().compose(e.matrix());
        let ab: Vec<i32> = g.abelian().iter().zip(e.abelian()).map(|(a, b)| a + b).collect();
        let y = ball.find(&ab, &m2)?;
        let c = match gi {
            Some(i) => cocycle_indexed(ball, m, i, x, y),
            None => m.area_cocycle(g, e),
        };
        Some((y, m.phase(c)))
    });
    let t = cols
        .into_iter()
        .enumerate()
        .filter_map(|(x, v)| v.map(|(y, p)| (y, x, p)))
        .collect();
    TruncatedOperator::Sparse(Csr::from_triplets(n, t))
}

/// Element of the twisted group algebra at one disorder sample, stored on
/// ball indices (BFS order, i.e. by word length then ShortLex).
#[derive(Clone, Debug, PartialEq)]
pub struct EquivariantKernel {
    entries: BTreeMap<usize, C64>,
    /// Largest deviation from equivariance seen while extracting the kernel.
    pub residual: f64,
    /// Set when the residual exceeded the extraction threshold.
    pub non_equivariant: bool,
}

pub const PRUNE: f64 = 1e-14;

#[derive(Serialize)]
struct KernelEntry {
    word: String,
    re: f64,
    im: f64,
}

impl EquivariantKernel {
    pub fn zero() -> Self {
        EquivariantKernel { entries: BTreeMap::new(), residual: 0.0, non_equivariant: false }
    }

    pub fn delta(index: usize) -> Self {
        let mut k = Self::zero();
        k.entries.insert(index, C64::new(1.0, 0.0));
        k
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (usize, C64)>) -> Self {
        let mut k = Self::zero();
        for (i, v) in entries {
            if v.norm() >= PRUNE {
                *k.entries.entry(i).or_insert(ZERO) += v;
            }
        }
        k
    }

    pub fn get(&self, i: usize) -> C64 {
        self.entries.get(&i).copied().unwrap_or(ZERO)
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.entries.iter().map(|(&i, &v)| (i, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest word length in the support.
    pub fn radius(&self, ball: &Ball) -> usize {
        self.entries.keys().map(|&i| ball.word_length(i)).max().unwrap_or(0)
    }

    /// Restriction to word length ≤ r.
    pub fn truncate(&self, ball: &Ball, r: usize) -> EquivariantKernel {
        let mut k = self.clone();
        k.entries.retain(|&i, _| ball.word_length(i) <= r);
        k
    }

    pub fn scale(&self, s: C64) -> EquivariantKernel {
        let mut k = self.clone();
        k.entries.values_mut().for_each(|v| *v *= s);
        k
    }

    pub fn add(&self, other: &EquivariantKernel) -> EquivariantKernel {
        let mut k = self.clone();
        for (i, v) in other.support() {
            *k.entries.entry(i).or_insert(ZERO) += v;
        }
        k.residual = self.residual.max(other.residual);
        k.non_equivariant = self.non_equivariant || other.non_equivariant;
        k
    }

    /// Kernel of the adjoint: a*(γ) = conj(a(γ⁻¹)).
    pub fn adjoint(&self, ball: &Ball) -> EquivariantKernel {
        let mut k = Self::zero();
        for (i, v) in self.support() {
            k.entries.insert(ball.inverse_index(i), v.conj());
        }
        k
    }

    /// Decay profile: max |a| on each sphere.
    pub fn decay_profile(&self, ball: &Ball) -> Vec<f64> {
        let mut prof = vec![0.0f64; ball.radius() + 1];
        for (i, v) in self.support() {
            let l = ball.word_length(i);
            prof[l] = prof[l].max(v.norm());
        }
        prof
    }

    pub fn prune(&mut self) {
        self.entries.retain(|_, v| v.norm() >= PRUNE);
    }

    pub fn export_json(&self, ball: &Ball) -> Result<String> {
        let g = ball.presentation().genus();
        let rows: Vec<KernelEntry> = self
            .support()
            .map(|(i, v)| KernelEntry {
                word: format_word(g, ball.element(i).word()),
                re: v.re,
                im: v.im,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&rows)?)
    }
}

/// (a ∗ b)(γ) = Σ_{γ₁γ₂=γ} a(γ₁) b(γ₂) σ(γ₁, γ₂).
pub fn twisted_convolve(
    a: &EquivariantKernel,
    b: &EquivariantKernel,
    ball: &Ball,
    m: &MagneticData,
) -> Result<EquivariantKernel> {
    let bs: Vec<(usize, C64)> = b.support().collect();
    let av: Vec<(usize, C64)> = a.support().collect();
    let partial: Vec<Result<Vec<(usize, C64)>>> = par::map(&av, |&(i, ai)| {
        let mut out = Vec::with_capacity(bs.len());
        for &(j, bj) in &bs {
            let k = ball.product_index(i, j).ok_or_else(|| {
                Error::Truncation(format!(
                    "product of {} and {} leaves the ball",
                    ball.element(i),
                    ball.element(j)
                ))
            })?;
            let c = cocycle_indexed(ball, m, i, j, k);
            out.push((k, ai * bj * m.phase(c)));
        }
        Ok(out)
    });
    let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
    for p in partial {
        for (k, v) in p? {
            *acc.entry(k).or_insert(ZERO) += v;
        }
    }
    let mut k = EquivariantKernel::from_entries(acc);
    k.residual = a.residual.max(b.residual);
    Ok(k)
}

/// Matrix of an equivariant kernel on the ball: entries a(γ)σ(γ, x) at
/// (γx, x) whenever γx stays inside.
pub fn matrix_of(kernel: &EquivariantKernel, space: &TruncatedSpace, m: &MagneticData) -> TruncatedOperator {
    let ball = space.ball();
    let n = ball.len();
    let support: Vec<(usize, C64)> = kernel.support().collect();
    let cols: Vec<Vec<(usize, usize, C64)>> = par::map_range(n, |x| {
        let mut out = Vec::with_capacity(support.len());
        for &(g, a) in &support {
            if let Some(y) = ball.product_index(g, x) {
                out.push((y, x, a * m.phase(cocycle_indexed(ball, m, g, x, y))));
            }
        }
        out
    });
    TruncatedOperator::Sparse(Csr::from_triplets(n, cols.into_iter().flatten().collect()))
}

/// Kernel extraction from matrix elements, a(γ) = mean over sites s of
/// A_{γs, s} conj σ(γ, s), for γ of word length ≤ `radius`. `entry(y, k)`
/// returns A_{y, sites[k]}.
pub fn kernel_from_entries<F>(
    space: &TruncatedSpace,
    m: &MagneticData,
    sites: &[usize],
    radius: usize,
    threshold: f64,
    entry: F,
) -> EquivariantKernel
where
    F: Fn(usize, usize) -> C64 + Sync + Send,
{
    let ball = space.ball();
    let count = ball.count_within(radius.min(ball.radius()));
    let rows: Vec<(C64, f64)> = par::map_range(count, |g| {
        let mut vals = Vec::with_capacity(sites.len());
        for (k, &s) in sites.iter().enumerate() {
            if let Some(y) = ball.product_index(g, s) {
                let ph = m.phase(cocycle_indexed(ball, m, g, s, y));
                vals.push(entry(y, k) * ph.conj());
            }
        }
        if vals.is_empty() {
            return (ZERO, 0.0);
        }
        let mean = vals.iter().sum::<C64>() / vals.len() as f64;
        let dev = vals.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max);
        (mean, dev)
    });
    let residual = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut k = EquivariantKernel::from_entries(rows.iter().enumerate().map(|(i, r)| (i, r.0)));
    k.residual = residual;
    k.non_equivariant = residual > threshold;
    k
}

/// Kernel of a (nearly) equivariant operator, averaged over the interior.
/// The kernel radius equals the interior margin, so every γs stays inside.
pub fn kernel_from_operator(
    a: &TruncatedOperator,
    space: &TruncatedSpace,
    m: &MagneticData,
    threshold: f64,
) -> EquivariantKernel {
    let sites = space.interior();
    kernel_from_entries(space, m, &sites, space.margin(), threshold, |y, k| {
        a.entry(y, sites[k])
    })
}

/// tr(a) = a(e).
pub fn canonical_trace(a: &EquivariantKernel) -> C64 {
    a.get(0)
}

/// Largest |U(γ₁)U(γ₂) − σ(γ₁,γ₂)U(γ₁γ₂)| over columns x with γ₂x and
/// γ₁γ₂x both inside the ball.
pub fn projective_defect(
    space: &TruncatedSpace,
    m: &MagneticData,
    g1: &GroupElement,
    g2: &GroupElement,
) -> f64 {
    let ball = space.ball();
    let p = ball.presentation();
    let u1 = left_regular(space, m, g1);
    let u2 = left_regular(space, m, g2);
    let g12 = p.multiply(g1, g2);
    let u12 = left_regular(space, m, &g12);
    let s = m.multiplier(g1, g2);
    let cols = |u: &TruncatedOperator| match u.adjoint() {
        TruncatedOperator::Sparse(c) => c,
        TruncatedOperator::Dense(_) => unreachable!(),
    };
    let (c1, c2, c12) = (cols(&u1), cols(&u2), cols(&u12));
    // row x of U† lists column x of U, conjugated
    let entry = |c: &Csr, x: usize| c.row(x).next().map(|(r, v)| (r, v.conj()));
    let mut worst = 0.0f64;
    for x in 0..ball.len() {
        let Some((y, v2)) = entry(&c2, x) else { continue };
        let Some((z, v1)) = entry(&c1, y) else { continue };
        let Some((z2, v12)) = entry(&c12, x) else { continue };
        if z != z2 {
            return f64::INFINITY;
        }
        worst = worst.max((v1 * v2 - s * v12).norm());
    }
    worst
}

/// Neighbour table for a generator set: `left[x][k]` is the index of s_k·x.
pub fn left_table(ball: &Ball) -> Vec<Vec<u32>> {
    let nl = ball.presentation().alphabet_size() as u8;
    (0..ball.len())
        .map(|x| (0..nl).map(|l| ball.left_neighbor(x, l)).collect())
        .collect()
}

pub fn is_inside(i: u32) -> bool {
    i != OUTSIDE
}
