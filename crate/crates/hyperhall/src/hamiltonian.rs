//! Harper operator H_σ = Σ_{s∈S} U(s), random and almost periodic potentials,
//! spectra, gaps, Fermi projections and the integrated density of states.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::magnetic::MagneticData;
use crate::operator::{cocycle_indexed, kernel_from_entries, Csr, EquivariantKernel, TruncatedOperator, TruncatedSpace};
use crate::par;
use crate::surface_group::OUTSIDE;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Largest dimension handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 4000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisorderKind {
    None,
    IidUniform { w: f64 },
    AlmostPeriodic { lambda: f64, alpha: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderModel {
    pub kind: DisorderKind,
    pub seed: u64,
}

impl DisorderModel {
    pub fn none() -> Self {
        DisorderModel { kind: DisorderKind::None, seed: 0 }
    }

    pub fn iid(w: f64, seed: u64) -> Self {
        DisorderModel { kind: DisorderKind::IidUniform { w }, seed }
    }

    pub fn almost_periodic(lambda: f64, alpha: Vec<f64>) -> Self {
        DisorderModel { kind: DisorderKind::AlmostPeriodic { lambda, alpha }, seed: 0 }
    }

    /// Potential at a site, keyed by the site's canonical word so that it does
    /// not depend on enumeration order. For the iid model the sample is a
    /// function r on Γ and the shift acts by (γr)(x) = r(γ⁻¹x).
    pub fn site_value(&self, word: &[u8], abelian: &[i32]) -> f64 {
        match &self.kind {
            DisorderKind::None => 0.0,
            DisorderKind::IidUniform { w } => {
                if *w == 0.0 {
                    return 0.0;
                }
                let mut h = Sha256::new();
                h.update(b"hyperhall/iid");
                h.update(self.seed.to_le_bytes());
                h.update((word.len() as u64).to_le_bytes());
                h.update(word);
                let seed: [u8; 32] = h.finalize().into();
                let mut rng = ChaCha8Rng::from_seed(seed);
                let x: f64 = rng.random();
                w * (2.0 * x - 1.0)
            }
            DisorderKind::AlmostPeriodic { lambda, alpha } => {
                let phase: f64 = alpha.iter().zip(abelian).map(|(a, &n)| a * n as f64).sum();
                lambda * (2.0 * PI * phase).cos()
            }
        }
    }

    pub fn potential(&self, space: &TruncatedSpace) -> Vec<f64> {
        let ball = space.ball();
        par::map_range(ball.len(), |i| {
            let e = ball.element(i);
            self.site_value(e.word(), e.abelian())
        })
    }
}

/// H_σ on the ball: entries σ(s, x) at (s·x, x).
pub fn build_harper(space: &TruncatedSpace, m: &MagneticData) -> Result<TruncatedOperator> {
    let ball = space.ball();
    let p = ball.presentation();
    let nl = p.alphabet_size() as u8;
    // generators missing only when R = 0, where every neighbour is outside
    let letters: Vec<usize> = (0..nl).map(|l| ball.index_of_word(&[l]).unwrap_or(0)).collect();
    let n = ball.len();
    let cols: Vec<Vec<(usize, usize, C64)>> = par::map_range(n, |x| {
        let mut out = Vec::with_capacity(letters.len());
        for (l, &si) in letters.iter().enumerate() {
            let y = ball.left_neighbor(x, l as u8);
            if y == OUTSIDE {
                continue;
            }
            let y = y as usize;
            out.push((y, x, m.phase(cocycle_indexed(ball, m, si, x, y))));
        }
        out
    });
    let h = Csr::from_triplets(n, cols.into_iter().flatten().collect());
    let res = h.hermiticity_residual();
    if res > 1e-10 {
        return Err(Error::Consistency(format!("Harper operator is not Hermitian: {res:.3e}")));
    }
    Ok(TruncatedOperator::Sparse(h))
}

pub fn apply_disorder(h: &TruncatedOperator, d: &DisorderModel, space: &TruncatedSpace) -> TruncatedOperator {
    if d.kind == DisorderKind::None {
        return h.clone();
    }
    let v = d.potential(space);
    match h {
        TruncatedOperator::Sparse(s) => TruncatedOperator::Sparse(s.with_diagonal(&v)),
        TruncatedOperator::Dense(m) => {
            let mut m = m.clone();
            for (i, vi) in v.iter().enumerate() {
                m[(i, i)] += C64::new(*vi, 0.0);
            }
            TruncatedOperator::Dense(m)
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors as columns, in eigenvalue order (dense path only).
    pub eigenvectors: Option<Arc<Mat<C64>>>,
}

fn hermitian_guard(h: &TruncatedOperator) -> Result<()> {
    let res = h.hermiticity_residual();
    if res > 1e-10 {
        return Err(Error::Solver(format!("operator is not Hermitian (residual {res:.3e})")));
    }
    Ok(())
}

/// Full dense eigendecomposition.
pub fn eigensolve(h: &TruncatedOperator) -> Result<SpectralData> {
    hermitian_guard(h)?;
    let n = h.dim();
    if n > DENSE_LIMIT {
        return Err(Error::Solver(format!(
            "dimension {n} exceeds the dense limit {DENSE_LIMIT}; use the Lanczos or Chebyshev paths"
        )));
    }
    faer::set_global_parallelism(par::faer_par());
    let a = h.to_dense();
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("dense eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let eigenvalues: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let vecs = evd.U().to_owned();
    Ok(SpectralData { eigenvalues, eigenvectors: Some(Arc::new(vecs)) })
}

/// Dense eigenvalues only.
pub fn eigenvalues(h: &TruncatedOperator) -> Result<Vec<f64>> {
    hermitian_guard(h)?;
    let n = h.dim();
    if n > DENSE_LIMIT {
        return Err(Error::Solver(format!("dimension {n} exceeds the dense limit {DENSE_LIMIT}")));
    }
    faer::set_global_parallelism(par::faer_par());
    let a = h.to_dense();
    let mut ev = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Solver(format!("dense eigensolver failed: {e:?}")))?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
    /// Counts normalized to a density per unit energy and per site.
    pub fn density(&self) -> Vec<f64> {
        let total: usize = self.counts.iter().sum();
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, w)| c as f64 / (total.max(1) as f64 * (w[1] - w[0])))
            .collect()
    }
}

pub fn dos(sd: &SpectralData, bins: usize, range: (f64, f64)) -> Histogram {
    let bins = bins.max(1);
    let (lo, hi) = range;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
    let mut counts = vec![0usize; bins];
    for &e in &sd.eigenvalues {
        if e < lo || e > hi {
            continue;
        }
        let b = (((e - lo) / (hi - lo)) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    Histogram { edges, counts }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub a: f64,
    pub b: f64,
}

impl Gap {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
    pub fn width(&self) -> f64 {
        self.b - self.a
    }
}

#[derive(Serialize)]
struct GapRecord {
    a: f64,
    b: f64,
    midpoint: f64,
    width: f64,
}

pub fn gaps_json(gaps: &[Gap]) -> Vec<serde_json::Value> {
    gaps.iter()
        .map(|g| {
            serde_json::to_value(GapRecord { a: g.a, b: g.b, midpoint: g.midpoint(), width: g.width() })
                .expect("gap record serializes")
        })
        .collect()
}

/// Open intervals between consecutive eigenvalues farther apart than `gap_min`.
pub fn find_gaps(sd: &SpectralData, gap_min: f64) -> Vec<Gap> {
    sd.eigenvalues
        .windows(2)
        .filter(|w| w[1] - w[0] > gap_min)
        .map(|w| Gap { a: w[0], b: w[1] })
        .collect()
}

/// Default gap threshold: 1e−3 of the spectral width.
pub fn default_gap_min(sd: &SpectralData) -> f64 {
    match (sd.eigenvalues.first(), sd.eigenvalues.last()) {
        (Some(a), Some(b)) => 1e-3 * (b - a).max(1e-12),
        _ => 1e-3,
    }
}

/// Interior-averaged counting function N_E = |I|⁻¹ Σ_{s∈I} ⟨δ_s, P_E δ_s⟩.
pub fn ids(sd: &SpectralData, sites: &[usize], e: f64) -> Result<f64> {
    Ok(ids_curve(sd, sites, &[e])?[0])
}

pub fn ids_curve(sd: &SpectralData, sites: &[usize], energies: &[f64]) -> Result<Vec<f64>> {
    let v = sd
        .eigenvectors
        .as_ref()
        .ok_or_else(|| Error::Solver("counting function needs eigenvectors".into()))?;
    if sites.is_empty() {
        return Err(Error::Truncation("no interior sites".into()));
    }
    let n = sd.eigenvalues.len();
    let weights: Vec<f64> = par::map_range(n, |k| {
        let col = v.col_as_slice(k);
        sites.iter().map(|&s| col[s].norm_sqr()).sum::<f64>() / sites.len() as f64
    });
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for w in &weights {
        cum.push(cum.last().unwrap() + w);
    }
    Ok(energies
        .iter()
        .map(|&e| {
            let k = sd.eigenvalues.partition_point(|&l| l <= e);
            cum[k].clamp(0.0, 1.0)
        })
        .collect())
}

/// Jackson damping factors for an order-M Chebyshev series.
pub fn jackson(m: usize) -> Vec<f64> {
    let mp = (m + 1) as f64;
    let c = (PI / mp).cos() / (PI / mp).sin();
    (0..=m)
        .map(|n| {
            let n = n as f64;
            ((mp - n) * (PI * n / mp).cos() + (PI * n / mp).sin() * c) / mp
        })
        .collect()
}

/// Chebyshev coefficients of χ_{(−∞, e]} on [−1, 1], Jackson damped.
pub fn step_coefficients(e: f64, m: usize) -> Vec<f64> {
    let t = e.clamp(-1.0, 1.0).acos();
    let g = jackson(m);
    (0..=m)
        .map(|n| {
            let c = if n == 0 {
                1.0 - t / PI
            } else {
                -2.0 * (n as f64 * t).sin() / (n as f64 * PI)
            };
            c * g[n]
        })
        .collect()
}

/// Fermi projection, either exact from eigenvectors or as a damped Chebyshev
/// polynomial in H for balls beyond the dense limit.
#[derive(Clone, Debug)]
pub enum Projector {
    /// Σ v_k v_k† over eigenvector columns lo..hi.
    Spectral { vecs: Arc<Mat<C64>>, lo: usize, hi: usize },
    Chebyshev { h: Arc<Csr>, center: f64, half_width: f64, coeffs: Vec<f64> },
}

impl Projector {
    pub fn dim(&self) -> usize {
        match self {
            Projector::Spectral { vecs, .. } => vecs.nrows(),
            Projector::Chebyshev { h, .. } => h.dim(),
        }
    }

    /// Chebyshev projector with spectral bounds from the row-sum bound.
    pub fn chebyshev(h: Arc<Csr>, e: f64, order: usize) -> Projector {
        let r = h.max_row_sum() * 1.01 + 1e-9;
        let coeffs = step_coefficients(e / r, order);
        Projector::Chebyshev { h, center: 0.0, half_width: r, coeffs }
    }

    /// P·X for a column-major block X of `k` columns.
    pub fn apply_block(&self, x: &[C64], k: usize) -> Vec<C64> {
        let n = self.dim();
        match self {
            Projector::Spectral { vecs, lo, hi } => {
                if hi <= lo {
                    return vec![ZERO; n * k];
                }
                let v = vecs.as_ref().subcols(*lo, hi - lo);
                let xm = faer::MatRef::from_column_major_slice(x, n, k);
                let t = v.adjoint() * xm;
                let y = v * t;
                let mut out = Vec::with_capacity(n * k);
                for c in 0..k {
                    out.extend_from_slice(y.col_as_slice(c));
                }
                out
            }
            Projector::Chebyshev { h, center, half_width, coeffs } => {
                let scale = 1.0 / half_width;
                let shift = center / half_width;
                let mut t0 = x.to_vec();
                let mut acc: Vec<C64> = t0.iter().map(|v| v * coeffs[0]).collect();
                if coeffs.len() == 1 {
                    return acc;
                }
                let mut hx = vec![ZERO; n * k];
                h.matmat(&t0, k, &mut hx);
                let mut t1: Vec<C64> =
                    hx.iter().zip(&t0).map(|(a, b)| a * scale - b * shift).collect();
                for (a, v) in acc.iter_mut().zip(&t1) {
                    *a += v * coeffs[1];
                }
                for &c in &coeffs[2..] {
                    h.matmat(&t1, k, &mut hx);
                    for i in 0..n * k {
                        let t2 = 2.0 * (hx[i] * scale - t1[i] * shift) - t0[i];
                        t0[i] = t1[i];
                        t1[i] = t2;
                        acc[i] += t2 * c;
                    }
                }
                acc
            }
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.apply_block(x, 1)
    }

    /// Columns P δ_s for the given sites, column-major.
    pub fn columns(&self, sites: &[usize]) -> Vec<C64> {
        let n = self.dim();
        let mut x = vec![ZERO; n * sites.len()];
        for (c, &s) in sites.iter().enumerate() {
            x[c * n + s] = C64::new(1.0, 0.0);
        }
        self.apply_block(&x, sites.len())
    }

    /// Dense matrix of P (small problems and tests).
    pub fn to_operator(&self) -> TruncatedOperator {
        let n = self.dim();
        let all: Vec<usize> = (0..n).collect();
        let cols = self.columns(&all);
        let m = Mat::<C64>::from_fn(n, n, |r, c| cols[c * n + r]);
        TruncatedOperator::Dense(m)
    }
}

#[derive(Clone, Debug)]
pub struct SpectralProjection {
    pub projector: Projector,
    pub energy: f64,
    /// Number of eigenvalues ≤ E (dense path).
    pub rank: Option<usize>,
    pub warnings: Vec<String>,
}

/// P_E = χ_{(−∞, E]}(H) from a dense eigendecomposition.
pub fn spectral_projection(sd: &SpectralData, e: f64, gap_min: f64) -> Result<SpectralProjection> {
    let vecs = sd
        .eigenvectors
        .clone()
        .ok_or_else(|| Error::Solver("projection needs eigenvectors".into()))?;
    let rank = sd.eigenvalues.partition_point(|&l| l <= e);
    let mut warnings = Vec::new();
    let nearest = sd
        .eigenvalues
        .iter()
        .map(|l| (l - e).abs())
        .fold(f64::INFINITY, f64::min);
    if nearest < gap_min / 10.0 {
        warnings.push(format!(
            "E = {e} lies {nearest:.2e} from an eigenvalue: ill-conditioned projection"
        ));
    }
    Ok(SpectralProjection { projector: Projector::Spectral { vecs, lo: 0, hi: rank }, energy: e, rank: Some(rank), warnings })
}

/// χ_{(e1, e2]}(H) = P_{e2} − P_{e1}, orthogonal to P_{e1}.
pub fn band_projection(sd: &SpectralData, e1: f64, e2: f64, gap_min: f64) -> Result<SpectralProjection> {
    if e2 < e1 {
        return Err(Error::Config(format!("band [{e1}, {e2}] is empty")));
    }
    let p1 = spectral_projection(sd, e1, gap_min)?;
    let mut p2 = spectral_projection(sd, e2, gap_min)?;
    let (lo, hi) = (p1.rank.unwrap_or(0), p2.rank.unwrap_or(0));
    if let Projector::Spectral { lo: l, .. } = &mut p2.projector {
        *l = lo;
    }
    p2.warnings.extend(p1.warnings);
    p2.rank = Some(hi - lo);
    Ok(p2)
}

/// Fermi projection as a Chebyshev polynomial of H (large balls).
pub fn chebyshev_projection(h: &TruncatedOperator, e: f64, order: usize) -> Result<SpectralProjection> {
    let csr = match h {
        TruncatedOperator::Sparse(s) => s.clone(),
        TruncatedOperator::Dense(_) => {
            return Err(Error::Solver("Chebyshev projection needs a sparse operator".into()))
        }
    };
    hermitian_guard(h)?;
    let projector = Projector::chebyshev(Arc::new(csr), e, order);
    Ok(SpectralProjection {
        projector,
        energy: e,
        rank: None,
        warnings: vec![format!("polynomial projection of order {order}; idempotent only approximately")],
    })
}

/// Kernel of a projection, averaged over the interior. Returns the kernel and
/// the columns P δ_s for the interior sites (column-major, in site order).
pub fn projection_kernel(
    proj: &SpectralProjection,
    space: &TruncatedSpace,
    m: &MagneticData,
    threshold: f64,
) -> (EquivariantKernel, Vec<usize>, Vec<C64>) {
    let sites = space.interior();
    let n = space.dim();
    let cols = proj.projector.columns(&sites);
    let kernel = kernel_from_entries(space, m, &sites, space.margin(), threshold, |y, k| cols[k * n + y]);
    (kernel, sites, cols)
}

/// Smallest radius at which the kernel profile drops below `tol` for good.
pub fn decay_radius(kernel: &EquivariantKernel, space: &TruncatedSpace, tol: f64) -> Option<usize> {
    let prof = kernel.decay_profile(space.ball());
    let r = space.margin().min(prof.len() - 1);
    (0..=r).find(|&k| prof[k..=r].iter().all(|&v| v < tol))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RitzPair {
    pub value: f64,
    pub residual: f64,
}

fn start_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let nrm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    v
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Lanczos with full reorthogonalization. Returns Ritz values whose true
/// residual ‖Hv − λv‖ is below `tol`, restricted to [lo, hi].
pub fn lanczos_window(h: &Csr, lo: f64, hi: f64, steps: usize, tol: f64, seed: u64) -> Result<Vec<RitzPair>> {
    let n = h.dim();
    let m = steps.min(n).max(1);
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    q.push(start_vector(n, seed));
    let mut w = vec![ZERO; n];
    for j in 0..m {
        h.matvec(&q[j], &mut w);
        let a = dot(&q[j], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for qi in &q {
                let c = dot(qi, &w);
                for (wk, qk) in w.iter_mut().zip(qi) {
                    *wk -= c * qk;
                }
            }
        }
        let b = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if j + 1 == m || b < 1e-12 {
            break;
        }
        beta.push(b);
        q.push(w.iter().map(|x| x / b).collect());
    }
    let k = alpha.len();
    let t = Mat::<f64>::from_fn(k, k, |r, c| {
        if r == c {
            alpha[r]
        } else if r + 1 == c {
            beta[r]
        } else if c + 1 == r {
            beta[c]
        } else {
            0.0
        }
    });
    let evd = t
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("tridiagonal eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut out = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..k {
        let lam = s[i];
        if lam < lo || lam > hi {
            continue;
        }
        let mut y = vec![ZERO; n];
        for (j, qj) in q.iter().enumerate().take(k) {
            let c = u[(j, i)];
            for (yk, qk) in y.iter_mut().zip(qj) {
                *yk += qk * c;
            }
        }
        h.matvec(&y, &mut w);
        let res = w
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b * lam).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(res);
        if res <= tol {
            out.push(RitzPair { value: lam, residual: res });
        }
    }
    if out.is_empty() {
        return Err(Error::Solver(format!(
            "no Ritz value in [{lo}, {hi}] converged to {tol:.1e} (worst residual {worst:.3e})"
        )));
    }
    Ok(out)
}

/// Extreme eigenvalues by Lanczos.
pub fn spectral_bounds(h: &Csr, steps: usize, seed: u64) -> Result<(f64, f64)> {
    let r = h.max_row_sum() + 1.0;
    let pairs = lanczos_window(h, -r, r, steps, 1e-8, seed)?;
    let lo = pairs.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    let hi = pairs.iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Interior-averaged Chebyshev moments μ_n = |I|⁻¹ Σ_{s∈I} ⟨δ_s, T_n(H/r) δ_s⟩.
pub fn chebyshev_moments(h: &Csr, sites: &[usize], order: usize, half_width: f64) -> Vec<f64> {
    let n = h.dim();
    let k = sites.len();
    let mut t0 = vec![ZERO; n * k];
    for (c, &s) in sites.iter().enumerate() {
        t0[c * n + s] = C64::new(1.0, 0.0);
    }
    let diag = |t: &[C64]| -> f64 {
        sites.iter().enumerate().map(|(c, &s)| t[c * n + s].re).sum::<f64>() / k as f64
    };
    let mut mu = vec![diag(&t0)];
    let mut hx = vec![ZERO; n * k];
    h.matmat(&t0, k, &mut hx);
    let mut t1: Vec<C64> = hx.iter().map(|v| v / half_width).collect();
    mu.push(diag(&t1));
    for _ in 2..=order {
        h.matmat(&t1, k, &mut hx);
        for i in 0..n * k {
            let t2 = 2.0 * hx[i] / half_width - t0[i];
            t0[i] = t1[i];
            t1[i] = t2;
        }
        mu.push(diag(&t1));
    }
    mu.truncate(order + 1);
    mu
}

/// Jackson-damped density of states from moments, at the given energies.
pub fn kpm_density(mu: &[f64], half_width: f64, energies: &[f64]) -> Vec<f64> {
    let m = mu.len() - 1;
    let g = jackson(m);
    energies
        .iter()
        .map(|&e| {
            let x = e / half_width;
            if x.abs() >= 1.0 {
                return 0.0;
            }
            let t = x.acos();
            let mut s = mu[0] * g[0];
            for n in 1..=m {
                s += 2.0 * mu[n] * g[n] * (n as f64 * t).cos();
            }
            (s / (PI * (1.0 - x * x).sqrt()) / half_width).max(0.0)
        })
        .collect()
}

/// Jackson-damped counting function from moments.
pub fn kpm_ids(mu: &[f64], half_width: f64, energies: &[f64]) -> Vec<f64> {
    let m = mu.len() - 1;
    energies
        .iter()
        .map(|&e| {
            let c = step_coefficients(e / half_width, m);
            c.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>().clamp(0.0, 1.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackson_starts_at_one() {
        let g = jackson(50);
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!(g.iter().all(|&x| x > -1e-12 && x <= 1.0 + 1e-12));
    }

    #[test]
    fn step_series_limits() {
        let c = step_coefficients(1.0, 10);
        assert!((c[0] - 1.0).abs() < 1e-15);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-15));
        let c = step_coefficients(-1.0, 10);
        assert!(c.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn gap_geometry() {
        let g = Gap { a: 1.0, b: 2.0 };
        assert_eq!(g.midpoint(), 1.5);
        assert_eq!(g.width(), 1.0);
        let sd = SpectralData { eigenvalues: vec![-1.0, -0.9, 0.5, 0.55], eigenvectors: None };
        assert_eq!(find_gaps(&sd, 0.2), vec![Gap { a: -0.9, b: 0.5 }]);
    }
}
