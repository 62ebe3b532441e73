//! Cyclic-cocycle functionals of Fermi projections: the area cocycle trace
//! tr_c, the Kubo cocycle, the Fredholm index and the positive functionals
//! ψ, ξ±, with domain diagnostics, plateau detection and disorder statistics.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Projector;
use crate::hypgeo::{self, HPoint, Isometry};
use crate::magnetic::MagneticData;
use crate::operator::{cocycle_indexed, EquivariantKernel, TruncatedSpace};
use crate::par;
use crate::surface_group::{frame_point, recentering, Ball, Presentation};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Multiplication by the unit phase φ on ℓ²(Γ), which gives the symmetry
/// F = [[0, φ̄], [φ, 0]] on ℓ² ⊕ ℓ² with grading diag(1, −1).
#[derive(Clone, Debug)]
pub struct FredholmData {
    pub x0: HPoint,
    /// x0 in the disk frame centred at the base point.
    pub x0_frame: C64,
    pub phase: Vec<C64>,
    /// Hyperbolic distance from x0 to the nearest orbit point in the ball.
    pub clearance: f64,
}

impl FredholmData {
    /// Largest deviation of |φ| from 1 (F² = 1 holds iff this is zero).
    pub fn unitarity_defect(&self) -> f64 {
        self.phase.iter().map(|p| (p.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn disk_distance(a: C64, b: C64) -> f64 {
    let den = (C64::new(1.0, 0.0) - a.conj() * b).norm();
    2.0 * ((a - b).norm() / den).min(1.0).atanh()
}

/// Phases φ(x) for the sites of the ball. φ(x) is the initial direction of the
/// geodesic from x⁻¹·u to x0, read in the disk frame centred at u. Using x⁻¹u
/// rather than x·u makes [φ, A] small for operators built from left
/// translations, since x⁻¹u and (γx)⁻¹u stay at distance d(u, γ⁻¹u).
pub fn fredholm_phase(ball: &Ball, x0: &HPoint) -> Result<FredholmData> {
    let k = recentering(ball.base_point());
    let q = frame_point(&k, &Isometry::identity(), x0);
    fredholm_phase_frame(ball, q)
}

/// As [`fredholm_phase`] with x0 given directly in frame coordinates.
pub fn fredholm_phase_frame(ball: &Ball, x0_frame: C64) -> Result<FredholmData> {
    if !(x0_frame.norm() < 1.0) {
        return Err(Error::Domain(format!("x0 = {x0_frame} is not inside the disk")));
    }
    let n = ball.len();
    let clearance = par::map_range(n, |i| disk_distance(ball.frame_point(i), x0_frame))
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if clearance <= 1e-3 {
        return Err(Error::Placement(format!(
            "x0 lies {clearance:.3e} from an orbit point (needs > 1e-3)"
        )));
    }
    let phase = par::map_range(n, |i| {
        let q = hypgeo::recenter(ball.inverse_frame_point(i), x0_frame);
        q / q.norm()
    });
    let k = recentering(ball.base_point()).inverse();
    let w = hypgeo::disk_to_half_plane(x0_frame);
    let x0 = hypgeo::mobius_apply(&k, &HPoint::half_plane(w)?)?;
    Ok(FredholmData { x0, x0_frame, phase, clearance })
}

/// A double-sum value whose theoretical imaginary (or real) part vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleValue {
    pub value: f64,
    pub residual: f64,
}

/// Σ_{γ₁,γ₂} P(γ₀)P(γ₁)P(γ₂)σ(γ₁,γ₂)w(γ₁,γ₂), γ₀ = (γ₁γ₂)⁻¹.
fn triple_sum<W>(p: &EquivariantKernel, ball: &Ball, m: &MagneticData, w: W) -> C64
where
    W: Fn(usize, usize, usize, f64) -> f64 + Sync + Send,
{
    let sup: Vec<(usize, C64)> = p.support().collect();
    let parts: Vec<C64> = par::map(&sup, |&(i, pi)| {
        let mut acc = ZERO;
        for &(j, pj) in &sup {
            // the support lies in the ball, so a product outside it cannot
            // have its inverse in the support
            let Some(k) = ball.product_index(i, j) else { continue };
            let p0 = p.get(ball.inverse_index(k));
            if p0 == ZERO {
                continue;
            }
            let c = cocycle_indexed(ball, m, i, j, k);
            let wt = w(i, j, k, c);
            if wt == 0.0 {
                continue;
            }
            acc += p0 * pi * pj * m.phase(c) * wt;
        }
        acc
    });
    // ordered reduction keeps the result independent of the thread count
    parts.into_iter().fold(ZERO, |a, b| a + b)
}

fn check_support(p: &EquivariantKernel, space: &TruncatedSpace) -> Result<()> {
    let r = p.radius(space.ball());
    if r + space.margin() > space.radius() {
        return Err(Error::Truncation(format!(
            "kernel radius {r} escapes the interior (R = {}, margin {})",
            space.radius(),
            space.margin()
        )));
    }
    Ok(())
}

/// Area-cocycle trace tr_c(P, P, P).
///
/// For a self-adjoint P the double sum is purely imaginary (c is odd under the
/// symmetry that conjugates the summand), so the imaginary part is returned and
/// the real part is reported as the residual.
pub fn tr_c(p: &EquivariantKernel, space: &TruncatedSpace, m: &MagneticData) -> Result<CocycleValue> {
    check_support(p, space)?;
    let s = triple_sum(p, space.ball(), m, |_, _, _, c| c);
    Ok(CocycleValue { value: s.im, residual: s.re.abs() })
}

/// Ratio ⟨c, z⟩ / ⟨c_K, z⟩ of the area cocycle and the Kubo cocycle evaluated
/// on the fundamental cycle z of the surface. Scaling the Kubo sum by it puts
/// both functionals in the same units.
pub fn kubo_normalization(p: &Presentation, base: &HPoint) -> f64 {
    let m = MagneticData::new(0.0, *base);
    let area = p.pair_with_fundamental_cycle(|a, b| m.area_cocycle(a, b));
    let kubo = p.pair_with_fundamental_cycle(|a, b| kubo_weight(p.genus(), a.abelian(), b.abelian()));
    area / kubo
}

fn kubo_weight(g: usize, a: &[i32], b: &[i32]) -> f64 {
    (0..g)
        .map(|j| (a[j] * b[j + g] - a[j + g] * b[j]) as f64)
        .sum()
}

/// Kubo cocycle Σ_j tr(P (δ_jP ∗ δ_{j+g}P − δ_{j+g}P ∗ δ_jP)), δ_j P = Ω_j·P,
/// scaled by [`kubo_normalization`]. Like tr_c the raw sum is imaginary.
pub fn kubo(p: &EquivariantKernel, space: &TruncatedSpace, m: &MagneticData, norm: f64) -> Result<CocycleValue> {
    check_support(p, space)?;
    let ball = space.ball();
    let g = ball.presentation().genus();
    let s = triple_sum(p, ball, m, |i, j, _, _| {
        kubo_weight(g, ball.element(i).abelian(), ball.element(j).abelian())
    });
    Ok(CocycleValue { value: norm * s.im, residual: (norm * s.re).abs() })
}

/// Interior traces of the Fredholm functionals and the commutator norm.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexData {
    /// tr(ε P[F,P][F,P]), the graded trace σ.
    pub index: f64,
    pub psi: f64,
    pub xi_plus: f64,
    pub xi_minus: f64,
    /// Distance of the index to the nearest integer.
    pub frac: f64,
    /// Distance to the nearest point of 2(g−1)ℤ.
    pub dist_lattice: f64,
    /// ‖[F,P]‖²_HS over the summation sites, and over the sites one shell in.
    pub hs_norm: f64,
    pub hs_norm_inner: f64,
    /// Largest fraction of ‖Pδ_s‖² found on the outer sphere.
    pub boundary_leak: f64,
    pub sites: usize,
    pub warnings: Vec<String>,
}

/// Per-site terms with v = Pδ_s: t₊ = ⟨φv, Pφv⟩, t₋ = ⟨φ̄v, Pφ̄v⟩, giving
/// σ_s = t₊ − t₋, ψ_s = 2P_ss − t₊ − t₋, ξ±_s = 2P_ss − 2t_±.
pub fn index_functionals(
    proj: &Projector,
    space: &TruncatedSpace,
    fd: &FredholmData,
    index_margin: usize,
    leak_threshold: f64,
) -> Result<IndexData> {
    let ball = space.ball();
    let g = ball.presentation().genus();
    let n = ball.len();
    if fd.phase.len() != n {
        return Err(Error::Domain("Fredholm phases belong to a different ball".into()));
    }
    let sites = ball.interior(index_margin);
    if sites.is_empty() {
        return Ok(IndexData { sites: 0, ..Default::default() });
    }
    let inner = if ball.radius() >= index_margin + 1 {
        ball.count_within(ball.radius() - index_margin - 1)
    } else {
        0
    };
    let outer_start = ball.count_within(ball.radius().saturating_sub(1));
    let outer_start = if ball.radius() == 0 { n } else { outer_start };
    let k = sites.len();
    let v = proj.columns(&sites);
    let mut fv = vec![ZERO; n * k];
    let mut cv = vec![ZERO; n * k];
    for c in 0..k {
        for y in 0..n {
            let x = v[c * n + y];
            fv[c * n + y] = fd.phase[y] * x;
            cv[c * n + y] = fd.phase[y].conj() * x;
        }
    }
    let pfv = proj.apply_block(&fv, k);
    let pcv = proj.apply_block(&cv, k);
    struct Site {
        sigma: f64,
        psi: f64,
        xp: f64,
        xm: f64,
        hs: f64,
        leak: f64,
    }
    let per: Vec<Site> = par::map_range(k, |c| {
        let s = sites[c];
        let col = &v[c * n..(c + 1) * n];
        let pss = col[s].re;
        let tp: f64 = (0..n).map(|y| (fv[c * n + y].conj() * pfv[c * n + y]).re).sum();
        let tm: f64 = (0..n).map(|y| (cv[c * n + y].conj() * pcv[c * n + y]).re).sum();
        let hs: f64 = (0..n)
            .map(|y| 2.0 * (fd.phase[y] - fd.phase[s]).norm_sqr() * col[y].norm_sqr())
            .sum();
        let edge: f64 = col[outer_start..].iter().map(|x| x.norm_sqr()).sum();
        let leak = if pss > 1e-14 { edge / pss } else { 0.0 };
        Site { sigma: tp - tm, psi: 2.0 * pss - tp - tm, xp: 2.0 * pss - 2.0 * tp, xm: 2.0 * pss - 2.0 * tm, hs, leak }
    });
    let mut d = IndexData { sites: k, ..Default::default() };
    for (c, s) in per.iter().enumerate() {
        d.index += s.sigma;
        d.psi += s.psi;
        d.xi_plus += s.xp;
        d.xi_minus += s.xm;
        d.hs_norm += s.hs;
        if sites[c] < inner {
            d.hs_norm_inner += s.hs;
        }
        d.boundary_leak = d.boundary_leak.max(s.leak);
    }
    d.frac = (d.index - d.index.round()).abs();
    let step = 2.0 * (g as f64 - 1.0);
    d.dist_lattice = (d.index - step * (d.index / step).round()).abs();
    if d.boundary_leak > leak_threshold {
        d.warnings.push(format!(
            "unreliable index: boundary leak {:.3e} exceeds {leak_threshold:.1e}",
            d.boundary_leak
        ));
    }
    Ok(d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainDiagnostics {
    pub hs_norm: f64,
    pub sobolev_norms: Vec<f64>,
    /// Relative growth of each norm from the sub-cutoff to the cutoff.
    pub growth: f64,
    pub in_domain: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ceilings {
    pub hs: f64,
    pub sobolev: f64,
    pub growth: f64,
}

impl Default for Ceilings {
    fn default() -> Self {
        Ceilings { hs: 1e3, sobolev: 1e3, growth: 0.10 }
    }
}

/// Σ_γ |Ω_j(γ)|²|P(γ)|² for j = 0..2g.
pub fn sobolev_norms(p: &EquivariantKernel, ball: &Ball) -> Vec<f64> {
    let gg = 2 * ball.presentation().genus();
    let mut out = vec![0.0; gg];
    for (i, v) in p.support() {
        let ab = ball.element(i).abelian();
        for j in 0..gg {
            out[j] += (ab[j] as f64).powi(2) * v.norm_sqr();
        }
    }
    out
}

/// Finite stand-in for membership in the Sobolev and Hilbert-Schmidt domains:
/// all norms below their ceilings and growing by less than `growth` when the
/// cutoff moves out by one shell.
pub fn domain_diagnostics(p: &EquivariantKernel, ball: &Ball, idx: &IndexData, c: &Ceilings) -> DomainDiagnostics {
    let r = p.radius(ball);
    let sob = sobolev_norms(p, ball);
    let sob_inner = sobolev_norms(&p.truncate(ball, r.saturating_sub(1)), ball);
    let rel = |a: f64, b: f64| if a.abs() < 1e-12 { 0.0 } else { (a - b).abs() / a.abs() };
    let mut growth = rel(idx.hs_norm, idx.hs_norm_inner);
    for (a, b) in sob.iter().zip(&sob_inner) {
        growth = growth.max(rel(*a, *b));
    }
    let in_domain = idx.hs_norm <= c.hs
        && sob.iter().all(|&s| s <= c.sobolev)
        && growth < c.growth
        && idx.hs_norm.is_finite();
    DomainDiagnostics { hs_norm: idx.hs_norm, sobolev_norms: sob, growth, in_domain }
}

/// One row of an energy sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductanceRow {
    pub energy: f64,
    pub kubo: f64,
    pub kubo_residual: f64,
    pub tr_c: f64,
    pub tr_c_residual: f64,
    pub index: f64,
    pub psi: f64,
    pub xi_plus: f64,
    pub xi_minus: f64,
    pub ids: f64,
    pub hs_norm: f64,
    pub sobolev_norms: Vec<f64>,
    pub domain_growth: f64,
    pub in_domain: bool,
    pub plateau: Option<usize>,
    pub boundary_leak: f64,
    pub kernel_radius: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub id: usize,
    pub e_start: f64,
    pub e_end: f64,
    pub value: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauReport {
    pub plateaus: Vec<Plateau>,
    pub psi_max: f64,
    pub bound: usize,
    pub bound_ok: bool,
    pub psi_monotone: bool,
}

/// Maximal runs of in-domain rows with the Kubo value constant within `tol`,
/// and the check count ≤ ⌊ψ_max/(2(g−1))⌋ + 1. ψ is in index units, so the
/// conversion factor to Kubo units cancels from the bound.
pub fn plateau_report(rows: &mut [ConductanceRow], genus: usize, tol: f64) -> Result<PlateauReport> {
    if rows.windows(2).any(|w| w[1].energy < w[0].energy) {
        return Err(Error::Domain("sweep must be sorted by energy".into()));
    }
    let mut plateaus: Vec<Plateau> = Vec::new();
    let mut last_psi: Option<f64> = None;
    let mut psi_monotone = true;
    let mut psi_max = 0.0f64;
    for row in rows.iter_mut() {
        row.plateau = None;
        if !row.in_domain {
            continue;
        }
        if let Some(prev) = last_psi {
            if row.psi < prev - 1e-9 {
                psi_monotone = false;
            }
        }
        last_psi = Some(row.psi);
        psi_max = psi_max.max(row.psi);
        match plateaus.last_mut() {
            Some(p) if (row.kubo - p.value).abs() <= tol => {
                p.value = (p.value * p.points as f64 + row.kubo) / (p.points + 1) as f64;
                p.points += 1;
                p.e_end = row.energy;
            }
            _ => plateaus.push(Plateau {
                id: plateaus.len(),
                e_start: row.energy,
                e_end: row.energy,
                value: row.kubo,
                points: 1,
            }),
        }
        row.plateau = Some(plateaus.len() - 1);
    }
    let step = 2.0 * (genus as f64 - 1.0);
    let bound = (psi_max.max(0.0) / step).floor() as usize + 1;
    Ok(PlateauReport { bound_ok: plateaus.len() <= bound, plateaus, psi_max, bound, psi_monotone })
}

/// Pieces of one disorder sample used by [`disorder_average`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub seed: u64,
    pub index: f64,
    pub kubo: f64,
    pub tr_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub samples: Vec<SampleResult>,
    pub mean_index: f64,
    pub mean_kubo: f64,
    pub stderr_kubo: f64,
    pub mean_tr_c: f64,
    pub stderr_tr_c: f64,
    pub rounded_index: Vec<i64>,
    pub index_constant: bool,
    /// Every Kubo sample within two standard errors of the mean.
    pub kubo_within_2se: bool,
}

fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn disorder_average(samples: Vec<SampleResult>) -> Result<EnsembleSummary> {
    if samples.is_empty() {
        return Err(Error::Config("disorder average needs at least one sample".into()));
    }
    let idx: Vec<f64> = samples.iter().map(|s| s.index).collect();
    let kub: Vec<f64> = samples.iter().map(|s| s.kubo).collect();
    let trc: Vec<f64> = samples.iter().map(|s| s.tr_c).collect();
    let (mean_index, _) = mean_stderr(&idx);
    let (mean_kubo, stderr_kubo) = mean_stderr(&kub);
    let (mean_tr_c, stderr_tr_c) = mean_stderr(&trc);
    let rounded_index: Vec<i64> = idx.iter().map(|v| v.round() as i64).collect();
    let index_constant = rounded_index.iter().all(|&r| r == rounded_index[0]);
    let kubo_within_2se = kub.iter().all(|v| (v - mean_kubo).abs() <= 2.0 * stderr_kubo + 1e-12);
    Ok(EnsembleSummary {
        samples,
        mean_index,
        mean_kubo,
        stderr_kubo,
        mean_tr_c,
        stderr_tr_c,
        rounded_index,
        index_constant,
        kubo_within_2se,
    })
}

/// κ from one clean gap: tr_c ≈ κ·index. None when the index is not near a
/// nonzero integer.
pub fn calibrate_kappa(tr_c: f64, index: f64, max_frac: f64) -> Option<f64> {
    let n = index.round();
    if n == 0.0 || (index - n).abs() > max_frac {
        return None;
    }
    Some(tr_c / n)
}
