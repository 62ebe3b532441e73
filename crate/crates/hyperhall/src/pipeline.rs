//! End-to-end runs: build → solve → project → functionals.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conductance::{
    calibrate_kappa, disorder_average, domain_diagnostics, fredholm_phase_frame, index_functionals,
    kubo, kubo_normalization, plateau_report, tr_c, ConductanceRow, EnsembleSummary, FredholmData,
    PlateauReport, SampleResult,
};
use crate::config::RunConfig;
use crate::error::{Error, ErrorClass, Result};
use crate::hamiltonian::{
    apply_disorder, build_harper, chebyshev_moments, chebyshev_projection, decay_radius,
    default_gap_min, dos, eigensolve, eigenvalues, find_gaps, ids_curve, kpm_density, kpm_ids,
    projection_kernel, spectral_projection, DisorderModel, Gap, SpectralData, SpectralProjection,
    DENSE_LIMIT,
};
use crate::hypgeo::Isometry;
use crate::magnetic::MagneticData;
use crate::operator::{TruncatedOperator, TruncatedSpace};
use crate::par;
use crate::surface_group::{Ball, Presentation};

/// Presentation for the run, with the optional generator shear applied.
pub fn presentation(cfg: &RunConfig) -> Result<Presentation> {
    let p = Presentation::standard(cfg.genus)?;
    if cfg.perturb_generator == 0.0 {
        return Ok(p);
    }
    let mut gens = p.generator_matrices().to_vec();
    let shear = Isometry::new(1.0, cfg.perturb_generator, 0.0, 1.0)?;
    gens[0] = gens[0].compose(&shear);
    Presentation::from_generators(cfg.genus, gens)
}

/// Ball and truncated space for a configuration.
pub fn space(cfg: &RunConfig) -> Result<TruncatedSpace> {
    let p = presentation(cfg)?;
    let ball = Ball::new(&p, cfg.radius, &cfg.base()?)?;
    Ok(TruncatedSpace::new(ball, cfg.margin()))
}

pub fn hamiltonian(
    space: &TruncatedSpace,
    m: &MagneticData,
    disorder: &DisorderModel,
) -> Result<TruncatedOperator> {
    let h = build_harper(space, m)?;
    Ok(apply_disorder(&h, disorder, space))
}

fn interior_or_all(space: &TruncatedSpace) -> Vec<usize> {
    let s = space.interior();
    if s.is_empty() {
        (0..space.dim()).collect()
    } else {
        s
    }
}

/// Spectral summary at one θ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub theta: f64,
    pub dim: usize,
    pub method: String,
    pub eigenvalues: Vec<f64>,
    pub gaps: Vec<Gap>,
    /// (E, N_E, density) table.
    pub table: Vec<[f64; 3]>,
    pub bounds: (f64, f64),
}

/// Interior sites used for the polynomial moments: at most 64, evenly spread.
fn moment_sites(space: &TruncatedSpace) -> Vec<usize> {
    let all = interior_or_all(space);
    let step = all.len().div_ceil(64).max(1);
    all.into_iter().step_by(step).collect()
}

/// Maximal runs of the grid where the polynomial density stays below `floor`.
fn kpm_gaps(grid: &[f64], rho: &[f64], floor: f64) -> Vec<Gap> {
    let mut gaps = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..grid.len() {
        let low = rho[i] < floor;
        match (low, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if s > 0 && i > s {
                    gaps.push(Gap { a: grid[s], b: grid[i - 1] });
                }
                start = None;
            }
            _ => {}
        }
    }
    gaps
}

pub fn spectrum(cfg: &RunConfig, theta: f64, seed: u64) -> Result<SpectrumReport> {
    cfg.validate()?;
    let space = space(cfg)?;
    let m = MagneticData::new(theta, cfg.base()?);
    let h = hamiltonian(&space, &m, &cfg.disorder_model(seed))?;
    let n = h.dim();
    let bins = cfg.bins;
    if n <= DENSE_LIMIT {
        let sd = eigensolve(&h)?;
        let lo = sd.eigenvalues[0];
        let hi = sd.eigenvalues[n - 1];
        let pad = 1e-9 + 1e-6 * (hi - lo);
        let hist = dos(&sd, bins, (lo - pad, hi + pad));
        let centers = hist.centers();
        let rho = hist.density();
        let nvals = ids_curve(&sd, &interior_or_all(&space), &centers)?;
        let gap_min = cfg.gap_min.unwrap_or_else(|| default_gap_min(&sd));
        let table = (0..bins).map(|i| [centers[i], nvals[i], rho[i]]).collect();
        return Ok(SpectrumReport {
            theta,
            dim: n,
            method: "dense".into(),
            gaps: find_gaps(&sd, gap_min),
            eigenvalues: sd.eigenvalues,
            table,
            bounds: (lo, hi),
        });
    }
    let csr = h.as_sparse().ok_or_else(|| Error::Solver("expected a sparse operator".into()))?;
    let r = csr.max_row_sum() * 1.01 + 1e-9;
    let mu = chebyshev_moments(csr, &moment_sites(&space), cfg.chebyshev_order, r);
    let grid: Vec<f64> = (0..bins).map(|i| -r + 2.0 * r * (i as f64 + 0.5) / bins as f64).collect();
    let rho = kpm_density(&mu, r, &grid);
    let nvals = kpm_ids(&mu, r, &grid);
    let peak = rho.iter().cloned().fold(0.0, f64::max);
    let gaps = kpm_gaps(&grid, &rho, 1e-3 * peak);
    let table = (0..bins).map(|i| [grid[i], nvals[i], rho[i]]).collect();
    Ok(SpectrumReport { theta, dim: n, method: "kpm".into(), eigenvalues: Vec::new(), gaps, table, bounds: (-r, r) })
}

/// Eigenvalues for every θ of the grid.
pub fn butterfly(cfg: &RunConfig) -> Result<Vec<(f64, Vec<f64>)>> {
    cfg.validate_for_conductance()?;
    let space = space(cfg)?;
    if space.dim() > DENSE_LIMIT {
        return Err(Error::Config(format!(
            "butterfly needs dense spectra; |B_R| = {} exceeds {DENSE_LIMIT}",
            space.dim()
        )));
    }
    let base = cfg.base()?;
    let disorder = cfg.disorder_model(cfg.seeds[0]);
    cfg.thetas()
        .into_iter()
        .map(|t| {
            let h = hamiltonian(&space, &MagneticData::new(t, base), &disorder)?;
            Ok((t, eigenvalues(&h)?))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunMeta {
    pub genus: usize,
    pub theta: f64,
    pub seed: u64,
    pub radius: usize,
    pub margin: usize,
    pub index_margin: usize,
    pub dim: usize,
    pub method: String,
    pub kernel_radius: usize,
    pub kubo_normalization: f64,
    pub kappa: f64,
    pub kappa_source: String,
    pub plateau_tol: f64,
    pub x0_clearance: f64,
    pub gap_min: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Quantization {
    pub energy: f64,
    pub tr_c_over_kappa: f64,
    pub kubo_over_kappa: f64,
    pub nearest_lattice: f64,
    pub tr_c_distance: f64,
    pub kubo_distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConductanceRun {
    pub meta: RunMeta,
    pub gaps: Vec<Gap>,
    pub rows: Vec<ConductanceRow>,
    pub plateaus: PlateauReport,
    pub quantization: Vec<Quantization>,
    /// Energies whose evaluation failed; the other rows are still reported.
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Failure {
    pub energy: f64,
    pub class: ErrorClass,
    pub message: String,
}

/// Prepared operator with its spectral data, reusable across energies.
pub struct Solved {
    pub space: TruncatedSpace,
    pub magnetic: MagneticData,
    pub h: TruncatedOperator,
    pub spectral: Option<SpectralData>,
    pub gaps: Vec<Gap>,
    pub gap_min: f64,
    kpm: Option<(Vec<f64>, f64)>,
}

impl Solved {
    pub fn new(cfg: &RunConfig, space: TruncatedSpace, theta: f64, disorder: &DisorderModel) -> Result<Solved> {
        let m = MagneticData::new(theta, cfg.base()?);
        let h = hamiltonian(&space, &m, disorder)?;
        if h.dim() <= DENSE_LIMIT {
            let sd = eigensolve(&h)?;
            let gap_min = cfg.gap_min.unwrap_or_else(|| default_gap_min(&sd));
            let gaps = find_gaps(&sd, gap_min);
            return Ok(Solved { space, magnetic: m, h, spectral: Some(sd), gaps, gap_min, kpm: None });
        }
        let csr = h.as_sparse().ok_or_else(|| Error::Solver("expected a sparse operator".into()))?;
        let r = csr.max_row_sum() * 1.01 + 1e-9;
        let mu = chebyshev_moments(csr, &moment_sites(&space), cfg.chebyshev_order, r);
        let grid: Vec<f64> = (0..cfg.bins).map(|i| -r + 2.0 * r * (i as f64 + 0.5) / cfg.bins as f64).collect();
        let rho = kpm_density(&mu, r, &grid);
        let peak = rho.iter().cloned().fold(0.0, f64::max);
        let gaps = kpm_gaps(&grid, &rho, 1e-3 * peak);
        let gap_min = cfg.gap_min.unwrap_or(2e-3 * r);
        Ok(Solved { space, magnetic: m, h, spectral: None, gaps, gap_min, kpm: Some((mu, r)) })
    }

    pub fn method(&self) -> &'static str {
        if self.spectral.is_some() {
            "dense"
        } else {
            "chebyshev"
        }
    }

    pub fn projection(&self, e: f64, order: usize) -> Result<SpectralProjection> {
        match &self.spectral {
            Some(sd) => spectral_projection(sd, e, self.gap_min),
            None => chebyshev_projection(&self.h, e, order),
        }
    }

    pub fn ids(&self, e: f64) -> Result<f64> {
        match (&self.spectral, &self.kpm) {
            (Some(sd), _) => Ok(ids_curve(sd, &interior_or_all(&self.space), &[e])?[0]),
            (None, Some((mu, r))) => Ok(kpm_ids(mu, *r, &[e])[0]),
            _ => unreachable!(),
        }
    }

    /// Midpoints of the `k` widest gaps, sorted by energy.
    pub fn gap_energies(&self, k: usize) -> Vec<f64> {
        let mut g = self.gaps.clone();
        g.sort_by(|a, b| b.width().total_cmp(&a.width()).then(a.a.total_cmp(&b.a)));
        g.truncate(k);
        let mut e: Vec<f64> = g.iter().map(|g| g.midpoint()).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn widest_gap(&self) -> Option<Gap> {
        self.gaps.iter().copied().max_by(|a, b| a.width().total_cmp(&b.width()).then(b.a.total_cmp(&a.a)))
    }
}

/// All functionals of one Fermi projection.
pub struct Evaluation {
    pub row: ConductanceRow,
    pub kernel_radius: usize,
}

pub fn evaluate(
    cfg: &RunConfig,
    solved: &Solved,
    fd: &FredholmData,
    e: f64,
    norm: f64,
) -> Result<Evaluation> {
    let space = &solved.space;
    let m = &solved.magnetic;
    let proj = solved.projection(e, cfg.chebyshev_order)?;
    let (kernel, _, _) = projection_kernel(&proj, space, m, cfg.kernel_threshold);
    let rk = space.margin().min(space.radius() - space.margin());
    let kernel = kernel.truncate(space.ball(), rk);
    let tc = tr_c(&kernel, space, m)?;
    let ku = kubo(&kernel, space, m, norm)?;
    let idx = index_functionals(&proj.projector, space, fd, cfg.index_margin, cfg.leak_threshold)?;
    let dd = domain_diagnostics(&kernel, space.ball(), &idx, &cfg.ceilings);
    let mut warnings = proj.warnings.clone();
    warnings.extend(idx.warnings.iter().cloned());
    if kernel.non_equivariant {
        warnings.push(format!("kernel extraction residual {:.3e}", kernel.residual));
    }
    let decay = decay_radius(&kernel, space, 1e-8);
    let row = ConductanceRow {
        energy: e,
        kubo: ku.value,
        kubo_residual: ku.residual,
        tr_c: tc.value,
        tr_c_residual: tc.residual,
        index: idx.index,
        psi: idx.psi,
        xi_plus: idx.xi_plus,
        xi_minus: idx.xi_minus,
        ids: solved.ids(e)?,
        hs_norm: dd.hs_norm,
        sobolev_norms: dd.sobolev_norms,
        domain_growth: dd.growth,
        in_domain: dd.in_domain,
        plateau: None,
        boundary_leak: idx.boundary_leak,
        kernel_radius: decay.unwrap_or(rk),
        warnings,
    };
    Ok(Evaluation { row, kernel_radius: rk })
}

fn lattice_point(x: f64, step: f64) -> f64 {
    step * (x / step).round()
}

/// Full conductance pipeline at one θ and one disorder seed.
pub fn conductance(cfg: &RunConfig, theta: f64, seed: u64) -> Result<ConductanceRun> {
    cfg.validate_for_conductance()?;
    let space = space(cfg)?;
    let solved = Solved::new(cfg, space, theta, &cfg.disorder_model(seed))?;
    conductance_on(cfg, &solved, theta, seed)
}

/// Conductance sweep over an already solved operator.
pub fn conductance_on(cfg: &RunConfig, solved: &Solved, theta: f64, seed: u64) -> Result<ConductanceRun> {
    let norm = kubo_normalization(solved.space.ball().presentation(), &cfg.base()?);
    let fd = fredholm_phase_frame(solved.space.ball(), cfg.x0_frame())?;
    let energies = if cfg.energies.is_empty() { solved.gap_energies(cfg.max_gaps) } else { cfg.energies.clone() };
    let mut rows = Vec::with_capacity(energies.len());
    let mut failures = Vec::new();
    let mut rk = 0;
    for &e in &energies {
        match evaluate(cfg, solved, &fd, e, norm) {
            Ok(ev) => {
                rk = ev.kernel_radius;
                rows.push(ev.row);
            }
            Err(err) => failures.push(Failure { energy: e, class: err.class(), message: err.to_string() }),
        }
    }
    let step = 2.0 * (cfg.genus as f64 - 1.0);
    let (kappa, source) = match cfg.kappa {
        Some(k) => (k, "frozen".to_string()),
        None => {
            let best = rows
                .iter()
                .filter(|r| r.in_domain)
                .filter_map(|r| calibrate_kappa(r.tr_c, r.index, 0.2).map(|k| (k, (r.index - r.index.round()).abs())))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((k, _)) => (k, "calibrated".to_string()),
                None => (2.0 * std::f64::consts::PI, "default".to_string()),
            }
        }
    };
    let tol = cfg.plateau_tol.unwrap_or(0.05 * step * kappa.abs());
    let plateaus = plateau_report(&mut rows, cfg.genus, tol)?;
    let quantization = rows
        .iter()
        .map(|r| {
            let a = r.tr_c / kappa;
            let b = r.kubo / kappa;
            let near = lattice_point(a, step);
            Quantization {
                energy: r.energy,
                tr_c_over_kappa: a,
                kubo_over_kappa: b,
                nearest_lattice: near,
                tr_c_distance: (a - near).abs(),
                kubo_distance: (b - near).abs(),
            }
        })
        .collect();
    let meta = RunMeta {
        genus: cfg.genus,
        theta,
        seed,
        radius: cfg.radius,
        margin: cfg.margin(),
        index_margin: cfg.index_margin,
        dim: solved.space.dim(),
        method: solved.method().into(),
        kernel_radius: rk,
        kubo_normalization: norm,
        kappa,
        kappa_source: source,
        plateau_tol: tol,
        x0_clearance: fd.clearance,
        gap_min: solved.gap_min,
    };
    Ok(ConductanceRun { meta, gaps: solved.gaps.clone(), rows, plateaus, quantization, failures })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleRun {
    pub theta: f64,
    pub energy: f64,
    pub clean_gap: Option<Gap>,
    pub w: f64,
    pub summary: EnsembleSummary,
}

/// Disorder ensemble at a single Fermi energy: the first configured energy or
/// the midpoint of the widest gap of the clean operator.
pub fn disorder_ensemble(cfg: &RunConfig, theta: f64) -> Result<EnsembleRun> {
    cfg.validate_for_conductance()?;
    let sp = space(cfg)?;
    let p = sp.ball().presentation().clone();
    let base = cfg.base()?;
    let norm = kubo_normalization(&p, &base);
    let clean = Solved::new(cfg, sp.clone(), theta, &DisorderModel::none())?;
    let gap = clean.widest_gap();
    let energy = match (cfg.energies.first(), gap) {
        (Some(&e), _) => e,
        (None, Some(g)) => g.midpoint(),
        (None, None) => return Err(Error::Solver("clean operator has no gap to place E in".into())),
    };
    drop(clean);
    let fd = fredholm_phase_frame(sp.ball(), cfg.x0_frame())?;
    let run = |seed: &u64| -> Result<SampleResult> {
        let s = Solved::new(cfg, sp.clone(), theta, &cfg.disorder_model(*seed))?;
        let ev = evaluate(cfg, &s, &fd, energy, norm)?;
        Ok(SampleResult { seed: *seed, index: ev.row.index, kubo: ev.row.kubo, tr_c: ev.row.tr_c })
    };
    let samples: Vec<Result<SampleResult>> = if sp.dim() <= 1000 {
        par::map(&cfg.seeds, run)
    } else {
        // large dense solves parallelize internally; keep one in memory at a time
        cfg.seeds.iter().map(run).collect()
    };
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EnsembleRun { theta, energy, clean_gap: gap, w: cfg.w, summary: disorder_average(samples)? })
}

/// Chebyshev projector for an operator already in hand (used by tests and
/// benches that bypass the dense path).
pub fn chebyshev_projector(h: &TruncatedOperator, e: f64, order: usize) -> Result<crate::hamiltonian::Projector> {
    let csr = h.as_sparse().ok_or_else(|| Error::Solver("expected a sparse operator".into()))?;
    Ok(crate::hamiltonian::Projector::chebyshev(Arc::new(csr.clone()), e, order))
}
