//! Property suites on random instances: holonomy, cocycle identities,
//! projective representation law, Hermiticity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::hamiltonian::build_harper;
use crate::hypgeo::{holonomy, mobius_apply, parallel_transport, HPoint};
use crate::magnetic::MagneticData;
use crate::operator::{projective_defect, TruncatedOperator, TruncatedSpace};
use crate::pipeline::presentation;
use crate::surface_group::{Ball, GroupElement, Presentation};
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub instances: usize,
    pub skipped: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteResult {
    fn new(name: &str, tolerance: f64) -> Self {
        SuiteResult { name: name.into(), instances: 0, skipped: 0, worst: 0.0, tolerance, passed: true }
    }
    fn record(&mut self, err: f64) {
        self.instances += 1;
        if !(err <= self.worst) {
            self.worst = err;
        }
    }
    fn finish(mut self) -> Self {
        self.passed = self.worst <= self.tolerance && self.instances > 0;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub genus: usize,
    pub radius: usize,
    pub theta: f64,
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn failing(&self) -> Vec<&str> {
        self.suites.iter().filter(|s| !s.passed).map(|s| s.name.as_str()).collect()
    }
}

/// Radius of the ball the random instances are drawn from.
pub const SAMPLE_RADIUS: usize = 3;

struct Sampler<'a> {
    ball: &'a Ball,
    rng: ChaCha8Rng,
}

impl Sampler<'_> {
    fn element(&mut self) -> &GroupElement {
        let i = self.rng.random_range(0..self.ball.len());
        self.ball.element(i)
    }
    fn point(&mut self) -> HPoint {
        let u = *self.ball.base_point();
        let g = *self.element().matrix();
        mobius_apply(&g, &u).expect("orbit point")
    }
    fn theta(&mut self) -> f64 {
        self.rng.random_range(0.05..3.0)
    }
}

fn holonomy_suite(s: &mut Sampler, n: usize) -> SuiteResult {
    let mut r = SuiteResult::new("holonomy", 1e-9);
    for _ in 0..n {
        let (v, w, z) = (s.point(), s.point(), s.point());
        let th = s.theta();
        let t1 = parallel_transport(&v, &z, th);
        let t2 = parallel_transport(&v, &w, th);
        let t3 = parallel_transport(&w, &z, th);
        if t1.branch_warning || t2.branch_warning || t3.branch_warning {
            r.skipped += 1;
            continue;
        }
        let lhs = t1.value.inv() * t2.value * t3.value;
        let rhs = holonomy(&v, &w, &z, th);
        // invariance under a generator (hence under the group); moving by a
        // long word would push the points to the ideal boundary
        let nl = s.ball.presentation().alphabet_size() as u8;
        let g = s.ball.presentation().letter_matrix(s.rng.random_range(0..nl));
        let moved = |p: &HPoint| mobius_apply(&g, p).expect("orbit point");
        let rhs2 = holonomy(&moved(&v), &moved(&w), &moved(&z), th);
        r.record((lhs - rhs).norm().max((rhs - rhs2).norm()));
    }
    r.finish()
}

fn cocycle_suites(s: &mut Sampler, p: &Presentation, n: usize) -> (SuiteResult, SuiteResult, SuiteResult) {
    let mut c = SuiteResult::new("area_cocycle", 1e-9);
    let mut sg = SuiteResult::new("multiplier_cocycle", 1e-9);
    let mut zero = SuiteResult::new("theta_zero_multiplier", 0.0);
    let u = *s.ball.base_point();
    for _ in 0..n {
        let g1 = s.element().clone();
        let g2 = s.element().clone();
        let g3 = s.element().clone();
        let th = s.theta();
        let m = MagneticData::new(th, u);
        let g12 = p.multiply(&g1, &g2);
        let g23 = p.multiply(&g2, &g3);
        let lhs = m.area_cocycle(&g1, &g2) + m.area_cocycle(&g12, &g3);
        let rhs = m.area_cocycle(&g1, &g23) + m.area_cocycle(&g2, &g3);
        c.record((lhs - rhs).abs());
        let ls = m.multiplier(&g1, &g2) * m.multiplier(&g12, &g3);
        let rs = m.multiplier(&g1, &g23) * m.multiplier(&g2, &g3);
        sg.record((ls - rs).norm());
        let m0 = MagneticData::new(0.0, u);
        zero.record((m0.multiplier(&g1, &g2) - C64::new(1.0, 0.0)).norm());
    }
    (c.finish(), sg.finish(), zero.finish())
}

fn projective_suite(s: &mut Sampler, space: &TruncatedSpace, n: usize) -> SuiteResult {
    let mut r = SuiteResult::new("projective_representation", 1e-9);
    let u = *s.ball.base_point();
    for _ in 0..n {
        let g1 = s.element().clone();
        let g2 = s.element().clone();
        let m = MagneticData::new(s.theta(), u);
        r.record(projective_defect(space, &m, &g1, &g2));
    }
    r.finish()
}

fn unit_rows(h: &TruncatedOperator) -> f64 {
    let Some(c) = h.as_sparse() else { return f64::INFINITY };
    let mut worst = 0.0f64;
    for i in 0..c.dim() {
        for (_, v) in c.row(i) {
            worst = worst.max((v.norm() - 1.0).abs());
        }
    }
    worst
}

fn hermiticity_suite(s: &mut Sampler, space: &TruncatedSpace, theta: f64, n: usize) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("hermiticity", 1e-12);
    let u = *s.ball.base_point();
    let mut thetas = vec![theta, 0.0];
    thetas.extend((0..n).map(|_| s.theta()));
    for th in thetas {
        let h = build_harper(space, &MagneticData::new(th, u))?;
        r.record(h.hermiticity_residual().max(unit_rows(&h)));
    }
    Ok(r.finish())
}

/// Runs every suite. Presentation problems surface as errors, since no ball
/// can be built from a broken presentation.
pub fn run_validation(cfg: &RunConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let p = presentation(cfg)?;
    let mut pres = SuiteResult::new("presentation_relator", 1e-9);
    pres.record(p.relator_residual());
    let pres = pres.finish();
    let ball = Ball::new(&p, SAMPLE_RADIUS, &cfg.base()?)?;
    let space = TruncatedSpace::new(ball.clone(), 1);
    let n = cfg.validation_samples;
    let mut s = Sampler { ball: &ball, rng: ChaCha8Rng::seed_from_u64(cfg.seeds[0]) };
    let hol = holonomy_suite(&mut s, n);
    let (c, sg, zero) = cocycle_suites(&mut s, &p, n);
    let proj = projective_suite(&mut s, &space, n);
    let herm = hermiticity_suite(&mut s, &space, cfg.theta, 8)?;
    let suites = vec![pres, hol, c, sg, zero, proj, herm];
    let passed = suites.iter().all(|s| s.passed);
    Ok(ValidationReport { genus: cfg.genus, radius: SAMPLE_RADIUS, theta: cfg.theta, suites, passed })
}
