//! Run configuration shared by the library pipelines and the command line.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conductance::Ceilings;
use crate::error::{Error, Result};
use crate::hamiltonian::DisorderModel;
use crate::hypgeo::HPoint;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisorderChoice {
    None,
    Iid,
    Ap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub genus: usize,
    pub theta: f64,
    /// θ values for the butterfly; empty means just `theta`.
    pub theta_grid: Vec<f64>,
    pub radius: usize,
    /// Interior margin for kernel extraction; None means ⌊R/2⌋.
    pub margin: Option<usize>,
    /// Shells left out of the index trace.
    pub index_margin: usize,
    /// Base point u in half-plane coordinates.
    pub base_point: [f64; 2],
    /// Fredholm point x0 in the disk frame centred at u.
    pub x0: [f64; 2],
    pub disorder: DisorderChoice,
    pub w: f64,
    pub lambda: f64,
    /// Frequencies for the almost periodic potential; empty picks defaults.
    pub alpha: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Fermi energies; empty means midpoints of the widest gaps.
    pub energies: Vec<f64>,
    pub max_gaps: usize,
    /// None means 1e−3 of the spectral width.
    pub gap_min: Option<f64>,
    /// None means 0.05·2(g−1)·κ.
    pub plateau_tol: Option<f64>,
    /// Frozen normalization κ; None calibrates it from the run.
    pub kappa: Option<f64>,
    pub chebyshev_order: usize,
    pub kernel_threshold: f64,
    pub leak_threshold: f64,
    pub ceilings: Ceilings,
    pub bins: usize,
    /// Random instances per validation suite.
    pub validation_samples: usize,
    /// Shear applied to the first generator (fault injection).
    pub perturb_generator: f64,
    pub out: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            genus: 2,
            theta: 0.125,
            theta_grid: Vec::new(),
            radius: 4,
            margin: None,
            index_margin: 1,
            base_point: [0.0, 1.0],
            x0: [0.21, 0.13],
            disorder: DisorderChoice::None,
            w: 0.0,
            lambda: 0.0,
            alpha: Vec::new(),
            seeds: vec![0],
            energies: Vec::new(),
            max_gaps: 4,
            gap_min: None,
            plateau_tol: None,
            kappa: None,
            chebyshev_order: 400,
            kernel_threshold: 1e-6,
            leak_threshold: 1e-2,
            ceilings: Ceilings::default(),
            bins: 200,
            validation_samples: 1000,
            perturb_generator: 0.0,
            out: "out".into(),
        }
    }
}

/// Fractional parts of square roots of primes: rationally independent.
pub fn default_alpha(n: usize) -> Vec<f64> {
    let mut primes = Vec::new();
    let mut k = 2u64;
    while primes.len() < n {
        if (2..k).take_while(|d| d * d <= k).all(|d| k % d != 0) {
            primes.push(k);
        }
        k += 1;
    }
    primes.iter().map(|&p| (p as f64).sqrt().fract()).collect()
}

impl RunConfig {
    pub fn margin(&self) -> usize {
        self.margin.unwrap_or(self.radius / 2)
    }

    pub fn thetas(&self) -> Vec<f64> {
        if self.theta_grid.is_empty() {
            vec![self.theta]
        } else {
            self.theta_grid.clone()
        }
    }

    pub fn base(&self) -> Result<HPoint> {
        HPoint::half_plane(C64::new(self.base_point[0], self.base_point[1]))
    }

    pub fn x0_frame(&self) -> C64 {
        C64::new(self.x0[0], self.x0[1])
    }

    pub fn alpha_vector(&self) -> Vec<f64> {
        if self.alpha.is_empty() {
            default_alpha(2 * self.genus)
        } else {
            self.alpha.clone()
        }
    }

    pub fn disorder_model(&self, seed: u64) -> DisorderModel {
        match self.disorder {
            DisorderChoice::None => DisorderModel::none(),
            DisorderChoice::Iid => DisorderModel::iid(self.w, seed),
            DisorderChoice::Ap => DisorderModel::almost_periodic(self.lambda, self.alpha_vector()),
        }
    }

    /// Checks shared by every command.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.genus < 2 {
            return bad(format!("genus must be at least 2, got {}", self.genus));
        }
        if !self.theta.is_finite() || self.theta_grid.iter().any(|t| !t.is_finite()) {
            return bad("θ must be finite".into());
        }
        if self.energies.iter().any(|e| !e.is_finite()) {
            return bad("energies must be finite".into());
        }
        if self.energies.windows(2).any(|w| w[1] < w[0]) {
            return bad("energy grid must be sorted".into());
        }
        if self.margin() > self.radius {
            return bad(format!("margin {} exceeds radius {}", self.margin(), self.radius));
        }
        if self.disorder == DisorderChoice::Ap && self.alpha_vector().len() != 2 * self.genus {
            return bad(format!("alpha needs {} entries", 2 * self.genus));
        }
        if !(self.w >= 0.0) || !self.lambda.is_finite() {
            return bad("disorder strength must be finite and W ≥ 0".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.base_point[1] <= 0.0 || !self.base_point.iter().all(|v| v.is_finite()) {
            return bad("base point must lie in the upper half-plane".into());
        }
        if self.x0_frame().norm() >= 1.0 {
            return bad("x0 must lie inside the unit disk".into());
        }
        if matches!(self.kappa, Some(k) if !k.is_finite() || k == 0.0) {
            return bad("κ must be finite and nonzero".into());
        }
        if self.bins == 0 || self.chebyshev_order < 2 {
            return bad("bins and chebyshev_order must be positive".into());
        }
        Ok(())
    }

    /// Extra checks for commands that compute conductances or butterflies.
    pub fn validate_for_conductance(&self) -> Result<()> {
        self.validate()?;
        if self.radius < 2 {
            return Err(Error::Config(format!("radius must be at least 2, got {}", self.radius)));
        }
        Ok(())
    }

    /// SHA-256 of the configuration without its output location.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out.clear();
        let s = serde_json::to_string(&c).expect("config serializes");
        let d = Sha256::digest(s.as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }
}
