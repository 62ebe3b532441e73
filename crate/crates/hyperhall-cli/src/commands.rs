use std::path::Path;

use hyperhall::config::RunConfig;
use hyperhall::export::{self, num, Provenance};
use hyperhall::hamiltonian::gaps_json;
use hyperhall::pipeline;
use hyperhall::validation::run_validation;
use hyperhall::{Error, ErrorClass, Result};

use crate::settings::to_toml;

fn progress(msg: &str) {
    eprintln!("[hyperhall] {msg}");
}

fn error_of(class: ErrorClass, msg: String) -> Error {
    match class {
        ErrorClass::Config => Error::Config(msg),
        ErrorClass::Numeric => Error::Solver(msg),
        ErrorClass::Invariant => Error::Consistency(msg),
    }
}

pub fn validate(cfg: &RunConfig) -> Result<()> {
    println!("# effective configuration");
    print!("{}", to_toml(cfg)?);
    for (key, set, note) in [
        ("margin", cfg.margin.is_some(), format!("R/2 = {}", cfg.margin())),
        ("gap_min", cfg.gap_min.is_some(), "1e-3 of the spectral width".into()),
        ("plateau_tol", cfg.plateau_tol.is_some(), "0.05·2(g−1)·κ".into()),
        ("kappa", cfg.kappa.is_some(), "calibrated from the run, else 2π".into()),
    ] {
        if !set {
            println!("# {key} unset: {note}");
        }
    }
    progress("running property suites");
    let report = run_validation(cfg)?;
    let prov = Provenance::new(&cfg.hash());
    export::write(Path::new(&cfg.out), "validation.json", &export::json(&prov, "validation", cfg, &report)?)?;
    println!();
    for s in &report.suites {
        println!(
            "{} {} instances={} skipped={} worst={:e} tol={:e}",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.instances,
            s.skipped,
            s.worst,
            s.tolerance
        );
    }
    if report.passed {
        Ok(())
    } else {
        Err(Error::Consistency(format!("failing invariant(s): {}", report.failing().join(", "))))
    }
}

pub fn butterfly(cfg: &RunConfig) -> Result<()> {
    let thetas = cfg.thetas();
    progress(&format!("butterfly over {} θ values at R = {}", thetas.len(), cfg.radius));
    let data = pipeline::butterfly(cfg)?;
    let prov = Provenance::new(&cfg.hash());
    let mut rows = Vec::new();
    let mut pts = Vec::new();
    for (t, ev) in &data {
        for &e in ev {
            rows.push(vec![num(*t), num(e)]);
            pts.push((*t, e));
        }
    }
    let out = Path::new(&cfg.out);
    export::write(out, "butterfly.csv", &export::csv(&prov, &["theta", "eigenvalue"], &rows))?;
    export::write(out, "butterfly.svg", &export::scatter_svg(&prov, "spectrum vs theta", "theta", "E", &pts))?;
    progress(&format!("wrote {} rows", rows.len()));
    Ok(())
}

pub fn spectrum(cfg: &RunConfig) -> Result<()> {
    progress(&format!("spectrum at θ = {}, R = {}", cfg.theta, cfg.radius));
    let rep = pipeline::spectrum(cfg, cfg.theta, cfg.seeds[0])?;
    let prov = Provenance::new(&cfg.hash());
    let out = Path::new(&cfg.out);
    let table: Vec<Vec<String>> = rep.table.iter().map(|r| r.iter().map(|v| num(*v)).collect()).collect();
    export::write(out, "spectrum.csv", &export::csv(&prov, &["energy", "ids", "dos"], &table))?;
    if !rep.eigenvalues.is_empty() {
        let ev: Vec<Vec<String>> =
            rep.eigenvalues.iter().enumerate().map(|(i, e)| vec![i.to_string(), num(*e)]).collect();
        export::write(out, "eigenvalues.csv", &export::csv(&prov, &["index", "eigenvalue"], &ev))?;
    }
    #[derive(serde::Serialize)]
    struct Summary<'a> {
        theta: f64,
        dim: usize,
        method: &'a str,
        bounds: (f64, f64),
        gaps: Vec<serde_json::Value>,
    }
    let s = Summary { theta: rep.theta, dim: rep.dim, method: &rep.method, bounds: rep.bounds, gaps: gaps_json(&rep.gaps) };
    export::write(out, "gaps.json", &export::json(&prov, "spectrum", cfg, &s)?)?;
    let pts: Vec<(f64, f64)> = rep.table.iter().map(|r| (r[0], r[2])).collect();
    export::write(out, "spectrum.svg", &export::line_svg(&prov, "density of states", "E", "dos", &pts))?;
    progress(&format!("{} sites, {} gaps", rep.dim, rep.gaps.len()));
    Ok(())
}

pub fn conductance(cfg: &RunConfig) -> Result<()> {
    progress(&format!("conductance at θ = {}, R = {}", cfg.theta, cfg.radius));
    let run = pipeline::conductance(cfg, cfg.theta, cfg.seeds[0])?;
    let prov = Provenance::new(&cfg.hash());
    let out = Path::new(&cfg.out);
    export::write(out, "conductance.json", &export::json(&prov, "conductance", cfg, &run)?)?;
    let header = [
        "energy", "sigma", "psi", "ids", "in_domain", "tr_c", "index", "xi_plus", "xi_minus", "hs_norm", "plateau",
    ];
    let mut rows: Vec<Vec<String>> = run
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.energy),
                num(r.kubo),
                num(r.psi),
                num(r.ids),
                r.in_domain.to_string(),
                num(r.tr_c),
                num(r.index),
                num(r.xi_plus),
                num(r.xi_minus),
                num(r.hs_norm),
                r.plateau.map(|p| p.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    for f in &run.failures {
        let mut r = vec![num(f.energy)];
        r.extend(std::iter::repeat_n("failed".to_string(), header.len() - 1));
        rows.push(r);
    }
    export::write(out, "conductance.csv", &export::csv(&prov, &header, &rows))?;
    let pts: Vec<(f64, f64, bool)> = run.rows.iter().map(|r| (r.energy, r.kubo, r.in_domain)).collect();
    export::write(out, "conductance.svg", &export::step_svg(&prov, "Kubo conductance vs Fermi energy", "E", "sigma_E", &pts))?;
    let p = &run.plateaus;
    progress(&format!(
        "{} energies, {} plateaus, bound {} ({}), κ = {} ({})",
        run.rows.len(),
        p.plateaus.len(),
        p.bound,
        if p.bound_ok { "ok" } else { "violated" },
        run.meta.kappa,
        run.meta.kappa_source
    ));
    if let Some(f) = run.failures.first() {
        return Err(error_of(f.class, format!("{} of {} energies failed; first at E = {}: {}", run.failures.len(), run.failures.len() + run.rows.len(), f.energy, f.message)));
    }
    Ok(())
}

pub fn average(cfg: &RunConfig) -> Result<()> {
    progress(&format!("disorder ensemble of {} samples at θ = {}", cfg.seeds.len(), cfg.theta));
    let run = pipeline::disorder_ensemble(cfg, cfg.theta)?;
    let prov = Provenance::new(&cfg.hash());
    let out = Path::new(&cfg.out);
    export::write(out, "ensemble.json", &export::json(&prov, "ensemble", cfg, &run)?)?;
    let s = &run.summary;
    let rows: Vec<Vec<String>> = s
        .samples
        .iter()
        .zip(&s.rounded_index)
        .map(|(x, r)| vec![x.seed.to_string(), num(x.index), r.to_string(), num(x.kubo), num(x.tr_c)])
        .collect();
    export::write(out, "ensemble.csv", &export::csv(&prov, &["seed", "index", "rounded_index", "kubo", "tr_c"], &rows))?;
    progress(&format!(
        "E = {}: index constant {}, kubo {} ± {}",
        run.energy, s.index_constant, s.mean_kubo, s.stderr_kubo
    ));
    Ok(())
}
