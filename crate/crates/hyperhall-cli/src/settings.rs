//! Configuration loading: defaults, then the TOML file, then flags.

use hyperhall::config::{DisorderChoice, RunConfig};
use hyperhall::{Error, Result};

use crate::Flags;

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("not a number: {s:?}")))
}

/// Comma list, or `start:stop:count` for an inclusive uniform grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (a, b) = (parse_f64(parts[0])?, parse_f64(parts[1])?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad grid count in {s:?}")))?;
        return Ok(match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        });
    }
    s.split(',').filter(|t| !t.trim().is_empty()).map(parse_f64).collect()
}

/// Comma list, or `a..b` for a half-open range.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad seed list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..b).collect());
    }
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}

fn parse_disorder(s: &str) -> Result<DisorderChoice> {
    match s {
        "none" => Ok(DisorderChoice::None),
        "iid" => Ok(DisorderChoice::Iid),
        "ap" => Ok(DisorderChoice::Ap),
        _ => Err(Error::Config(format!("unknown disorder model {s:?} (none|iid|ap)"))),
    }
}

pub fn load(f: &Flags) -> Result<RunConfig> {
    let mut c = match &f.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = f.genus {
        c.genus = v;
    }
    if let Some(v) = f.theta {
        c.theta = v;
    }
    if let Some(v) = &f.theta_grid {
        c.theta_grid = parse_grid(v)?;
    }
    if let Some(v) = f.radius {
        c.radius = v;
    }
    if let Some(v) = f.margin {
        c.margin = Some(v);
    }
    if let Some(v) = f.index_margin {
        c.index_margin = v;
    }
    if let Some(v) = &f.disorder {
        c.disorder = parse_disorder(v)?;
    }
    if let Some(v) = f.w {
        c.w = v;
    }
    if let Some(v) = f.lambda {
        c.lambda = v;
    }
    if let Some(v) = &f.alpha {
        c.alpha = parse_grid(v)?;
    }
    if let Some(v) = &f.seeds {
        c.seeds = parse_seeds(v)?;
    }
    if let Some(v) = &f.energies {
        c.energies = parse_grid(v)?;
    }
    if let Some(v) = &f.out {
        c.out = v.clone();
    }
    if let Some(v) = f.kappa {
        c.kappa = Some(v);
    }
    c.validate()?;
    Ok(c)
}

pub fn to_toml(c: &RunConfig) -> Result<String> {
    toml::to_string(c).map_err(|e| Error::Config(format!("cannot render configuration: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("1,2").unwrap(), vec![1.0, 2.0]);
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn seeds() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4,9").unwrap(), vec![4, 9]);
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&to_toml(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
