//! CSV, JSON and SVG writers. Every document carries the crate version and the
//! configuration hash; nothing time- or host-dependent is written.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(config_hash: &str) -> Self {
        Provenance { version: VERSION.into(), config_hash: config_hash.into() }
    }
    fn line(&self) -> String {
        format!("hyperhall {} config {}", self.version, self.config_hash)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

pub fn csv(prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("# {}\n{}\n", prov.line(), header.join(","));
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct Document<'a, C: Serialize, T: Serialize> {
    version: &'a str,
    config_hash: &'a str,
    kind: &'a str,
    config: &'a C,
    data: &'a T,
}

pub fn json<C: Serialize, T: Serialize>(prov: &Provenance, kind: &str, config: &C, data: &T) -> Result<String> {
    let d = Document { version: &prov.version, config_hash: &prov.config_hash, kind, config, data };
    let mut s = serde_json::to_string_pretty(&d)?;
    s.push('\n');
    Ok(s)
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 50.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it
                .filter(|v| v.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        Frame { x: span(&mut xs.clone()), y: span(&mut ys.clone()) }
    }
    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD)
    }
    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * PAD)
    }
}

fn open(prov: &Provenance, title: &str, f: &Frame, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, "<!-- {} -->", prov.line());
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" font-size="14" text-anchor="middle">{title}</text>"#, W / 2.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (v, anchor, x, y) in [
        (f.x.0, "start", PAD, H - PAD + 16.0),
        (f.x.1, "end", W - PAD, H - PAD + 16.0),
        (f.y.0, "end", PAD - 4.0, H - PAD),
        (f.y.1, "end", PAD - 4.0, PAD + 10.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" font-size="10" text-anchor="{anchor}">{:.3}</text>"#, v);
    }
    s
}

pub fn scatter_svg(prov: &Provenance, title: &str, xlabel: &str, ylabel: &str, pts: &[(f64, f64)]) -> String {
    let f = Frame::new(pts.iter().map(|p| p.0), pts.iter().map(|p| p.1));
    let mut s = open(prov, title, &f, xlabel, ylabel);
    s.push_str(r#"<g fill="navy">"#);
    s.push('\n');
    for &(x, y) in pts {
        if x.is_finite() && y.is_finite() {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="0.8"/>"#, f.px(x), f.py(y));
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}

/// Step plot; points with `false` flags are drawn hollow (outside the domain).
pub fn step_svg(prov: &Provenance, title: &str, xlabel: &str, ylabel: &str, pts: &[(f64, f64, bool)]) -> String {
    let f = Frame::new(pts.iter().map(|p| p.0), pts.iter().map(|p| p.1));
    let mut s = open(prov, title, &f, xlabel, ylabel);
    if !pts.is_empty() {
        let mut d = format!("M{:.2},{:.2}", f.px(pts[0].0), f.py(pts[0].1));
        for w in pts.windows(2) {
            let _ = write!(d, " H{:.2} V{:.2}", f.px(w[1].0), f.py(w[1].1));
        }
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="navy"/>"#);
    }
    for &(x, y, ok) in pts {
        let fill = if ok { "navy" } else { "white" };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{fill}" stroke="navy"/>"#,
            f.px(x),
            f.py(y)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn line_svg(prov: &Provenance, title: &str, xlabel: &str, ylabel: &str, pts: &[(f64, f64)]) -> String {
    let f = Frame::new(pts.iter().map(|p| p.0), pts.iter().map(|p| p.1));
    let mut s = open(prov, title, &f, xlabel, ylabel);
    let d: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="navy"/>"#, d.join(" "));
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let p = Provenance::new("abc");
        let s = csv(&p, &["a", "b"], &[vec![num(1.5), num(0.0)]]);
        assert_eq!(s, format!("# hyperhall {VERSION} config abc\na,b\n1.5,0\n"));
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let p = Provenance::new("abc");
        let s = step_svg(&p, "t", "x", "y", &[(0.0, 0.0, true), (1.0, 2.0, false)]);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("config abc"));
    }
}
