//! Genus-g surface group: side-pairing generators of the regular 4g-gon,
//! Dehn reduction, geodesic balls and abelianization.
//!
//! Letters are bytes. For genus g the alphabet is a1, b1, …, ag, bg (codes
//! 0..2g, with a_k = 2k and b_k = 2k+1) followed by their inverses (codes
//! 2g..4g). Inverses print in upper case.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypgeo::{self, half_plane_to_disk, HPoint, Isometry};
use crate::par;

pub type Word = Vec<u8>;

#[derive(Clone, Debug)]
pub struct Presentation {
    genus: usize,
    gens: Vec<Isometry>,
    relator: Word,
    cyclic: Vec<Word>,
    delta_min: f64,
}

#[derive(Clone, Debug)]
pub struct GroupElement {
    genus: u8,
    word: Word,
    matrix: Isometry,
    abelian: Vec<i32>,
}

impl GroupElement {
    pub fn word(&self) -> &[u8] {
        &self.word
    }
    pub fn len(&self) -> usize {
        self.word.len()
    }
    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }
    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }
    pub fn matrix(&self) -> &Isometry {
        &self.matrix
    }
    pub fn abelian(&self) -> &[i32] {
        &self.abelian
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_word(self.genus as usize, &self.word))
    }
}

pub fn format_word(genus: usize, w: &[u8]) -> String {
    if w.is_empty() {
        return "e".to_string();
    }
    let mut s = String::with_capacity(3 * w.len());
    for &l in w {
        let l = l as usize;
        let (g, inv) = if l < 2 * genus { (l, false) } else { (l - 2 * genus, true) };
        let name = match (g % 2, inv) {
            (0, false) => 'a',
            (1, false) => 'b',
            (0, true) => 'A',
            _ => 'B',
        };
        s.push(name);
        s.push_str(&(g / 2 + 1).to_string());
    }
    s
}

pub fn parse_word(genus: usize, s: &str) -> Result<Word> {
    let s = s.trim();
    if s == "e" || s.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (kind, inv) = match c {
            'a' => (0, false),
            'b' => (1, false),
            'A' => (0, true),
            'B' => (1, true),
            _ => return Err(Error::Config(format!("bad letter {c:?} in word {s:?}"))),
        };
        i += 1;
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        let idx: usize = chars[start..i]
            .iter()
            .collect::<String>()
            .parse()
            .map_err(|_| Error::Config(format!("missing handle index in {s:?}")))?;
        if idx == 0 || idx > genus {
            return Err(Error::Config(format!("handle index {idx} out of range in {s:?}")));
        }
        let g = 2 * (idx - 1) + kind;
        out.push(if inv { g + 2 * genus } else { g } as u8);
    }
    Ok(out)
}

fn rotation(phi: f64) -> [C64; 4] {
    [
        C64::from_polar(1.0, phi / 2.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::from_polar(1.0, -phi / 2.0),
    ]
}

fn mul2(x: &[C64; 4], y: &[C64; 4]) -> [C64; 4] {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

/// Disk automorphism carrying side `i` of the regular 4g-gon onto side `j`.
fn side_pairing(genus: usize, i: usize, j: usize) -> Result<Isometry> {
    let n = 4 * genus;
    let a = 1.0 / (PI / n as f64).tan();
    let b = (a * a - 1.0).sqrt();
    let t = [C64::new(a, 0.0), C64::new(b, 0.0), C64::new(b, 0.0), C64::new(a, 0.0)];
    let phi = |k: usize| 2.0 * PI * k as f64 / n as f64;
    let m = mul2(&mul2(&rotation(phi(j)), &t), &rotation(PI - phi(i)));
    Isometry::from_su11(m[0], m[1])
}

impl Presentation {
    /// Side pairings of the regular 4g-gon centred at the disk origin with
    /// interior angles 2π/(4g). The translation T = [[a, b], [b, a]] with
    /// a = cot(π/4g) moves the midpoint of one side to the opposite one; the
    /// pairings are R(φ_j)·T·R(π − φ_i), with a_k pairing side 4k onto 4k+2
    /// and b_k pairing side 4k+3 onto 4k+1, which makes the product of
    /// commutators equal to the identity.
    pub fn standard(genus: usize) -> Result<Self> {
        if genus < 2 {
            return Err(Error::Config(format!("genus must be at least 2, got {genus}")));
        }
        let mut gens = Vec::with_capacity(2 * genus);
        for k in 0..genus {
            gens.push(side_pairing(genus, 4 * k + 2, 4 * k)?);
            gens.push(side_pairing(genus, 4 * k + 1, 4 * k + 3)?);
        }
        Presentation::from_generators(genus, gens)
    }

    /// Checks the relator and measures the orbit separation on B₂.
    pub fn from_generators(genus: usize, gens: Vec<Isometry>) -> Result<Self> {
        if genus < 2 {
            return Err(Error::Config(format!("genus must be at least 2, got {genus}")));
        }
        if gens.len() != 2 * genus {
            return Err(Error::Presentation(format!(
                "expected {} generators, got {}",
                2 * genus,
                gens.len()
            )));
        }
        let g2 = 2 * genus as u8;
        let mut relator = Vec::with_capacity(4 * genus);
        for k in 0..genus as u8 {
            let (a, b) = (2 * k, 2 * k + 1);
            relator.extend_from_slice(&[a, b, a + g2, b + g2]);
        }
        let mut p = Presentation { genus, gens, relator, cyclic: Vec::new(), delta_min: 0.0 };
        let residual = p.relator_residual();
        if residual > 1e-9 {
            return Err(Error::Presentation(format!(
                "relator evaluates {residual:.3e} away from ±I"
            )));
        }
        let inv = p.inverse_word(&p.relator);
        for r in [p.relator.clone(), inv] {
            for s in 0..r.len() {
                let mut c = r[s..].to_vec();
                c.extend_from_slice(&r[..s]);
                p.cyclic.push(c);
            }
        }
        p.delta_min = separation_on_b2(&p, &HPoint::origin())?;
        if p.delta_min <= 1e-3 {
            return Err(Error::Freeness(format!(
                "orbit separation {:.3e} on B2 is too small",
                p.delta_min
            )));
        }
        Ok(p)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }
    pub fn alphabet_size(&self) -> usize {
        4 * self.genus
    }
    pub fn relator(&self) -> &[u8] {
        &self.relator
    }
    pub fn delta_min(&self) -> f64 {
        self.delta_min
    }
    pub fn generator_matrices(&self) -> &[Isometry] {
        &self.gens
    }

    pub fn inv(&self, l: u8) -> u8 {
        let g2 = 2 * self.genus as u8;
        if l < g2 {
            l + g2
        } else {
            l - g2
        }
    }

    pub fn letter_matrix(&self, l: u8) -> Isometry {
        let g2 = 2 * self.genus;
        let l = l as usize;
        if l < g2 {
            self.gens[l]
        } else {
            self.gens[l - g2].inverse()
        }
    }

    /// Abelianization coordinate touched by a letter, with its sign. The
    /// coordinates are ordered (a1 … ag, b1 … bg).
    pub fn letter_coordinate(&self, l: u8) -> (usize, i32) {
        let g = self.genus;
        let l = l as usize;
        let (gen, sign) = if l < 2 * g { (l, 1) } else { (l - 2 * g, -1) };
        let coord = if gen % 2 == 0 { gen / 2 } else { g + gen / 2 };
        (coord, sign)
    }

    pub fn evaluate(&self, w: &[u8]) -> Isometry {
        w.iter()
            .fold(Isometry::identity(), |m, &l| m.compose(&self.letter_matrix(l)))
    }

    pub fn relator_residual(&self) -> f64 {
        let m = self.evaluate(&self.relator).entries();
        let plus = (m[0] - 1.0).abs() + m[1].abs() + m[2].abs() + (m[3] - 1.0).abs();
        let minus = (m[0] + 1.0).abs() + m[1].abs() + m[2].abs() + (m[3] + 1.0).abs();
        plus.min(minus)
    }

    pub fn abelianize_word(&self, w: &[u8]) -> Vec<i32> {
        let mut v = vec![0; 2 * self.genus];
        for &l in w {
            let (c, s) = self.letter_coordinate(l);
            v[c] += s;
        }
        v
    }

    pub fn abelianize(&self, a: &GroupElement) -> Vec<i32> {
        a.abelian.clone()
    }

    pub fn inverse_word(&self, w: &[u8]) -> Word {
        w.iter().rev().map(|&l| self.inv(l)).collect()
    }

    pub fn free_reduce(&self, w: &[u8]) -> Word {
        let mut out: Word = Vec::with_capacity(w.len());
        for &l in w {
            if out.last() == Some(&self.inv(l)) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        out
    }

    /// Leftmost position carrying a Dehn replacement, with the longest match
    /// there. Pieces longer than half the relator are always replaced; pieces
    /// of exactly half only when the complement is lexicographically smaller.
    fn find_replacement(&self, w: &[u8]) -> Option<(usize, usize, Word)> {
        let len = self.relator.len();
        let half = len / 2;
        if w.len() < half {
            return None;
        }
        for p in 0..=w.len() - half {
            let rest = &w[p..];
            let mut best: Option<(usize, usize)> = None;
            for (ci, c) in self.cyclic.iter().enumerate() {
                let k = rest.iter().zip(c.iter()).take_while(|(x, y)| x == y).count();
                if k >= half && best.is_none_or(|(bk, _)| k > bk) {
                    best = Some((k, ci));
                }
            }
            if let Some((k, ci)) = best {
                let rep = self.inverse_word(&self.cyclic[ci][k..]);
                if k > half || rep.as_slice() < &w[p..p + k] {
                    return Some((p, k, rep));
                }
            }
        }
        None
    }

    pub fn reduce_word(&self, w: &[u8]) -> Word {
        let mut w = self.free_reduce(w);
        while let Some((p, k, rep)) = self.find_replacement(&w) {
            w.splice(p..p + k, rep);
            w = self.free_reduce(&w);
        }
        w
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            genus: self.genus as u8,
            word: Vec::new(),
            matrix: Isometry::identity(),
            abelian: vec![0; 2 * self.genus],
        }
    }

    pub fn reduce(&self, w: &[u8]) -> GroupElement {
        let word = self.reduce_word(w);
        GroupElement {
            genus: self.genus as u8,
            matrix: self.evaluate(w),
            abelian: self.abelianize_word(w),
            word,
        }
    }

    pub fn letter(&self, l: u8) -> GroupElement {
        self.reduce(&[l])
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let mut w = a.word.clone();
        w.extend_from_slice(&b.word);
        GroupElement {
            genus: self.genus as u8,
            word: self.reduce_word(&w),
            matrix: a.matrix.compose(&b.matrix),
            abelian: a.abelian.iter().zip(&b.abelian).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn inverse(&self, a: &GroupElement) -> GroupElement {
        GroupElement {
            genus: self.genus as u8,
            word: self.reduce_word(&self.inverse_word(&a.word)),
            matrix: a.matrix.inverse(),
            abelian: a.abelian.iter().map(|x| -x).collect(),
        }
    }

    /// Word-problem equality via Dehn reduction of a·b⁻¹, cross-checked
    /// against the matrix representation.
    pub fn equal(&self, a: &GroupElement, b: &GroupElement) -> Result<bool> {
        let mut w = a.word.clone();
        w.extend(self.inverse_word(&b.word));
        let by_word = self.reduce_word(&w).is_empty();
        let by_matrix = a.matrix.displacement(&b.matrix) < self.delta_min / 2.0;
        if by_word != by_matrix {
            return Err(Error::Consistency(format!(
                "word test says {by_word}, matrix test says {by_matrix} for {a} vs {b}"
            )));
        }
        Ok(by_word)
    }

    /// Fundamental 2-cycle of the relator in bar notation: signed terms
    /// [x | y] whose boundary cancels.
    pub fn fundamental_cycle(&self) -> Vec<(Word, Word, f64)> {
        let mut terms = Vec::with_capacity(self.relator.len());
        let mut prefix: Word = Vec::new();
        for &l in &self.relator {
            if (l as usize) < 2 * self.genus {
                terms.push((prefix.clone(), vec![l], 1.0));
                prefix.push(l);
            } else {
                prefix.push(l);
                terms.push((prefix.clone(), vec![self.inv(l)], -1.0));
            }
        }
        terms
    }

    /// Pairing of an inhomogeneous 2-cocycle with [`Presentation::fundamental_cycle`].
    pub fn pair_with_fundamental_cycle<F>(&self, f: F) -> f64
    where
        F: Fn(&GroupElement, &GroupElement) -> f64,
    {
        self.fundamental_cycle()
            .iter()
            .map(|(x, y, s)| s * f(&self.reduce(x), &self.reduce(y)))
            .sum()
    }
}

/// Half-plane isometry sending `u` to `i`.
pub fn recentering(u: &HPoint) -> Isometry {
    let z = u.half_plane_coords();
    let s = z.im.sqrt();
    Isometry::new_unchecked(1.0 / s, -z.re / s, 0.0, s)
}

/// Frame coordinates of g·u: disk coordinates after moving u to the origin.
pub fn frame_point(k: &Isometry, g: &Isometry, u: &HPoint) -> C64 {
    let m = k.compose(g).entries();
    let z = u.half_plane_coords();
    let den = C64::new(m[2], 0.0) * z + m[3];
    let w = (C64::new(m[0], 0.0) * z + m[1]) / den;
    let w = C64::new(w.re, z.im / den.norm_sqr());
    half_plane_to_disk(w)
}

fn disk_distance(a: C64, b: C64) -> f64 {
    let den = (C64::new(1.0, 0.0) - a.conj() * b).norm();
    2.0 * ((a - b).norm() / den).min(1.0).atanh()
}

/// Minimal pairwise orbit separation over freely reduced words of length ≤ 2
/// (these are all distinct group elements because the relator is longer).
pub fn separation_on_b2(p: &Presentation, u: &HPoint) -> Result<f64> {
    let n = p.alphabet_size() as u8;
    let mut words: Vec<Word> = vec![Vec::new()];
    for a in 0..n {
        words.push(vec![a]);
    }
    for a in 0..n {
        for b in 0..n {
            if b != p.inv(a) {
                words.push(vec![a, b]);
            }
        }
    }
    let k = recentering(u);
    let pts: Vec<C64> = words
        .iter()
        .map(|w| frame_point(&k, &p.evaluate(w), u))
        .collect();
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.min(disk_distance(pts[i], pts[j]));
        }
    }
    if !best.is_finite() {
        return Err(Error::Degenerate("orbit separation is not finite".into()));
    }
    Ok(best)
}

/// Sentinel in neighbour tables for "outside the ball".
pub const OUTSIDE: u32 = u32::MAX;

/// Word-length ball B_R, enumerated breadth first. Elements carry their
/// ShortLex-least spelling.
#[derive(Clone, Debug)]
pub struct Ball {
    presentation: Presentation,
    radius: usize,
    base: HPoint,
    recenter: Isometry,
    elements: Vec<GroupElement>,
    points: Vec<C64>,
    inverse: Vec<u32>,
    left: Vec<u32>,
    buckets: HashMap<Vec<i32>, Vec<u32>>,
    sphere_starts: Vec<usize>,
    delta_min: f64,
}

#[derive(Serialize)]
struct BallEntry<'a> {
    index: usize,
    word: String,
    abelian: &'a [i32],
    orbit_point: [f64; 2],
}

impl Ball {
    pub fn new(p: &Presentation, radius: usize, u: &HPoint) -> Result<Ball> {
        let delta = separation_on_b2(p, u)?;
        if delta <= 1e-3 {
            return Err(Error::Freeness(format!(
                "orbit separation {delta:.3e} on B2 is too small for this base point"
            )));
        }
        let mut ball = Ball {
            presentation: p.clone(),
            radius,
            base: *u,
            recenter: recentering(u),
            elements: vec![p.identity()],
            points: Vec::new(),
            inverse: Vec::new(),
            left: Vec::new(),
            buckets: HashMap::new(),
            sphere_starts: vec![0, 1],
            delta_min: delta,
        };
        ball.points.push(frame_point(&ball.recenter, &Isometry::identity(), u));
        ball.buckets.insert(vec![0; 2 * p.genus], vec![0]);

        let n_letters = p.alphabet_size() as u8;
        let mut frontier = 0..1;
        for _ in 1..=radius {
            let start = ball.elements.len();
            for idx in frontier.clone() {
                for l in 0..n_letters {
                    let parent = &ball.elements[idx];
                    if parent.word.last() == Some(&p.inv(l)) {
                        continue;
                    }
                    let matrix = parent.matrix.compose(&p.letter_matrix(l));
                    let mut abelian = parent.abelian.clone();
                    let (c, s) = p.letter_coordinate(l);
                    abelian[c] += s;
                    if ball.find(&abelian, &matrix).is_some() {
                        continue;
                    }
                    let mut word = parent.word.clone();
                    word.push(l);
                    let new_index = ball.elements.len() as u32;
                    ball.points.push(frame_point(&ball.recenter, &matrix, u));
                    ball.buckets.entry(abelian.clone()).or_default().push(new_index);
                    ball.elements.push(GroupElement {
                        genus: p.genus as u8,
                        word,
                        matrix,
                        abelian,
                    });
                }
            }
            frontier = start..ball.elements.len();
            ball.sphere_starts.push(ball.elements.len());
        }
        ball.sphere_starts.truncate(radius + 2);

        let n = ball.elements.len();
        let inverse: Vec<u32> = par::map_range(n, |i| {
            let e = &ball.elements[i];
            let ab: Vec<i32> = e.abelian.iter().map(|x| -x).collect();
            ball.find(&ab, &e.matrix.inverse()).map_or(OUTSIDE, |j| j as u32)
        });
        if inverse.iter().any(|&j| j == OUTSIDE) {
            return Err(Error::Consistency("ball is not closed under inversion".into()));
        }
        ball.inverse = inverse;
        let nl = p.alphabet_size();
        let left: Vec<Vec<u32>> = par::map_range(n, |i| {
            (0..nl as u8)
                .map(|l| {
                    let e = &ball.elements[i];
                    let m = p.letter_matrix(l).compose(&e.matrix);
                    let mut ab = e.abelian.clone();
                    let (c, s) = p.letter_coordinate(l);
                    ab[c] += s;
                    ball.find(&ab, &m).map_or(OUTSIDE, |j| j as u32)
                })
                .collect()
        });
        ball.left = left.into_iter().flatten().collect();
        ball.check_separation()?;
        Ok(ball)
    }

    /// Index of the element with this abelian image and matrix, if present.
    pub fn find(&self, abelian: &[i32], matrix: &Isometry) -> Option<usize> {
        let bucket = self.buckets.get(abelian)?;
        let q = frame_point(&self.recenter, matrix, &self.base);
        bucket
            .iter()
            .map(|&j| j as usize)
            .find(|&j| disk_distance(self.points[j], q) < self.delta_min / 2.0)
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.find(&g.abelian, &g.matrix)
    }

    /// Index of the element spelled by `word`.
    pub fn index_of_word(&self, word: &[u8]) -> Option<usize> {
        let p = &self.presentation;
        self.find(&p.abelianize_word(word), &p.evaluate(word))
    }

    /// Index of γ_i·γ_j, if it lies in the ball.
    pub fn product_index(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (&self.elements[i], &self.elements[j]);
        let m = a.matrix.compose(&b.matrix);
        let ab: Vec<i32> = a.abelian.iter().zip(&b.abelian).map(|(x, y)| x + y).collect();
        self.find(&ab, &m)
    }

    fn check_separation(&mut self) -> Result<()> {
        let n = self.points.len();
        let mut order: Vec<(f64, usize)> = (0..n)
            .map(|i| (2.0 * self.points[i].norm().min(1.0 - 1e-16).atanh(), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let window = self.delta_min;
        let mins: Vec<f64> = par::map_range(n, |a| {
            let mut best = f64::INFINITY;
            let (ra, ia) = order[a];
            for &(rb, ib) in &order[a + 1..] {
                if rb - ra > window {
                    break;
                }
                best = best.min(disk_distance(self.points[ia], self.points[ib]));
            }
            best
        });
        let found = mins.into_iter().fold(f64::INFINITY, f64::min);
        let sep = found.min(self.delta_min);
        if sep <= 1e-3 {
            return Err(Error::Freeness(format!(
                "two orbit points are only {sep:.3e} apart"
            )));
        }
        self.delta_min = sep;
        Ok(())
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }
    pub fn radius(&self) -> usize {
        self.radius
    }
    pub fn base_point(&self) -> &HPoint {
        &self.base
    }
    pub fn len(&self) -> usize {
        self.elements.len()
    }
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
    pub fn element(&self, i: usize) -> &GroupElement {
        &self.elements[i]
    }
    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }
    pub fn word_length(&self, i: usize) -> usize {
        self.elements[i].word.len()
    }
    /// Orbit point γ_i·u in the disk frame centred at u.
    pub fn frame_point(&self, i: usize) -> C64 {
        self.points[i]
    }
    /// Orbit point γ_i⁻¹·u in the disk frame centred at u.
    pub fn inverse_frame_point(&self, i: usize) -> C64 {
        self.points[self.inverse[i] as usize]
    }
    /// Orbit point γ_i·u in plain disk coordinates.
    pub fn orbit_point(&self, i: usize) -> C64 {
        let m = self.elements[i].matrix;
        match hypgeo::mobius_apply(&m, &self.base) {
            Ok(p) => p.disk_coords(),
            Err(_) => C64::new(f64::NAN, f64::NAN),
        }
    }
    pub fn inverse_index(&self, i: usize) -> usize {
        self.inverse[i] as usize
    }
    /// Index of s·γ_i for letter s, or [`OUTSIDE`].
    pub fn left_neighbor(&self, i: usize, letter: u8) -> u32 {
        self.left[i * self.presentation.alphabet_size() + letter as usize]
    }
    pub fn delta_min(&self) -> f64 {
        self.delta_min
    }
    /// Number of elements of word length ≤ r.
    pub fn count_within(&self, r: usize) -> usize {
        self.sphere_starts[(r + 1).min(self.sphere_starts.len() - 1)]
    }
    /// Indices with word length ≤ R − margin (a prefix of the BFS order).
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        if margin > self.radius {
            return Vec::new();
        }
        (0..self.count_within(self.radius - margin)).collect()
    }
    pub fn interior_mask(&self, margin: usize) -> Vec<bool> {
        let k = if margin > self.radius { 0 } else { self.count_within(self.radius - margin) };
        (0..self.len()).map(|i| i < k).collect()
    }

    pub fn export_json(&self) -> Result<String> {
        let g = self.presentation.genus;
        let rows: Vec<BallEntry> = (0..self.len())
            .map(|i| {
                let p = self.orbit_point(i);
                BallEntry {
                    index: i,
                    word: format_word(g, &self.elements[i].word),
                    abelian: &self.elements[i].abelian,
                    orbit_point: [p.re, p.im],
                }
            })
            .collect();
        Ok(serde_json::to_string_pretty(&rows)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genus_two_alphabet_and_relator() {
        let p = Presentation::standard(2).unwrap();
        assert_eq!(p.alphabet_size(), 8);
        assert!(p.relator_residual() < 1e-9);
        assert_eq!(format_word(2, p.relator()), "a1b1A1B1a2b2A2B2");
        let p3 = Presentation::standard(3).unwrap();
        assert_eq!(p3.alphabet_size(), 12);
        assert_eq!(p3.relator().len(), 12);
        assert!(p3.relator_residual() < 1e-9);
    }

    #[test]
    fn genus_one_rejected() {
        assert!(Presentation::standard(1).is_err());
    }

    #[test]
    fn perturbed_generator_fails_relator_check() {
        let p = Presentation::standard(2).unwrap();
        let mut gens = p.generator_matrices().to_vec();
        let [a, b, c, d] = gens[0].entries();
        let eps = 1e-6;
        // shear that keeps the determinant at one
        gens[0] = Isometry::new(a + eps * c, b + eps * d, c, d).unwrap();
        assert!(matches!(
            Presentation::from_generators(2, gens),
            Err(Error::Presentation(_))
        ));
    }

    #[test]
    fn reduction_examples() {
        let p = Presentation::standard(2).unwrap();
        assert!(p.reduce_word(&[0, 4]).is_empty());
        assert!(p.reduce_word(p.relator()).is_empty());
        let inv = p.inverse_word(p.relator());
        assert!(p.reduce_word(&inv).is_empty());
        // five letters of the relator collapse to the inverse of the other three
        let w = p.relator()[..5].to_vec();
        let r = p.reduce_word(&w);
        assert_eq!(r.len(), 3);
        assert_eq!(r, p.inverse_word(&p.relator()[5..]));
    }

    #[test]
    fn word_round_trip() {
        let w = parse_word(2, "a1B2A1b2").unwrap();
        assert_eq!(format_word(2, &w), "a1B2A1b2");
        assert!(parse_word(2, "c1").is_err());
        assert!(parse_word(2, "a3").is_err());
        assert_eq!(parse_word(2, "e").unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn small_balls() {
        let p = Presentation::standard(2).unwrap();
        let u = HPoint::origin();
        assert_eq!(Ball::new(&p, 0, &u).unwrap().len(), 1);
        assert_eq!(Ball::new(&p, 1, &u).unwrap().len(), 9);
        let b2 = Ball::new(&p, 2, &u).unwrap();
        assert_eq!(b2.len(), 65);
        assert!(b2.element(0).is_identity());
        assert_eq!(b2.interior(1).len(), 9);
        assert!(b2.delta_min() > 1e-3);
    }

    #[test]
    fn fundamental_cycle_is_a_cycle() {
        // boundary of [x|y] is [y] − [xy] + [x]; collect with signs
        let p = Presentation::standard(2).unwrap();
        let mut acc: HashMap<Word, f64> = HashMap::new();
        for (x, y, s) in p.fundamental_cycle() {
            let mut xy = x.clone();
            xy.extend_from_slice(&y);
            for (w, c) in [(y, s), (p.reduce_word(&xy), -s), (p.reduce_word(&x), s)] {
                *acc.entry(p.reduce_word(&w)).or_default() += c;
            }
        }
        assert!(acc.values().all(|v| v.abs() < 1e-12), "{acc:?}");
    }
}
