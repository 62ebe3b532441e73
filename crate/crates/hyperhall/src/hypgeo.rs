//! Hyperbolic plane in the upper half-plane and Poincaré disk models
//! (curvature −1).

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Points closer than this to the ideal boundary are rejected.
pub const BOUNDARY_EPS: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    HalfPlane,
    Disk,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HPoint {
    model: Model,
    z: C64,
}

impl HPoint {
    pub fn half_plane(z: C64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate {z}")));
        }
        if z.im < BOUNDARY_EPS {
            return Err(Error::Domain(format!("{z} is not in the upper half-plane")));
        }
        Ok(HPoint { model: Model::HalfPlane, z })
    }

    pub fn disk(z: C64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate {z}")));
        }
        if 1.0 - z.norm() < BOUNDARY_EPS {
            return Err(Error::Domain(format!("{z} is not in the open unit disk")));
        }
        Ok(HPoint { model: Model::Disk, z })
    }

    /// The point `i` of the half-plane, i.e. the disk origin.
    pub fn origin() -> Self {
        HPoint { model: Model::HalfPlane, z: I }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn coords(&self) -> C64 {
        self.z
    }

    pub fn half_plane_coords(&self) -> C64 {
        match self.model {
            Model::HalfPlane => self.z,
            Model::Disk => disk_to_half_plane(self.z),
        }
    }

    pub fn disk_coords(&self) -> C64 {
        match self.model {
            Model::Disk => self.z,
            Model::HalfPlane => half_plane_to_disk(self.z),
        }
    }

    pub fn to_model(&self, model: Model) -> Result<HPoint> {
        match model {
            Model::HalfPlane => HPoint::half_plane(self.half_plane_coords()),
            Model::Disk => HPoint::disk(self.disk_coords()),
        }
    }
}

/// Cayley map ζ ↦ (ζ − i)/(ζ + i).
pub fn half_plane_to_disk(zeta: C64) -> C64 {
    (zeta - I) / (zeta + I)
}

/// Inverse Cayley map, arranged so the imaginary part keeps full relative
/// precision near the boundary circle.
pub fn disk_to_half_plane(z: C64) -> C64 {
    let one_minus = C64::new(1.0 - z.re, -z.im);
    let den = one_minus.norm_sqr();
    let (a, b) = (z.re, z.im);
    let im = ((1.0 - a) * (1.0 + a) - b * b) / den;
    C64::new(-2.0 * b / den, im)
}

/// Orientation preserving isometry of the half-plane: real 2×2 matrix of
/// determinant one acting by (az + b)/(cz + d).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry {
    m: [f64; 4],
}

impl Isometry {
    pub fn identity() -> Self {
        Isometry { m: [1.0, 0.0, 0.0, 1.0] }
    }

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let iso = Isometry { m: [a, b, c, d] };
        iso.check()?;
        Ok(iso)
    }

    /// Skips the determinant check. Used for fault injection and by
    /// [`mobius_apply`] tests; everything else should go through [`Isometry::new`].
    pub fn new_unchecked(a: f64, b: f64, c: f64, d: f64) -> Self {
        Isometry { m: [a, b, c, d] }
    }

    pub fn entries(&self) -> [f64; 4] {
        self.m
    }

    pub fn det(&self) -> f64 {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    /// Largest entry magnitude; determinant rounding scales with its square.
    pub fn scale(&self) -> f64 {
        self.m.iter().fold(1.0f64, |s, x| s.max(x.abs()))
    }

    pub fn det_error(&self) -> f64 {
        (self.det() - 1.0).abs() / (self.scale() * self.scale())
    }

    fn check(&self) -> Result<()> {
        if self.m.iter().any(|x| !x.is_finite()) || self.det_error() > 1e-12 {
            return Err(Error::InvalidIsometry(self.det()));
        }
        Ok(())
    }

    pub fn compose(&self, other: &Isometry) -> Isometry {
        let [a, b, c, d] = self.m;
        let [p, q, r, s] = other.m;
        // no determinant renormalization: for long words det itself carries
        // rounding of order eps·|M|², far above the product's own error
        Isometry {
            m: [a * p + b * r, a * q + b * s, c * p + d * r, c * q + d * s],
        }
    }

    pub fn inverse(&self) -> Isometry {
        let [a, b, c, d] = self.m;
        Isometry { m: [d, -b, -c, a] }
    }

    /// Build from a disk automorphism z ↦ (αz + β)/(β̄z + ᾱ), |α|² − |β|² = 1.
    pub fn from_su11(alpha: C64, beta: C64) -> Result<Self> {
        // conjugate by the Cayley matrix C = [[1, −i], [1, i]]
        let c = [C64::new(1.0, 0.0), -I, C64::new(1.0, 0.0), I];
        let cinv = [I / (2.0 * I), I / (2.0 * I), -1.0 / (2.0 * I), 1.0 / (2.0 * I)];
        let m = [alpha, beta, beta.conj(), alpha.conj()];
        let mc = mul2(&m, &c);
        let h = mul2(&cinv, &mc);
        let im = h.iter().fold(0.0f64, |s, x| s.max(x.im.abs()));
        if im > 1e-9 * h.iter().fold(1.0f64, |s, x| s.max(x.norm())) {
            return Err(Error::InvalidIsometry(f64::NAN));
        }
        let mut iso = Isometry { m: [h[0].re, h[1].re, h[2].re, h[3].re] };
        let det = iso.det();
        if det > 0.0 {
            let k = 1.0 / det.sqrt();
            iso.m.iter_mut().for_each(|x| *x *= k);
        }
        iso.check()?;
        Ok(iso)
    }

    /// Half-plane matrix distance proxy: hyperbolic displacement of `i`.
    pub fn displacement(&self, other: &Isometry) -> f64 {
        let o = HPoint::origin();
        let a = self.apply_half_plane(o.z);
        let b = other.apply_half_plane(o.z);
        half_plane_distance(a, b)
    }

    fn apply_half_plane(&self, z: C64) -> C64 {
        let [a, b, c, d] = self.m;
        let den = c * z + d;
        let num = a * z + b;
        let w = num / den;
        // Im(gz) = Im z / |cz + d|² exactly for det 1
        C64::new(w.re, z.im / den.norm_sqr())
    }
}

fn mul2(x: &[C64; 4], y: &[C64; 4]) -> [C64; 4] {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

/// Möbius action. Disk points are carried through the Cayley map and returned
/// in the disk model.
pub fn mobius_apply(g: &Isometry, z: &HPoint) -> Result<HPoint> {
    if g.m.iter().any(|x| !x.is_finite()) || g.det_error() > 1e-12 {
        return Err(Error::InvalidIsometry(g.det()));
    }
    let w = g.apply_half_plane(z.half_plane_coords());
    if !(w.im.is_finite() && w.re.is_finite()) || w.im < BOUNDARY_EPS {
        return Err(Error::Degenerate(format!("image {w} reached the boundary")));
    }
    match z.model {
        Model::HalfPlane => Ok(HPoint { model: Model::HalfPlane, z: w }),
        Model::Disk => {
            let d = half_plane_to_disk(w);
            if 1.0 - d.norm() < BOUNDARY_EPS {
                return Err(Error::Degenerate(format!("image {d} reached the boundary")));
            }
            Ok(HPoint { model: Model::Disk, z: d })
        }
    }
}

fn half_plane_distance(z: C64, w: C64) -> f64 {
    2.0 * ((z - w).norm() / (2.0 * (z.im * w.im).sqrt())).asinh()
}

fn disk_distance(z: C64, w: C64) -> f64 {
    let den = (C64::new(1.0, 0.0) - z.conj() * w).norm();
    let r = ((z - w).norm() / den).min(1.0);
    2.0 * r.atanh()
}

pub fn hyp_distance(z: &HPoint, w: &HPoint) -> Result<f64> {
    for p in [z, w] {
        let bad = match p.model {
            Model::HalfPlane => p.z.im < BOUNDARY_EPS,
            Model::Disk => 1.0 - p.z.norm() < BOUNDARY_EPS,
        };
        if bad {
            return Err(Error::Degenerate(format!("{} lies on the boundary", p.z)));
        }
    }
    if z.model == Model::Disk && w.model == Model::Disk {
        Ok(disk_distance(z.z, w.z))
    } else {
        Ok(half_plane_distance(z.half_plane_coords(), w.half_plane_coords()))
    }
}

/// Disk automorphism sending `p` to the origin.
pub fn recenter(p: C64, x: C64) -> C64 {
    (x - p) / (C64::new(1.0, 0.0) - p.conj() * x)
}

/// Oriented angle at the origin from direction `q` to direction `r`, in (−π, π].
pub fn angle_at_origin(q: C64, r: C64) -> f64 {
    (r * q.conj()).arg()
}

/// Signed area from the three oriented vertex angles of a triangle, each the
/// angle at that vertex from the next vertex to the previous one.
pub fn area_from_angles(a0: f64, a1: f64, a2: f64) -> f64 {
    let s = a0.sin();
    if s == 0.0 {
        return 0.0;
    }
    let mag = PI - (a0.abs() + a1.abs() + a2.abs());
    if mag <= 0.0 {
        return 0.0;
    }
    mag.copysign(s)
}

/// Signed area of the geodesic triangle (v, w, z): angle defect for the
/// magnitude, orientation of the recentred triangle for the sign.
pub fn signed_triangle_area(v: &HPoint, w: &HPoint, z: &HPoint) -> f64 {
    let (v, w, z) = (v.disk_coords(), w.disk_coords(), z.disk_coords());
    if coincide(v, w) || coincide(w, z) || coincide(z, v) {
        return 0.0;
    }
    let a0 = angle_at_origin(recenter(v, w), recenter(v, z));
    let a1 = angle_at_origin(recenter(w, z), recenter(w, v));
    let a2 = angle_at_origin(recenter(z, v), recenter(z, w));
    area_from_angles(a0, a1, a2)
}

fn coincide(a: C64, b: C64) -> bool {
    disk_distance(a, b) < 1e-13
}

/// ϖ(v, w, z) = exp(iθ · area).
pub fn holonomy(v: &HPoint, w: &HPoint, z: &HPoint, theta: f64) -> C64 {
    C64::from_polar(1.0, theta * signed_triangle_area(v, w, z))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transport {
    pub value: C64,
    /// Set when the base argument sits on the principal branch cut.
    pub branch_warning: bool,
}

/// τ(z, w) = exp(iθ · Arg[(z − w̄)/(w − z̄)]) on the principal branch.
pub fn parallel_transport(z: &HPoint, w: &HPoint, theta: f64) -> Transport {
    let (z, w) = (z.half_plane_coords(), w.half_plane_coords());
    let base = (z - w.conj()) / (w - z.conj());
    let arg = base.arg();
    Transport {
        value: C64::from_polar(1.0, theta * arg),
        branch_warning: PI - arg.abs() < 1e-12,
    }
}

/// Discrete Landau levels (2k+1)θ − k(k+1), k < θ − 1/2, and the bottom of the
/// continuous spectrum 1/4 + θ².
pub fn landau_levels(theta: f64) -> Result<(Vec<f64>, f64)> {
    if !theta.is_finite() || theta <= 0.0 {
        return Err(Error::Config(format!("landau levels need θ > 0, got {theta}")));
    }
    let mut levels = Vec::new();
    let mut k = 0.0f64;
    while k < theta - 0.5 {
        levels.push((2.0 * k + 1.0) * theta - k * (k + 1.0));
        k += 1.0;
    }
    Ok((levels, 0.25 + theta * theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(x: f64, y: f64) -> HPoint {
        HPoint::half_plane(C64::new(x, y)).unwrap()
    }

    #[test]
    fn mobius_examples() {
        let z = hp(0.3, 0.4);
        let w = mobius_apply(&Isometry::identity(), &z).unwrap();
        assert!((w.coords() - z.coords()).norm() < 1e-15);
        let t = Isometry::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let w = mobius_apply(&t, &HPoint::origin()).unwrap();
        assert!((w.coords() - C64::new(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn mobius_rejects_bad_determinant() {
        let g = Isometry::new_unchecked(2.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            mobius_apply(&g, &HPoint::origin()),
            Err(Error::InvalidIsometry(_))
        ));
        assert!(Isometry::new(2.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(hyp_distance(&hp(0.0, 1.0), &hp(0.0, 1.0)).unwrap(), 0.0);
        let d = hyp_distance(&hp(0.0, 1.0), &hp(0.0, 2.0)).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn cayley_round_trip_near_boundary() {
        let z = C64::from_polar(1.0 - 1e-9, 0.7);
        let back = half_plane_to_disk(disk_to_half_plane(z));
        assert!((back - z).norm() < 1e-12);
    }

    #[test]
    fn degenerate_triangles() {
        let a = hp(0.1, 1.0);
        let b = hp(-0.5, 2.0);
        assert_eq!(signed_triangle_area(&a, &a, &b), 0.0);
        assert_eq!(signed_triangle_area(&hp(0.0, 1.0), &hp(0.0, 2.0), &hp(0.0, 5.0)), 0.0);
    }

    #[test]
    fn landau_examples() {
        let (l, e) = landau_levels(2.0).unwrap();
        assert_eq!(l, vec![2.0, 4.0]);
        assert_eq!(e, 4.25);
        let (l, e) = landau_levels(0.4).unwrap();
        assert!(l.is_empty());
        assert!((e - 0.41).abs() < 1e-15);
        let (l, e) = landau_levels(3.5).unwrap();
        assert_eq!(l, vec![3.5, 8.5, 11.5]);
        assert_eq!(e, 12.5);
        assert!(landau_levels(0.0).is_err());
    }

    #[test]
    fn transport_trivial_cases() {
        let z = hp(0.2, 0.7);
        assert_eq!(parallel_transport(&z, &z, 1.3).value, C64::new(1.0, 0.0));
        assert_eq!(parallel_transport(&z, &hp(3.0, 0.1), 0.0).value, C64::new(1.0, 0.0));
    }
}
