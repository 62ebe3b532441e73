//! Area 2-cocycle c(γ₁, γ₂) = Area(u, γ₁u, γ₁γ₂u) and the multiplier
//! σ = exp(iθc).

use num_complex::Complex64 as C64;

use crate::hypgeo::{angle_at_origin, area_from_angles, HPoint, Isometry};
use crate::surface_group::{frame_point, recentering, Ball, GroupElement};

#[derive(Clone, Copy, Debug)]
pub struct MagneticData {
    theta: f64,
    base: HPoint,
    recenter: Isometry,
}

impl MagneticData {
    pub fn new(theta: f64, base: HPoint) -> Self {
        MagneticData { theta, base, recenter: recentering(&base) }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn base_point(&self) -> &HPoint {
        &self.base
    }

    fn point(&self, g: &Isometry) -> C64 {
        frame_point(&self.recenter, g, &self.base)
    }

    /// Signed area of (u, γ₁u, γ₁γ₂u). Each vertex angle is measured at u after
    /// moving that vertex back to u with the group action, which keeps full
    /// precision for vertices near the ideal boundary.
    pub fn area_cocycle(&self, g1: &GroupElement, g2: &GroupElement) -> f64 {
        if g1.is_identity() || g2.is_identity() {
            return 0.0;
        }
        let (m1, m2) = (g1.matrix(), g2.matrix());
        let m12 = m1.compose(m2);
        let p1 = self.point(m1);
        let p12 = self.point(&m12);
        // γ₁γ₂ may be trivial without its word being reduced to empty; the
        // product then misses the identity by rounding of order eps·|m1||m2|
        if p12.norm() < 1e-13 * m1.scale() * m2.scale() {
            return 0.0;
        }
        let a0 = angle_at_origin(p1, p12);
        let a1 = angle_at_origin(self.point(m2), self.point(&m1.inverse()));
        let a2 = angle_at_origin(self.point(&m12.inverse()), self.point(&m2.inverse()));
        area_from_angles(a0, a1, a2)
    }

    pub fn multiplier(&self, g1: &GroupElement, g2: &GroupElement) -> C64 {
        C64::from_polar(1.0, self.theta * self.area_cocycle(g1, g2))
    }

    pub fn phase(&self, area: f64) -> C64 {
        C64::from_polar(1.0, self.theta * area)
    }
}

/// Area cocycle for ball indices i, j with k the index of γ_iγ_j, read off the
/// precomputed orbit points of the ball. The ball's base point is used.
pub fn ball_cocycle(ball: &Ball, i: usize, j: usize, k: usize) -> f64 {
    if i == 0 || j == 0 || k == 0 {
        return 0.0;
    }
    let a0 = angle_at_origin(ball.frame_point(i), ball.frame_point(k));
    let a1 = angle_at_origin(ball.frame_point(j), ball.inverse_frame_point(i));
    let a2 = angle_at_origin(ball.inverse_frame_point(k), ball.inverse_frame_point(j));
    area_from_angles(a0, a1, a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypgeo::{mobius_apply, signed_triangle_area};
    use crate::surface_group::Presentation;

    #[test]
    fn degenerate_cases_vanish() {
        let p = Presentation::standard(2).unwrap();
        let m = MagneticData::new(0.3, HPoint::origin());
        let e = p.identity();
        let g = p.reduce(&[0, 3, 5]);
        assert_eq!(m.area_cocycle(&e, &g), 0.0);
        assert_eq!(m.area_cocycle(&g, &e), 0.0);
        assert_eq!(m.area_cocycle(&g, &p.inverse(&g)), 0.0);
        assert_eq!(m.multiplier(&e, &g), C64::new(1.0, 0.0));
    }

    #[test]
    fn matches_triangle_area() {
        let p = Presentation::standard(2).unwrap();
        let u = HPoint::half_plane(C64::new(0.1, 1.2)).unwrap();
        let m = MagneticData::new(0.3, u);
        let g1 = p.reduce(&[0, 3]);
        let g2 = p.reduce(&[5, 6, 1]);
        let v1 = mobius_apply(g1.matrix(), &u).unwrap();
        let v2 = mobius_apply(&g1.matrix().compose(g2.matrix()), &u).unwrap();
        let direct = signed_triangle_area(&u, &v1, &v2);
        assert!((m.area_cocycle(&g1, &g2) - direct).abs() < 1e-10);
    }
}
