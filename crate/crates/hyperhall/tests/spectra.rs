use std::sync::OnceLock;

use hyperhall::hamiltonian::{
    apply_disorder, build_harper, chebyshev_moments, chebyshev_projection, default_gap_min, eigensolve, eigenvalues,
    find_gaps, ids_curve, kpm_ids, lanczos_window, spectral_projection, DisorderModel, SpectralData,
};
use hyperhall::hypgeo::HPoint;
use hyperhall::magnetic::MagneticData;
use hyperhall::operator::{TruncatedOperator, TruncatedSpace};
use hyperhall::surface_group::{Ball, Presentation};
use hyperhall::C64;
use proptest::prelude::*;

fn base() -> HPoint {
    HPoint::half_plane(C64::new(0.0, 1.0)).unwrap()
}

fn space(r: usize, margin: usize) -> TruncatedSpace {
    static B: OnceLock<Vec<Ball>> = OnceLock::new();
    let p = Presentation::standard(2).unwrap();
    let balls = B.get_or_init(|| (0..=3).map(|r| Ball::new(&p, r, &base()).unwrap()).collect());
    TruncatedSpace::new(balls[r].clone(), margin)
}

fn harper(s: &TruncatedSpace, th: f64) -> TruncatedOperator {
    build_harper(s, &MagneticData::new(th, base())).unwrap()
}

/// Solved R = 3 ball at θ = 0.3.
fn solved() -> &'static (TruncatedSpace, TruncatedOperator, SpectralData) {
    static S: OnceLock<(TruncatedSpace, TruncatedOperator, SpectralData)> = OnceLock::new();
    S.get_or_init(|| {
        let s = space(3, 1);
        let h = harper(&s, 0.3);
        let sd = eigensolve(&h).unwrap();
        (s, h, sd)
    })
}

#[test]
fn star_graph_spectrum() {
    let ev = eigenvalues(&harper(&space(1, 0), 0.0)).unwrap();
    let r8 = 8f64.sqrt();
    let want = [-r8, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, r8];
    assert_eq!(ev.len(), 9);
    for (a, b) in ev.iter().zip(want) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn single_site_spectrum_is_the_potential() {
    let s = space(0, 0);
    let d = DisorderModel::iid(0.7, 11);
    let h = apply_disorder(&harper(&s, 0.4), &d, &s);
    let ev = eigenvalues(&h).unwrap();
    assert_eq!(ev.len(), 1);
    assert!((ev[0] - d.potential(&s)[0]).abs() < 1e-15);
}

#[test]
fn harper_structure() {
    let s = space(3, 1);
    let c = harper(&s, 0.77);
    let c = c.as_sparse().unwrap();
    assert!(c.hermiticity_residual() < 1e-12);
    for i in 0..c.dim() {
        let row: Vec<_> = c.row(i).collect();
        assert!(row.len() <= 8);
        assert!(row.iter().all(|(_, v)| (v.norm() - 1.0).abs() < 1e-14));
    }
    let h0 = harper(&s, 0.0);
    let a = h0.as_sparse().unwrap();
    assert!(a.max_row_sum() <= 8.0);
    assert!((0..a.dim()).all(|i| a.row(i).all(|(_, v)| v == C64::new(1.0, 0.0))));
}

#[test]
fn untwisted_spectrum_is_symmetric() {
    let ev = eigenvalues(&harper(&space(3, 1), 0.0)).unwrap();
    let n = ev.len();
    for k in 0..n {
        assert!((ev[k] + ev[n - 1 - k]).abs() < 1e-9);
    }
    assert!(ev[n - 1] <= 8.0 + 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trace_identity(th in 0.05f64..3.0, w in 0.0f64..2.0, seed in 0u64..1000) {
        let s = space(2, 1);
        let h = apply_disorder(&harper(&s, th), &DisorderModel::iid(w, seed), &s);
        let ev = eigenvalues(&h).unwrap();
        prop_assert!((ev.iter().sum::<f64>() - h.trace().re).abs() < 1e-8);
    }

    #[test]
    fn random_flux_is_hermitian(th in -3.0f64..3.0) {
        prop_assert!(harper(&space(2, 1), th).hermiticity_residual() < 1e-12);
    }
}

#[test]
fn disorder_reproducibility() {
    let s = space(2, 1);
    let h = harper(&s, 0.3);
    assert_eq!(apply_disorder(&h, &DisorderModel::none(), &s).to_dense(), h.to_dense());
    assert_eq!(apply_disorder(&h, &DisorderModel::iid(0.0, 5), &s).to_dense(), h.to_dense());
    let a = DisorderModel::iid(1.5, 7).potential(&s);
    let b = DisorderModel::iid(1.5, 7).potential(&s);
    let c = DisorderModel::iid(1.5, 8).potential(&s);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.iter().all(|v| v.abs() <= 1.5));
    // keyed by word: the same element gets the same value in a bigger ball
    let big = DisorderModel::iid(1.5, 7).potential(&space(3, 1));
    assert_eq!(&big[..a.len()], &a[..]);
    let ap = DisorderModel::almost_periodic(0.5, vec![0.1, 0.2, 0.3, 0.4]);
    let v = ap.potential(&s);
    assert_eq!(v[0], 0.5);
    assert!(v.iter().all(|x| x.abs() <= 0.5));
}

#[test]
fn gaps_are_between_eigenvalues() {
    let (_, _, sd) = solved();
    let gaps = find_gaps(sd, default_gap_min(sd));
    assert!(!gaps.is_empty());
    for g in &gaps {
        assert!(g.b > g.a);
        assert!(!sd.eigenvalues.iter().any(|&l| l > g.a && l < g.b));
    }
}

#[test]
fn projection_is_idempotent() {
    let (_, _, sd) = solved();
    let gm = default_gap_min(sd);
    let gaps = find_gaps(sd, gm);
    let widest = gaps.iter().max_by(|a, b| a.width().total_cmp(&b.width())).unwrap();
    let e = widest.midpoint();
    let p = spectral_projection(sd, e, gm).unwrap();
    assert!(p.warnings.is_empty());
    let rank = sd.eigenvalues.partition_point(|&l| l <= e);
    assert_eq!(p.rank, Some(rank));
    let op = p.projector.to_operator();
    assert!(op.matmul(&op).max_abs_diff(&op) < 1e-9);
    assert!(op.hermiticity_residual() < 1e-9);
    assert!((op.trace().re - rank as f64).abs() < 1e-9);
}

#[test]
fn projection_extremes() {
    let (_, _, sd) = solved();
    let n = sd.eigenvalues.len();
    let below = spectral_projection(sd, -100.0, 1e-3).unwrap().projector.to_operator();
    assert!(below.to_dense().norm_max() == 0.0);
    let above = spectral_projection(sd, 100.0, 1e-3).unwrap().projector.to_operator();
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((above.entry(i, j) - C64::new(want, 0.0)).norm() < 1e-9);
        }
    }
    let on = sd.eigenvalues[n / 2];
    assert!(!spectral_projection(sd, on, 1e-3).unwrap().warnings.is_empty());
}

#[test]
fn counting_function_is_monotone() {
    let (s, _, sd) = solved();
    let es: Vec<f64> = (0..200).map(|k| -9.0 + 18.0 * k as f64 / 199.0).collect();
    let n = ids_curve(sd, &s.interior(), &es).unwrap();
    assert!(n.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    assert!(n[0] == 0.0 && (n[199] - 1.0).abs() < 1e-12);
}

#[test]
fn chebyshev_projection_matches_dense() {
    let (s, h, sd) = solved();
    let gm = default_gap_min(sd);
    let gaps = find_gaps(sd, gm);
    let widest = gaps.iter().max_by(|a, b| a.width().total_cmp(&b.width())).unwrap();
    let e = widest.midpoint();
    let dense = spectral_projection(sd, e, gm).unwrap();
    let poly = chebyshev_projection(h, e, 1200).unwrap();
    let sites = s.interior();
    let a = dense.projector.columns(&sites);
    let b = poly.projector.columns(&sites);
    let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(err < 1e-2, "{err}");
}

#[test]
fn kpm_counting_tracks_dense() {
    let (s, h, sd) = solved();
    let sites = s.interior();
    let hw = 8.5;
    let mu = chebyshev_moments(h.as_sparse().unwrap(), &sites, 400, hw);
    // compare where the counting function is flat: the damped series
    // smears every jump over a width of order π·hw/order
    let es: Vec<f64> =
        find_gaps(sd, default_gap_min(sd)).iter().filter(|g| g.width() > 0.3).map(|g| g.midpoint()).collect();
    assert!(es.len() >= 2);
    let kpm = kpm_ids(&mu, hw, &es);
    let exact = ids_curve(sd, &sites, &es).unwrap();
    for (a, b) in kpm.iter().zip(&exact) {
        assert!((a - b).abs() < 0.01, "{a} vs {b}");
    }
}

#[test]
fn lanczos_window_residuals() {
    let (_, h, sd) = solved();
    let c = h.as_sparse().unwrap();
    let pairs = lanczos_window(c, 4.0, 9.0, 457, 1e-8, 3).unwrap();
    assert!(!pairs.is_empty());
    for p in &pairs {
        assert!(p.residual <= 1e-8);
        let near = sd.eigenvalues.iter().map(|l| (l - p.value).abs()).fold(f64::INFINITY, f64::min);
        assert!(near < 1e-8);
    }
}

#[test]
fn spectrum_is_gauge_invariant_under_base_point_change() {
    let p = Presentation::standard(2).unwrap();
    let u2 = HPoint::half_plane(C64::new(0.13, 1.21)).unwrap();
    let s2 = TruncatedSpace::new(Ball::new(&p, 3, &u2).unwrap(), 1);
    let h2 = build_harper(&s2, &MagneticData::new(0.3, u2)).unwrap();
    let a = eigenvalues(&h2).unwrap();
    let (_, _, sd) = solved();
    let diff = a.iter().zip(&sd.eigenvalues).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-6, "{diff}");
}
