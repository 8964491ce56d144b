use dtoda::coords::wz_moments;
use dtoda::{TruncatedSeries, C64};

mod common;

use common::ellipse_moment as residue_oracle;

#[test]
fn ellipse_moments_match_residue_oracle() {
    for u in [C64::new(0.2, 0.0), C64::new(0.15, 0.1)] {
        let g = TruncatedSeries::from_terms(16, &[(1, C64::new(1.0, 0.0)), (-1, u)]);
        let cv = wz_moments(&g, 8, 256).unwrap();
        for n in 0..=8i64 {
            let want = residue_oracle(u, n);
            assert!((cv.t(n) - want).norm() < 1e-10, "u = {u}, t{n}: {} vs {want}", cv.t(n));
        }
        assert!((cv.t(0) - (1.0 - u.norm_sqr())).norm() < 1e-12);
        assert!((cv.t(2) - u.conj()).norm() < 1e-12);
        for n in 1..=8i64 {
            assert_eq!(cv.t(-n), -cv.t(n).conj());
            assert_eq!(cv.v(-n), -cv.v(n).conj());
        }
    }
}

#[test]
fn unit_circle_moments() {
    let cv = wz_moments(&TruncatedSeries::identity(8), 8, 64).unwrap();
    assert!((cv.t(0) - 1.0).norm() < 1e-10);
    assert!(cv.v(0).norm() < 1e-10);
}

#[test]
fn dilation_scales_area_moment() {
    let u = C64::new(0.1, -0.05);
    let base = TruncatedSeries::from_terms(8, &[(1, C64::new(1.0, 0.0)), (0, C64::new(0.02, 0.0)), (-1, u)]);
    let t0 = wz_moments(&base, 8, 128).unwrap().t(0);
    for r in [0.5, 1.3, 2.0] {
        let scaled = base.scale(C64::new(r, 0.0));
        let t0r = wz_moments(&scaled, 8, 128).unwrap().t(0);
        assert!((t0r - r * r * t0).norm() < 1e-12, "{r}");
    }
}
