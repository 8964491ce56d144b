use dtoda::welding::{gamma_from_pair, weld, weld_from, WeldOptions};
use dtoda::{CircleHomeo, HomeoSpec, UnivalentPair, C64};

fn homeo(a: [f64; 2], alpha: f64, modes: Vec<(i64, f64, f64)>) -> CircleHomeo {
    let spec = HomeoSpec::PerturbedMobius { base: Box::new(HomeoSpec::Mobius { a, alpha }), modes };
    CircleHomeo::from_spec(&spec, 48, 512).unwrap()
}

fn max_gap(x: &[C64], y: &[C64]) -> f64 {
    x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
}

#[test]
fn real_symmetric_gamma_gives_real_coefficients() {
    // odd angular shift keeps gamma(conj w) = conj gamma(w)
    let g = homeo([0.25, 0.0], 0.0, vec![(3, 0.0, 0.01), (2, 0.0, -0.008)]);
    let s = weld(&g, WeldOptions::default()).unwrap();
    let p = &s.pair;
    let worst = p.f_coeffs().iter().chain(p.g_coeffs()).fold(p.g_lead().im.abs(), |m, c| m.max(c.im.abs()));
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn identity_and_mobius_fit_starts_agree() {
    for g in [homeo([0.2, 0.0], 0.0, vec![(3, 0.01, 0.0)]), homeo([0.1, -0.2], 0.5, vec![(2, 0.0, 0.01)])] {
        let fit = weld(&g, WeldOptions::default()).unwrap();
        let id = UnivalentPair::mobius(C64::new(0.0, 0.0), 0.0, g.order()).unwrap();
        let other = weld_from(&g, &id, WeldOptions::default()).unwrap();
        let df = max_gap(fit.pair.f_coeffs(), other.pair.f_coeffs());
        let dg = max_gap(fit.pair.g_coeffs(), other.pair.g_coeffs());
        assert!(df < 1e-9 && dg < 1e-9, "{df} {dg}");
    }
}

#[test]
fn normalization_and_round_trip() {
    let g = homeo([0.0, 0.3], -0.4, vec![(4, 0.006, 0.004)]);
    let s = weld(&g, WeldOptions::default()).unwrap();
    assert!((s.pair.a1() * s.pair.g_lead() - 1.0).norm() < 1e-15);
    let back = gamma_from_pair(&s.pair, g.order(), g.grid()).unwrap();
    let err = max_gap(back.samples(), g.samples());
    assert!(err < 1e-9, "{err}");
}
