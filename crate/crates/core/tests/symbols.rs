use std::sync::Arc;

use nikodym::curve::{frenet_frame, lookup};
use nikodym::cutoffs::CutoffLibrary;
use nikodym::quadrature::Halton;
use nikodym::symbols::{
    build_a_delta, build_anisotropic_symbol, isotropic_sandwich, littlewood_paley_piece,
    sample_support,
};
use nikodym::tube::ScaleVector;

fn lib() -> Arc<CutoffLibrary> {
    Arc::new(CutoffLibrary::new())
}

#[test]
fn partitions_of_unity() {
    let l = lib();
    for k in 0..=2000 {
        let r = -512.0 + 1024.0 * k as f64 / 2000.0;
        let lp = l.eta(r) + (1..=10).map(|j| l.beta(r / 2f64.powi(j))).sum::<f64>();
        assert!((lp - 1.0).abs() < 1e-12, "r={r}: {lp}");
        let lp1 = l.eta1(r) + (1..=6).map(|n| l.beta1(r / 4f64.powi(n))).sum::<f64>();
        assert!((lp1 - 1.0).abs() < 1e-12, "r={r}: {lp1}");
    }
    for k in 0..=400 {
        let x = -3.0 + 6.0 * k as f64 / 400.0;
        let z: f64 = (-5..=5).map(|nu| l.zeta(x - nu as f64)).sum();
        assert!((z - 1.0).abs() < 1e-12);
        if x.abs() <= 3.0 {
            assert_eq!(l.zeta_tilde(x), 1.0);
        }
    }
    assert_eq!(l.eta(2.5), 0.0);
    assert_eq!(l.beta(0.4), 0.0);
    assert_eq!(l.beta(2.1), 0.0);
    assert_eq!(l.zeta(1.01), 0.0);
    assert_eq!(l.zeta_tilde(4.01), 0.0);
}

#[test]
fn psi_check_is_positive_near_origin() {
    let l = lib();
    assert!(l.psi_check(0.0) > 0.0);
    let rep = l.verify(2000);
    assert!(rep.passes);
    let dense = (0..=400)
        .map(|k| l.psi_check(-1.0 + k as f64 / 200.0))
        .fold(f64::INFINITY, f64::min);
    assert!(dense >= rep.c0 * (1.0 - 1e-6) && rep.c0 > 0.0);
}

#[test]
fn a_delta_support_and_origin() {
    let l = lib();
    for delta in [0.5, 0.125, 0.01] {
        let a = build_a_delta(&l, delta, 3).unwrap();
        assert!((a.eval(&[0.0; 3], 0.0, 0.0) - l.psi(0.0f64)).abs() < 1e-15);
        assert_eq!(a.eval(&[2.0 / delta, 0.0, 0.0], 0.0, 0.0), 0.0);
        assert_eq!(
            a.eval(
                &[
                    0.0,
                    1.2 / (delta * 2f64.sqrt()),
                    1.2 / (delta * 2f64.sqrt())
                ],
                0.3,
                -0.2
            ),
            0.0
        );
    }
    assert!(build_a_delta(&l, 1.5, 2).is_err());
}

#[test]
fn littlewood_paley_pieces() {
    let l = lib();
    let delta = 1.0 / 32.0;
    let a = build_a_delta(&l, delta, 2).unwrap();
    let pieces: Vec<_> = std::iter::once(0)
        .chain((1..12).map(|j| 1u64 << j))
        .map(|lam| littlewood_paley_piece(&a, &l, lam).unwrap())
        .collect();
    for u in Halton::new(4, 17).take(1000) {
        let xi = [80.0 * (u[0] - 0.5), 80.0 * (u[1] - 0.5)];
        let (s, t) = (2.0 * u[2] - 1.0, 2.0 * u[3] - 1.0);
        let total: f64 = pieces.iter().map(|p| p.eval(&xi, s, t)).sum();
        assert!((total - a.eval(&xi, s, t)).abs() < 1e-12);
        let lam_pieces = &pieces[1..];
        for (i, p) in lam_pieces.iter().enumerate() {
            if (2u64 << i) as f64 >= 4.0 / delta {
                assert_eq!(p.eval(&xi, s, t), 0.0);
            }
            for q in lam_pieces.iter().skip(i + 2) {
                assert_eq!(p.eval(&xi, s, t) * q.eval(&xi, s, t), 0.0);
            }
        }
    }
    assert!(littlewood_paley_piece(&a, &l, 3).is_err());
}

#[test]
fn anisotropic_symbol_support() {
    let l = lib();
    let c = lookup::<f64>("circle2d", 2).unwrap();
    let delta = 0.05;
    let a = build_anisotropic_symbol(&l, &c, &ScaleVector::isotropic(delta, 2)).unwrap();
    assert!((a.eval(&[0.0, 0.0], 0.4, -0.7) - l.psi(0.0f64).powi(2)).abs() < 1e-15);
    let e = frenet_frame(&c, 0.4).unwrap();
    let off: Vec<f64> = e[0].iter().map(|v| v * 1.01 / delta).collect();
    assert_eq!(a.eval(&off, 0.4, 0.0), 0.0);
    let pts = sample_support(&a, 4000, 3);
    assert!(!pts.is_empty());
    for p in &pts {
        let n = p.xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(n <= 2f64.sqrt() / delta * (1.0 + 1e-12));
    }
    let graded = build_anisotropic_symbol(
        &l,
        &lookup::<f64>("moment", 3).unwrap(),
        &ScaleVector::graded(0.25, 3),
    )
    .unwrap();
    assert!((graded.eval(&[0.0; 3], 0.0, 0.0) - l.psi(0.0f64).powi(3)).abs() < 1e-15);
}

#[test]
fn sandwich_holds_for_both_curves() {
    let l = lib();
    for (key, d) in [("circle2d", 2), ("moment", 3)] {
        let c = lookup::<f64>(key, d).unwrap();
        for k in [1, 4, 10] {
            let r = isotropic_sandwich(&l, &c, 0.5f64.powi(k), 1000).unwrap();
            assert!(r.passes, "{key} 2^-{k}: {r:?}");
        }
    }
}
