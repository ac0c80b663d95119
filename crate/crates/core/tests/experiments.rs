use std::sync::Arc;

use nikodym::curve::lookup;
use nikodym::cutoffs::CutoffLibrary;
use nikodym::experiments::sharpness::LEVEL_RATIO_SPREAD;
use nikodym::experiments::{
    aniso_admissibility_experiment, empirical_norm, reevaluate, rescaled_membership,
    scaling_law_fit, sharpness_log_experiment, sharpness_range_experiment, Claim, FieldShape,
    FioMaximalOperator, FioOperator, Strategy,
};
use nikodym::field::{AxisLabel, GridSpec};
use nikodym::symbols::build_a_delta;
use nikodym::Curve64;

fn circle() -> Curve64 {
    lookup("circle2d", 2).unwrap()
}

fn fio(delta: f64) -> FioOperator {
    let lib = Arc::new(CutoffLibrary::new());
    FioOperator {
        shape: FieldShape {
            grid: GridSpec::new(2, 2.0, 16, 8).unwrap(),
            axis: AxisLabel::T,
            axis_half: 1.0,
        },
        symbol: build_a_delta(&lib, delta, 2).unwrap(),
        curve: circle(),
    }
}

#[test]
fn fits_of_exact_powers() {
    let scales: Vec<f64> = (3..=9).map(|k| (2f64.powi(k)).ln()).collect();
    let norms: Vec<f64> = scales.iter().map(|l| 0.7 * l).collect();
    let f = scaling_law_fit(&scales, &norms, 1.0, 0.25, Claim::Upper).unwrap();
    assert!((f.slope - 1.0).abs() < 1e-6 && f.pass);
    let half: Vec<f64> = scales.iter().map(|l| l.sqrt()).collect();
    let g = scaling_law_fit(&scales, &half, 0.5, 0.1, Claim::Lower).unwrap();
    assert!((g.slope - 0.5).abs() < 1e-9 && g.pass);
    let h = scaling_law_fit(&scales, &half, 1.0, 0.25, Claim::Lower).unwrap();
    assert!(!h.pass);
}

#[test]
fn power_iteration_is_monotone_and_witnessed() {
    let op = fio(0.25);
    let est = empirical_norm(&op, 2.0, 2.0, Strategy::PowerIteration, 1, 3).unwrap();
    assert!(est.rayleigh.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-6)));
    assert!((reevaluate(&op, &est).unwrap() - est.value).abs() <= 1e-8 * est.value.max(1.0));
    let rnd = empirical_norm(&op, 2.0, 2.0, Strategy::Random, 4, 3).unwrap();
    assert!(rnd.value <= est.value * (1.0 + 1e-6));
}

#[test]
fn trials_never_lower_the_estimate() {
    let lib = Arc::new(CutoffLibrary::new());
    let op = FioMaximalOperator {
        shape: FieldShape {
            grid: GridSpec::new(2, 2.0, 16, 8).unwrap(),
            axis: AxisLabel::T,
            axis_half: 1.0,
        },
        symbol: build_a_delta(&lib, 0.25, 2).unwrap(),
        curve: circle(),
    };
    let mut last = 0.0;
    for trials in [1, 2, 4, 6] {
        let e = empirical_norm(&op, 2.0, 2.0, Strategy::Random, trials, 11).unwrap();
        assert!(e.value >= last);
        assert!((reevaluate(&op, &e).unwrap() - e.value).abs() <= 1e-8 * e.value);
        last = e.value;
    }
    assert!(empirical_norm(&op, 2.0, 2.0, Strategy::PowerIteration, 1, 1).is_err());
}

#[test]
fn level_sets_obey_chebyshev() {
    let c = circle();
    let r = sharpness_log_experiment(&c, 0.125, 2.0, &[0.0, 0.0], 0.0, 4000, 1).unwrap();
    assert_eq!(r.k_max, 3);
    assert!(!r.degenerate && r.chebyshev_holds);
    assert!(r.min_value >= 0.0 && r.max_value <= 1.0 + 1e-12);
    assert!(r.ratios[0] > 0.0);
    assert!(
        r.cone_levels.iter().all(|&v| (0.5..=16.0).contains(&v)),
        "{:?}",
        r.cone_levels
    );
    assert!(r.cone_spread <= LEVEL_RATIO_SPREAD, "{:?}", r.cone_ratios);
    let big = sharpness_log_experiment(&c, 0.75, 2.0, &[0.0, 0.0], 0.0, 500, 1).unwrap();
    assert!(big.degenerate);
}

#[test]
fn range_witness_has_small_maximal_function() {
    let r = sharpness_range_experiment(&circle(), 1.0 / 16.0, 2.0, 4000, 1).unwrap();
    assert!(r.measure_ratio > 0.0 && r.max_value <= 1.0 + 1e-12);
}

#[test]
fn anisotropic_families_are_admissible() {
    for (key, d) in [("circle2d", 2), ("moment", 3)] {
        let c = lookup::<f64>(key, d).unwrap();
        let deltas: Vec<f64> = (1..=10).map(|k| 0.5f64.powi(k)).collect();
        let r = aniso_admissibility_experiment(&c, &deltas, 1000, 1).unwrap();
        assert!(r.pass, "{key}");
    }
}

#[test]
fn rescaled_bounds_stabilise() {
    let m = rescaled_membership(
        &circle(),
        2,
        &[(1.0 / 16.0, 0.0), (1.0 / 64.0, 0.0), (1.0 / 256.0, 0.0)],
        400,
    )
    .unwrap();
    assert!(m.pass && m.spread <= 1.5, "{m:?}");
    let line = lookup::<f64>("line", 2).unwrap();
    assert!(rescaled_membership(&line, 2, &[(0.25, 0.0)], 100).is_err());
}
