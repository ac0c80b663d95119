use std::f64::consts::PI;
use std::sync::Arc;

use nikodym::curve::lookup;
use nikodym::cutoffs::CutoffLibrary;
use nikodym::experiments::backend_domination;
use nikodym::field::{AxisLabel, Field, GridSpec};
use nikodym::operators::{
    averaging_direct, averaging_fio, fractional_fio, kernel_k, maximize_over_s, nikodym_maximal,
    schur_bound, AveragingQuadrature, KernelQuadrature, MaximalConfig, SlicedBallSet, TubeWidth,
};
use nikodym::symbols::{build_a_delta, Separable, SupportHint, Symbol, SymbolMeta};
use nikodym::tube::ball_intersection_volume;
use nikodym::Curve64;

fn circle() -> Curve64 {
    lookup("circle2d", 2).unwrap()
}

fn unit_symbol(d: usize) -> Symbol<f64> {
    let meta = SymbolMeta {
        id: "one".into(),
        lambda: 0.0,
        a_const: 1.0,
        l: 1,
        curve: String::new(),
    };
    let support = SupportHint {
        xi_min: 0.0,
        xi_max: f64::INFINITY,
        s: (-2.0, 2.0),
        t: (-2.0, 2.0),
    };
    Symbol::separable(
        meta,
        support,
        d,
        Separable {
            xi: Arc::new(|_| 1.0),
            s: Arc::new(|_| 1.0),
            t: Arc::new(|_| 1.0),
        },
    )
}

fn field(grid: GridSpec<f64>, f: impl Fn(&[f64], f64) -> f64 + Sync) -> Field<f64> {
    Field::from_real_fn(grid, AxisLabel::T, 1.0, f)
}

#[test]
fn unit_symbol_integrates_trigonometric_fields() {
    let c = circle();
    let grid = GridSpec::new(2, 2.0, 16, 8).unwrap();
    let g = |x: &[f64], t: f64| (PI / 2.0 * x[0] + t).cos() + 0.5 * (PI * x[1]).sin() * t * t;
    let out = averaging_fio(&unit_symbol(2), &c, &field(grid, g)).unwrap();
    let per = grid.points_per_slice();
    let dt = 2.0 / grid.nt as f64;
    for (js, flat) in [(3, 17), (8, 100), (12, 255)] {
        let s = out.axis_coord(js);
        let x = grid.point(flat);
        let gamma = c.eval(0, s);
        let direct: f64 = (0..grid.nt)
            .map(|k| {
                let t = -1.0 + (k as f64 + 0.5) * dt;
                let y = [x[0] - t * gamma[0], x[1] - t * gamma[1]];
                g(&y, t) * dt
            })
            .sum();
        let v = out.values[js * per + flat];
        assert!(
            (v.re - (2.0 * PI).powi(2) * direct).abs() < 1e-9,
            "{v} vs {direct}"
        );
        assert!(v.im.abs() < 1e-9);
    }
}

#[test]
fn fio_is_linear_and_kills_zero_symbol() {
    let c = circle();
    let lib = Arc::new(CutoffLibrary::new());
    let a = build_a_delta(&lib, 0.25, 2).unwrap();
    let grid = GridSpec::new(2, 2.0, 16, 8).unwrap();
    let g1 = field(grid, |x, t| {
        (-(x[0] * x[0] + x[1] * x[1]) * 4.0).exp() * (1.0 - t * t)
    });
    let g2 = field(grid, |x, t| (-(x[0] - 0.3).powi(2) * 6.0).exp() * (t + 2.0));
    let lhs = averaging_fio(&a, &c, &g1.add(&g2.scaled(-1.5))).unwrap();
    let rhs = averaging_fio(&a, &c, &g1)
        .unwrap()
        .add(&averaging_fio(&a, &c, &g2).unwrap().scaled(-1.5));
    assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    let zero = averaging_fio(&Symbol::zero(2), &c, &g1).unwrap();
    assert!(zero.values.iter().all(|v| v.norm() == 0.0));
    let frac = fractional_fio(&a, &c, &g1).unwrap();
    assert!(frac.l2_norm() >= averaging_fio(&a, &c, &g1).unwrap().l2_norm());
}

#[test]
fn direct_average_is_linear_and_dominated_by_the_maximal_function() {
    let c = lookup::<f64>("moment", 3).unwrap();
    let delta = 0.1;
    let width = TubeWidth::Iso(delta);
    let q = AveragingQuadrature::for_width(delta);
    let g = |y: &[f64], t: f64| {
        (-(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]) * 3.0).exp() * (1.0 + t * t)
    };
    let h = |y: &[f64], t: f64| (y[0] + 2.0 * y[2] * t).cos().powi(2);
    let x = [0.1, -0.2, 0.3];
    let sum = |y: &[f64], t: f64| g(y, t) + 2.0 * h(y, t);
    let a = averaging_direct(&c, &width, &g, &x, 0.4, &q).unwrap();
    let b = averaging_direct(&c, &width, &h, &x, 0.4, &q).unwrap();
    let ab = averaging_direct(&c, &width, &sum, &x, 0.4, &q).unwrap();
    assert!((ab - a - 2.0 * b).abs() < 1e-12);

    let cfg = MaximalConfig::for_width(delta);
    let pts = vec![x.to_vec(), vec![0.0; 3]];
    let m = nikodym_maximal(&c, &width, &g, &pts, &cfg, &q).unwrap();
    let scaled = |y: &[f64], t: f64| 3.5 * g(y, t);
    let m3 = nikodym_maximal(&c, &width, &scaled, &pts, &cfg, &q).unwrap();
    for (p, (v, v3)) in pts.iter().zip(m.iter().zip(&m3)) {
        assert!((v3.value - 3.5 * v.value).abs() <= 1e-12 * v3.value);
        for k in 0..=40 {
            let s = -1.0 + k as f64 / 20.0;
            assert!(averaging_direct(&c, &width, &g, p, s, &q).unwrap() <= v.value * (1.0 + 1e-12));
        }
    }
    assert!(maximize_over_s(
        delta,
        &MaximalConfig {
            s_step: delta,
            refine: false
        },
        |_| Ok(1.0)
    )
    .is_err());
}

#[test]
fn ball_superlevel_set_contains_reflected_curve() {
    let c = circle();
    let delta = 1.0 / 32.0;
    let ball = SlicedBallSet::ball(vec![0.0, 0.0], -1.0 + delta, delta);
    let cfg = MaximalConfig::for_width(delta);
    let t0 = -1.0 + delta;
    let n = 20_000;
    let lens: f64 = (0..n)
        .map(|k| {
            let t = t0 - delta + 2.0 * delta * (k as f64 + 0.5) / n as f64;
            let rho = (delta * delta - (t - t0).powi(2)).max(0.0).sqrt();
            ball_intersection_volume(2, rho, delta, (t - t0).abs()) * 2.0 * delta / n as f64
        })
        .sum();
    let expected = lens / (2.0 * PI * delta * delta);
    let at = ball.average(
        &c,
        delta,
        &c.eval(0, 0.2).iter().map(|v| t0 * v).collect::<Vec<_>>(),
        0.2,
    );
    assert!(
        (at - expected).abs() < 1e-3 * expected,
        "{at} vs {expected}"
    );
    let mut lowest = f64::INFINITY;
    for k in 0..200 {
        let s = -1.0 + 2.0 * (k as f64 + 0.5) / 200.0;
        let phase = 2.0 * PI * k as f64 * 0.618_034;
        let u = [0.5 * delta * phase.cos(), 0.5 * delta * phase.sin()];
        let x: Vec<f64> = c
            .eval(0, s)
            .iter()
            .zip(u)
            .map(|(g, ui)| -(1.0 - delta) * g + ui)
            .collect();
        lowest = lowest.min(ball.maximal(&c, delta, &x, &cfg).unwrap().value / delta);
    }
    assert!(lowest >= 0.1, "{lowest}");
}

#[test]
fn kernel_without_oscillation() {
    let c = circle();
    let lib = Arc::new(CutoffLibrary::new());
    let a = build_a_delta(&lib, 0.25, 2).unwrap();
    let q = KernelQuadrature::default();
    let sec = a.section(&[0.0, 0.0]);
    let (tp, t) = (-0.3, 0.8);
    let k = kernel_k(&sec, &c, &[0.0, 0.0], tp, t, &q);
    let n = 4000;
    let direct: f64 = (0..n)
        .map(|j| {
            let s = -2.0 + 4.0 * (j as f64 + 0.5) / n as f64;
            a.eval(&[0.0, 0.0], s, tp) * a.eval(&[0.0, 0.0], s, t) * 4.0 / n as f64
        })
        .sum();
    assert!((k.re - direct).abs() < 1e-6 && k.im.abs() < 1e-15);
    let xi = [3.0, -2.0];
    let sec = a.section(&xi);
    let sup = a.eval(&xi, 0.0, 0.0).abs();
    assert!(kernel_k(&sec, &c, &xi, tp, t, &q).norm() <= 4.0 * sup * sup);
    let zero = schur_bound(&Symbol::zero(2), &c, &[vec![1.0, 0.0]], &[0.0], &q);
    assert_eq!(zero.sup, 0.0);
}

#[test]
fn domination_constant_is_stable() {
    let c = circle();
    let r = backend_domination(&c, &[0.25, 0.125, 0.0625], 10, 50, 5).unwrap();
    for p in &r.points {
        assert_eq!(p.violations, 0, "{p:?}");
        assert!(p.constant > 0.0 && p.constant.is_finite());
        assert!(p.imaginary_part < 1e-10);
    }
    assert!(r.spread <= 2.0, "{}", r.spread);
}
