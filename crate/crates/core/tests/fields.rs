use std::f64::consts::PI;

use nikodym::field::{max_imag, AxisLabel, Field, GridSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(d: usize, nx: usize, nt: usize) -> GridSpec<f64> {
    GridSpec::new(d, 2.0, nx, nt).unwrap()
}

fn random_field(g: GridSpec<f64>, seed: u64) -> Field<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(f64, f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>(),
            )
        })
        .collect();
    Field::from_real_fn(g, AxisLabel::T, 1.0, move |x: &[f64], t: f64| {
        bumps
            .iter()
            .map(|(a, b, c, w)| {
                w * (-8.0 * ((x[0] - a).powi(2) + (x[1] - b).powi(2) + (t - c).powi(2))).exp()
            })
            .sum()
    })
}

#[test]
fn parseval_on_random_fields() {
    for seed in 0..5 {
        let f = random_field(grid(2, 32, 8), seed);
        let spec = f.partial_ft_x().unwrap();
        assert!((spec.l2_norm() - f.l2_norm()).abs() <= 1e-10 * f.l2_norm());
        assert!(spec.inverse().unwrap().max_abs_diff(&f) < 1e-12);
    }
}

#[test]
fn parseval_in_single_precision() {
    let g = GridSpec::<f32>::new(1, 1.0, 64, 4).unwrap();
    let f = Field::from_real_fn(g, AxisLabel::T, 1.0, |x: &[f32], t: f32| {
        (-(x[0] * x[0]) * 4.0).exp() * (1.0 + t)
    });
    let spec = f.partial_ft_x().unwrap();
    assert!((spec.l2_norm() - f.l2_norm()).abs() <= 1e-5 * f.l2_norm());
}

#[test]
fn multipliers() {
    let k = 6.0;
    let low = |xi: &[f64], _t: f64| {
        if xi.iter().map(|v| v * v).sum::<f64>() <= k * k {
            1.0
        } else {
            0.0
        }
    };
    for seed in 0..50 {
        let f = random_field(grid(2, 16, 4), 100 + seed);
        assert!(
            f.apply_multiplier(|_: &[f64], _| 1.0)
                .unwrap()
                .max_abs_diff(&f)
                < 1e-10
        );
        let once = f.apply_multiplier(low).unwrap();
        assert!(once.apply_multiplier(low).unwrap().max_abs_diff(&once) < 1e-12);
        let m = |xi: &[f64], t: f64| 0.7 * (xi[0] - t).cos();
        assert!(f.apply_multiplier(m).unwrap().l2_norm() <= 0.7 * f.l2_norm() * (1.0 + 1e-12));
        assert!(max_imag(&once) < 1e-12);
    }
}

#[test]
fn fractional_derivative_on_tones() {
    let g = grid(1, 4, 32);
    let sigma = 3.0 * PI / 2.0;
    let tone = Field::from_fn(g, AxisLabel::S, 2.0, |_: &[f64], s: f64| {
        Complex64::from_polar(1.0, sigma * s)
    });
    let out = tone.fractional_s_derivative(0.5).unwrap();
    let k = (1.0 + sigma).sqrt();
    assert!(out.max_abs_diff(&tone.scaled(k)) < 1e-10);
    let flat = Field::from_real_fn(g, AxisLabel::S, 2.0, |_: &[f64], _| 2.5);
    assert!(
        flat.fractional_s_derivative(0.5)
            .unwrap()
            .max_abs_diff(&flat)
            < 1e-12
    );
}

#[test]
fn fractional_orders_cancel() {
    let f = Field::from_real_fn(grid(1, 8, 16), AxisLabel::S, 1.0, |x: &[f64], s: f64| {
        (x[0] + 2.0 * s).sin() * (1.0 - s * s)
    });
    let up = f.fractional_s_derivative(0.5).unwrap();
    let back = up.fractional_s_derivative(-0.5).unwrap();
    assert!(back.restricted().max_abs_diff(&f) < 1e-8);
    assert!(
        Field::from_real_fn(grid(1, 8, 16), AxisLabel::T, 1.0, |_: &[f64], _| 1.0)
            .fractional_s_derivative(0.5)
            .is_err()
    );
}

#[test]
fn mixed_norms() {
    let g = grid(2, 16, 8);
    let box_ind = Field::from_real_fn(g, AxisLabel::S, 1.0, |_: &[f64], _| 1.0);
    assert!((box_ind.mixed_norm(2.0, f64::INFINITY) - 4.0).abs() < 1e-12);

    let f = |x: &[f64]| (x[0] * x[1]).cos() + 2.0;
    let h = |s: f64| 1.0 + s * s;
    let sep = Field::from_real_fn(g, AxisLabel::S, 1.0, |x: &[f64], s| f(x) * h(s));
    let fx = Field::from_real_fn(g, AxisLabel::S, 1.0, |x: &[f64], _| f(x));
    let h2 = ((0..8)
        .map(|k| h(-1.0 + 0.25 * (k as f64 + 0.5)).powi(2))
        .sum::<f64>()
        * 0.25)
        .sqrt();
    let lhs = sep.mixed_norm(3.0, 2.0);
    let rhs = fx.mixed_norm(3.0, f64::INFINITY) * h2;
    assert!((lhs - rhs).abs() <= 1e-12 * lhs, "{lhs} vs {rhs}");

    for seed in 0..5 {
        let r = random_field(g, seed);
        assert!(r.mixed_norm(2.0, f64::INFINITY) >= r.mixed_norm(2.0, 2.0) / 2.0f64.sqrt());
    }
}

#[test]
fn binary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.bin");
    let f = random_field(grid(2, 8, 4), 9);
    f.write(&path).unwrap();
    assert_eq!(Field::<f64>::read(&path).unwrap(), f);
    let z = f.apply_multiplier(|xi: &[f64], _| xi[0]).unwrap();
    z.write(&path).unwrap();
    assert_eq!(Field::<f64>::read(&path).unwrap(), z);
}
