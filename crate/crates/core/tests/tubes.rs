use nikodym::curve::{frenet_frame, lookup};
use nikodym::scalar::unit_ball_volume;
use nikodym::tube::{
    check_admissible, exact_isotropic_intersection, intersection_volume_mc,
    predicted_intersection_volume, ScaleVector, Tube, TubeSpec,
};
use nikodym::Curve64;

fn circle() -> Curve64 {
    lookup("circle2d", 2).unwrap()
}

fn point(y: &[f64], t: f64) -> Vec<f64> {
    let mut p = y.to_vec();
    p.push(t);
    p
}

#[test]
fn isotropic_membership() {
    let c = lookup::<f64>("moment", 3).unwrap();
    let tube = Tube::isotropic(&c, 0.4, 0.1).unwrap();
    let g = c.eval(0, 0.4);
    for t in [-1.0, -0.3, 0.0, 1.0] {
        let y: Vec<f64> = g.iter().map(|x| t * x).collect();
        assert!(tube.contains(&point(&y, t)));
    }
    let y: Vec<f64> = g.iter().zip([0.0, 0.0, 0.2]).map(|(x, u)| x + u).collect();
    assert!(!tube.contains(&point(&y, 1.0)));
    assert!(!tube.contains(&point(&g.iter().map(|x| 1.5 * x).collect::<Vec<_>>(), 1.5)));
}

#[test]
fn anisotropic_membership() {
    let c = circle();
    let (s, delta) = (0.3, 0.1);
    let tube = Tube::anisotropic(&c, s, &[delta, delta * delta]).unwrap();
    let e = frenet_frame(&c, s).unwrap();
    let g = c.eval(0, s);
    let at = |t: f64, j: usize, a: f64| -> Vec<f64> {
        point(
            &g.iter()
                .zip(&e[j])
                .map(|(x, v)| t * x + a * v)
                .collect::<Vec<_>>(),
            t,
        )
    };
    assert!(tube.contains(&at(0.5, 0, 0.999 * delta)));
    assert!(!tube.contains(&at(0.5, 1, 2.0 * delta * delta)));
    assert!(tube.contains(&at(-0.5, 1, 0.5 * delta * delta)));
}

#[test]
fn volumes() {
    for (key, d) in [("circle2d", 2), ("moment", 3), ("moment", 4)] {
        let c = lookup::<f64>(key, d).unwrap();
        let delta = 0.05;
        let iso = Tube::isotropic(&c, 0.2, delta).unwrap();
        assert!(
            (iso.volume() - 2.0 * unit_ball_volume::<f64>(d) * delta.powi(d as i32)).abs() < 1e-15
        );
        let r: Vec<f64> = (1..=d).map(|j| delta.powi(j as i32)).collect();
        let an = Tube::anisotropic(&c, 0.2, &r).unwrap();
        let expected = 2.0 * r.iter().map(|x| 2.0 * x).product::<f64>();
        assert!((an.volume() - expected).abs() <= 1e-12 * expected);
    }
}

#[test]
fn admissibility() {
    for k in 1..=10 {
        let delta = 0.5f64.powi(k);
        for d in 2..=6 {
            assert!(
                check_admissible(&ScaleVector::isotropic(delta, d))
                    .unwrap()
                    .admissible
            );
            assert!(
                check_admissible(&ScaleVector::graded(delta, d))
                    .unwrap()
                    .admissible
            );
        }
    }
    let bad = check_admissible(&ScaleVector(vec![0.01, 0.1])).unwrap();
    assert!(!bad.admissible);
    assert_eq!(bad.violation.as_deref(), Some("r_2 <= r_1"));
    assert!(check_admissible(&ScaleVector(vec![1.5, 0.1])).is_err());
}

#[test]
fn tube_specs_round_trip() {
    let c = circle();
    let t: Tube<f64> = "iso:s=0.25,delta=0.1"
        .parse::<TubeSpec>()
        .unwrap()
        .build(&c)
        .unwrap();
    assert_eq!(t, Tube::isotropic(&c, 0.25, 0.1).unwrap());
    assert!("cube:s=0,delta=1".parse::<TubeSpec>().is_err());
    assert!("aniso:s=0,r=0.1,x".parse::<TubeSpec>().is_err());
}

#[test]
fn monte_carlo_volumes() {
    let c = circle();
    let a = Tube::isotropic(&c, 0.0, 0.1).unwrap();
    let full = intersection_volume_mc(&a, &a, 200_000, 3);
    assert!((full.volume - a.volume()).abs() <= 3.0 * full.std_error + 1e-12);

    let far = Tube::isotropic(&c, 0.0, 0.1)
        .unwrap()
        .with_shift(vec![5.0, 0.0, 0.0]);
    assert_eq!(intersection_volume_mc(&a, &far, 10_000, 3).volume, 0.0);

    let delta = 0.5f64.powi(6);
    let (r, s) = (-0.5, -0.5 + 0.125);
    let wide = Tube::isotropic(&c, r, delta).unwrap();
    let shift: Vec<f64> = c
        .eval(0, r)
        .iter()
        .zip(c.eval(0, s))
        .map(|(a, b)| 0.3 * (a - b))
        .collect();
    let thin = Tube::isotropic(&c, s, delta)
        .unwrap()
        .with_shift(point(&shift, 0.0));
    let mc = intersection_volume_mc(&wide, &thin, 1_000_000, 7);
    let exact = exact_isotropic_intersection(&wide, &thin).unwrap();
    assert!(
        (mc.volume - exact).abs() <= 4.0 * mc.std_error,
        "{mc:?} vs {exact}"
    );
    let gap = c
        .eval(0, r)
        .iter()
        .zip(c.eval(0, s))
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let ratio = mc.volume
        / (2.0 * unit_ball_volume::<f64>(2) * predicted_intersection_volume(delta, gap, 2));
    assert!((0.25..=4.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn monte_carlo_is_reproducible() {
    let c = circle();
    let a = Tube::isotropic(&c, 0.1, 0.05).unwrap();
    let b = Tube::isotropic(&c, 0.2, 0.05).unwrap();
    assert_eq!(
        intersection_volume_mc(&a, &b, 100_000, 11),
        intersection_volume_mc(&a, &b, 100_000, 11)
    );
}

#[test]
fn predicted_law() {
    let delta = 0.01;
    assert!((predicted_intersection_volume(delta, 0.0, 3) - delta.powi(3)).abs() < 1e-18);
    assert!((predicted_intersection_volume(delta, delta, 3) - delta.powi(3) / 2.0).abs() < 1e-18);
}
