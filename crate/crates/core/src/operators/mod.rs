//! Averaging operators over tubes, the Nikodym maximal function, the Fourier
//! integral operators `𝒜[a,γ]` and `𝔇_s𝒜[a,γ]`, the kernel `K[a]`, the Schur
//! bound and the oscillatory error term `b_δ`.

pub mod fio;
pub mod kernel;
pub mod sliced;

use serde::Serialize;

use crate::curve::{frenet_frame, Curve};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::scalar::{norm, Real};

pub use fio::{averaging_fio, averaging_fio_adjoint, averaging_fio_batch, fractional_fio, FioGrid};
pub use kernel::{
    b_delta_eval, decay_fit, graded_t_nodes, kernel_k, schur_bound, DecayFit, KernelQuadrature,
    SchurReport,
};
pub use sliced::{SliceProfile, SlicedBallSet};

/// Cross-section of a tube: a `δ`-ball or a Frenet box with half-widths `r`.
#[derive(Debug, Clone, PartialEq)]
pub enum TubeWidth<T> {
    Iso(T),
    Aniso(Vec<T>),
}

impl<T: Real> TubeWidth<T> {
    /// Smallest half-width.
    pub fn min_width(&self) -> T {
        match self {
            TubeWidth::Iso(d) => *d,
            TubeWidth::Aniso(r) => r.iter().copied().fold(T::infinity(), T::min),
        }
    }
}

/// Node counts of the product rule `t × cross-section`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragingQuadrature {
    pub t_panels: usize,
    pub t_order: usize,
    /// Nodes across a radius (or half-width) of the cross-section.
    pub radial: usize,
    /// Angular nodes (`d ≥ 2`).
    pub angular: usize,
}

impl AveragingQuadrature {
    pub fn for_width(delta: f64) -> Self {
        Self {
            t_panels: ((0.5 / delta).ceil() as usize).max(4),
            t_order: 8,
            radial: 8,
            angular: 16,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.radial < 8 {
            return Err(Error::Config(format!(
                "{} nodes across the tube; at least 8 are required",
                self.radial
            )));
        }
        Ok(())
    }
}

/// Offsets and weights of the cross-section rule.
fn cross_section<T: Real>(
    curve: &Curve<T>,
    s: T,
    width: &TubeWidth<T>,
    q: &AveragingQuadrature,
) -> Result<Vec<(Vec<T>, T)>> {
    let d = curve.dim();
    let gl = GaussLegendre::<T>::new(q.radial);
    let two_pi = T::lit(std::f64::consts::TAU);
    match width {
        TubeWidth::Aniso(r) => {
            let frame = frenet_frame(curve, s)?;
            let mut out = vec![(vec![T::zero(); d], T::one())];
            for (e, &rj) in frame.iter().zip(r) {
                let rule: Vec<(T, T)> = gl.mapped(-rj, rj).collect();
                out = out
                    .into_iter()
                    .flat_map(|(v, w)| {
                        rule.iter().map(move |&(c, wc)| {
                            let nv = v.iter().zip(e).map(|(&a, &b)| a + c * b).collect();
                            (nv, w * wc)
                        })
                    })
                    .collect();
            }
            Ok(out)
        }
        TubeWidth::Iso(delta) => {
            let delta = *delta;
            let radial: Vec<(T, T)> = gl.mapped(T::zero(), delta).collect();
            let ang = q.angular.max(4);
            Ok(match d {
                1 => gl
                    .mapped(-delta, delta)
                    .map(|(x, w)| (vec![x], w))
                    .collect(),
                2 => {
                    let mut out = Vec::with_capacity(radial.len() * ang);
                    for &(r, wr) in &radial {
                        for k in 0..ang {
                            let th = two_pi * T::from_usize_lossy(k) / T::from_usize_lossy(ang);
                            out.push((
                                vec![r * th.cos(), r * th.sin()],
                                wr * r * two_pi / T::from_usize_lossy(ang),
                            ));
                        }
                    }
                    out
                }
                3 => {
                    let polar = GaussLegendre::<T>::new(ang / 2);
                    let mut out = Vec::new();
                    for &(r, wr) in &radial {
                        for (z, wz) in polar.mapped(-T::one(), T::one()) {
                            let rho = (T::one() - z * z).sqrt();
                            for k in 0..ang {
                                let ph = two_pi * T::from_usize_lossy(k) / T::from_usize_lossy(ang);
                                let w = wr * r * r * wz * two_pi / T::from_usize_lossy(ang);
                                out.push((vec![r * rho * ph.cos(), r * rho * ph.sin(), r * z], w));
                            }
                        }
                    }
                    out
                }
                _ => {
                    // tensor rule on the cube, masked to the ball
                    let rule: Vec<(T, T)> = gl.mapped(-delta, delta).collect();
                    let mut out = vec![(Vec::new(), T::one())];
                    for _ in 0..d {
                        out = out
                            .into_iter()
                            .flat_map(|(v, w)| {
                                rule.iter().map(move |&(c, wc)| {
                                    let mut nv: Vec<T> = v.clone();
                                    nv.push(c);
                                    (nv, w * wc)
                                })
                            })
                            .collect();
                    }
                    out.into_iter().filter(|(v, _)| norm(v) <= delta).collect()
                }
            })
        }
    }
}

/// `(1/|T(s)|) ∫_{T(s)} g(x − y, t) dy dt` by product quadrature. The weights are
/// renormalised so that constants are reproduced exactly.
pub fn averaging_direct<T, G>(
    curve: &Curve<T>,
    width: &TubeWidth<T>,
    g: &G,
    x: &[T],
    s: T,
    q: &AveragingQuadrature,
) -> Result<T>
where
    T: Real,
    G: Fn(&[T], T) -> T + ?Sized,
{
    q.validate()?;
    let d = curve.dim();
    let section = cross_section(curve, s, width, q)?;
    let gamma = curve.eval(0, s);
    let tgl = GaussLegendre::<T>::new(q.t_order);
    let tnodes = tgl.composite_nodes(-T::one(), T::one(), q.t_panels);
    let mut point = vec![T::zero(); d];
    let (mut acc, mut wsum) = (T::zero(), T::zero());
    for &(t, wt) in &tnodes {
        for (v, wv) in &section {
            for j in 0..d {
                point[j] = x[j] - t * gamma[j] - v[j];
            }
            acc = acc + wt * *wv * g(&point, t);
            wsum = wsum + wt * *wv;
        }
    }
    Ok(acc / wsum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximalConfig {
    pub s_step: f64,
    /// Three-point parabolic refinement around the best grid point.
    pub refine: bool,
}

impl MaximalConfig {
    pub fn for_width(delta: f64) -> Self {
        Self {
            s_step: delta / 2.0,
            refine: true,
        }
    }
}

/// `max_s |A g(x, s)|` over a grid in `I`; a lower bound for the supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximalValue {
    pub value: f64,
    pub argmax: f64,
}

/// Generic `s`-grid maximisation of `|avg(s)|`.
pub fn maximize_over_s<F>(min_width: f64, cfg: &MaximalConfig, mut avg: F) -> Result<MaximalValue>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(cfg.s_step > 0.0) || cfg.s_step > min_width / 2.0 * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "s-grid step {} exceeds half the tube width {}",
            cfg.s_step, min_width
        )));
    }
    let n = (2.0 / cfg.s_step).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect();
    let values = grid
        .iter()
        .map(|&s| avg(s).map(f64::abs))
        .collect::<Result<Vec<_>>>()?;
    let (mut best, mut value) = (0, values[0]);
    for (k, &v) in values.iter().enumerate() {
        if v > value {
            best = k;
            value = v;
        }
    }
    let mut argmax = grid[best];
    if cfg.refine && best > 0 && best < n {
        let (a, b, c) = (values[best - 1], values[best], values[best + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            let h = grid[1] - grid[0];
            let shift = (0.5 * (a - c) / denom).clamp(-1.0, 1.0) * h;
            let s = grid[best] + shift;
            let v = avg(s)?.abs();
            if v > value {
                value = v;
                argmax = s;
            }
        }
    }
    Ok(MaximalValue { value, argmax })
}

/// `𝒩 g(x)` at each point, with the averages computed by [`averaging_direct`].
pub fn nikodym_maximal<T, G>(
    curve: &Curve<T>,
    width: &TubeWidth<T>,
    g: &G,
    x_points: &[Vec<T>],
    cfg: &MaximalConfig,
    q: &AveragingQuadrature,
) -> Result<Vec<MaximalValue>>
where
    T: Real,
    G: Fn(&[T], T) -> T + Sync + ?Sized,
{
    use rayon::prelude::*;
    x_points
        .par_iter()
        .map(|x| {
            maximize_over_s(width.min_width().as_f64(), cfg, |s| {
                averaging_direct(curve, width, g, x, T::lit(s), q).map(|v| v.as_f64())
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::lookup;

    #[test]
    fn constants_average_to_one() {
        for (key, d) in [("circle2d", 2), ("moment", 3), ("moment", 1), ("moment", 4)] {
            let c = lookup::<f64>(key, d).unwrap();
            let q = AveragingQuadrature::for_width(0.1);
            let x = vec![0.3; d];
            let v = averaging_direct(&c, &TubeWidth::Iso(0.1), &|_: &[f64], _| 1.0, &x, 0.2, &q)
                .unwrap();
            assert!((v - 1.0).abs() < 1e-14);
            let r = TubeWidth::Aniso(vec![0.1; d]);
            let v = averaging_direct(&c, &r, &|_: &[f64], _| 1.0, &x, -0.4, &q).unwrap();
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn box_containing_tube_gives_one() {
        let c = lookup::<f64>("circle2d", 2).unwrap();
        let q = AveragingQuadrature::for_width(0.05);
        let x = [0.5, -0.25];
        let g = |p: &[f64], _t: f64| {
            if p.iter().all(|v| v.abs() < 3.0) {
                1.0
            } else {
                0.0
            }
        };
        let v = averaging_direct(&c, &TubeWidth::Iso(0.05), &g, &x, 0.7, &q).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn resolution_contract_enforced() {
        let c = lookup::<f64>("circle2d", 2).unwrap();
        let q = AveragingQuadrature::for_width(0.1);
        let cfg = MaximalConfig {
            s_step: 0.2,
            refine: false,
        };
        let err = nikodym_maximal(
            &c,
            &TubeWidth::Iso(0.1),
            &|_: &[f64], _| 1.0,
            &[vec![0.0, 0.0]],
            &cfg,
            &q,
        );
        assert!(matches!(err, Err(Error::Config(_))));
        let bad = AveragingQuadrature { radial: 4, ..q };
        assert!(averaging_direct(
            &c,
            &TubeWidth::Iso(0.1),
            &|_: &[f64], _| 1.0,
            &[0.0, 0.0],
            0.0,
            &bad
        )
        .is_err());
    }

    #[test]
    fn maximal_dominates_and_scales() {
        let c = lookup::<f64>("circle2d", 2).unwrap();
        let delta = 0.1;
        let q = AveragingQuadrature::for_width(delta);
        let cfg = MaximalConfig::for_width(delta);
        let g = |p: &[f64], t: f64| (-(p[0] - 0.3).powi(2) - p[1].powi(2) - t * t).exp();
        let g2 = |p: &[f64], t: f64| 2.5 * g(p, t);
        let x = vec![vec![0.1, 0.2]];
        let n1 = nikodym_maximal(&c, &TubeWidth::Iso(delta), &g, &x, &cfg, &q).unwrap()[0];
        let n2 = nikodym_maximal(&c, &TubeWidth::Iso(delta), &g2, &x, &cfg, &q).unwrap()[0];
        assert!((n2.value - 2.5 * n1.value).abs() < 1e-12);
        for s in [-0.9, -0.2, 0.4, 1.0] {
            let a = averaging_direct(&c, &TubeWidth::Iso(delta), &g, &x[0], s, &q).unwrap();
            assert!(n1.value >= a);
        }
    }
}
