//! Sets whose `t`-slices are balls with affinely moving centres: the ball and
//! tube indicators used as test functions. Tube averages of their indicators
//! reduce to a one dimensional integral of ball intersection volumes.

use crate::curve::Curve;
use crate::error::Result;
use crate::quadrature::GaussLegendre;
use crate::scalar::{dot, norm, unit_ball_volume};
use crate::tube::ball_intersection_volume;

use super::{maximize_over_s, MaximalConfig, MaximalValue};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceProfile {
    /// Constant radius for `t ∈ I`.
    Cylinder { radius: f64 },
    /// Slices of the `(d+1)`-ball of the given radius centred at height `t0`.
    Ball { radius: f64, t0: f64 },
}

/// `{(y, t) : |y − c0 − t c1| ≤ R(t)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicedBallSet {
    pub c0: Vec<f64>,
    pub c1: Vec<f64>,
    pub profile: SliceProfile,
}

impl SlicedBallSet {
    /// The ball `B((x, t0), radius)` in `R^{d+1}`.
    pub fn ball(center: Vec<f64>, t0: f64, radius: f64) -> Self {
        let d = center.len();
        Self {
            c0: center,
            c1: vec![0.0; d],
            profile: SliceProfile::Ball { radius, t0 },
        }
    }

    /// `{(z, t) : |z − x0 + tγ(r)| ≤ radius, t ∈ I}`; its averages along `T(s)`
    /// see the direction difference `γ(s) − γ(r)`.
    pub fn reflected_tube(curve: &Curve<f64>, x0: Vec<f64>, r: f64, radius: f64) -> Self {
        let c1 = curve.eval(0, r).into_iter().map(|v| -v).collect();
        Self {
            c0: x0,
            c1,
            profile: SliceProfile::Cylinder { radius },
        }
    }

    pub fn dim(&self) -> usize {
        self.c0.len()
    }

    pub fn t_range(&self) -> (f64, f64) {
        match self.profile {
            SliceProfile::Cylinder { .. } => (-1.0, 1.0),
            SliceProfile::Ball { radius, t0 } => (t0 - radius, t0 + radius),
        }
    }

    pub fn radius_at(&self, t: f64) -> f64 {
        let (lo, hi) = self.t_range();
        if t < lo || t > hi {
            return 0.0;
        }
        match self.profile {
            SliceProfile::Cylinder { radius } => radius,
            SliceProfile::Ball { radius, t0 } => {
                (radius * radius - (t - t0).powi(2)).max(0.0).sqrt()
            }
        }
    }

    pub fn contains(&self, y: &[f64], t: f64) -> bool {
        let r = self.radius_at(t);
        let dist = norm(
            &(0..self.dim())
                .map(|j| y[j] - self.c0[j] - t * self.c1[j])
                .collect::<Vec<_>>(),
        );
        r > 0.0 && dist <= r
    }

    pub fn indicator(&self, y: &[f64], t: f64) -> f64 {
        if self.contains(y, t) {
            1.0
        } else {
            0.0
        }
    }

    /// Lebesgue measure in `R^{d+1}`.
    pub fn measure(&self) -> f64 {
        let d = self.dim();
        match self.profile {
            SliceProfile::Cylinder { radius } => {
                2.0 * unit_ball_volume::<f64>(d) * radius.powi(d as i32)
            }
            SliceProfile::Ball { radius, .. } => {
                unit_ball_volume::<f64>(d + 1) * radius.powi(d as i32 + 1)
            }
        }
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.measure().powf(1.0 / p)
    }

    /// `t ↦ (v, w)` with centre distance `|t v − w|` between the tube slice and the reflected set slice.
    fn geometry(&self, curve: &Curve<f64>, x: &[f64], s: f64) -> (Vec<f64>, Vec<f64>) {
        let g = curve.eval(0, s);
        let v = (0..self.dim()).map(|j| g[j] + self.c1[j]).collect();
        let w = (0..self.dim()).map(|j| x[j] - self.c0[j]).collect();
        (v, w)
    }

    /// `A_δ χ(x, s)`.
    pub fn average(&self, curve: &Curve<f64>, delta: f64, x: &[f64], s: f64) -> f64 {
        let d = self.dim();
        let (v, w) = self.geometry(curve, x, s);
        let (vv, vw, ww) = (dot(&v, &v), dot(&v, &w), dot(&w, &w));
        let dist = |t: f64| (vv * t * t - 2.0 * vw * t + ww).max(0.0).sqrt();
        let (lo, hi) = self.t_range();
        let (lo, hi) = (lo.max(-1.0), hi.min(1.0));
        if lo >= hi {
            return 0.0;
        }
        // nearest approach on [lo, hi]
        let t_star = if vv > 0.0 {
            (vw / vv).clamp(lo, hi)
        } else {
            lo
        };
        let rmax = match self.profile {
            SliceProfile::Cylinder { radius } | SliceProfile::Ball { radius, .. } => radius,
        };
        if dist(t_star) >= rmax + delta {
            return 0.0;
        }
        let norm_const = 2.0 * unit_ball_volume::<f64>(d) * delta.powi(d as i32);
        let gl = GaussLegendre::<f64>::new(16);
        let integral = match self.profile {
            SliceProfile::Cylinder { radius } => {
                let mut breaks = vec![lo, hi];
                for level in [radius + delta, (radius - delta).abs()] {
                    if vv > 0.0 {
                        let disc = vw * vw - vv * (ww - level * level);
                        if disc > 0.0 {
                            for root in [(vw - disc.sqrt()) / vv, (vw + disc.sqrt()) / vv] {
                                if root > lo && root < hi {
                                    breaks.push(root);
                                }
                            }
                        }
                    }
                }
                breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                let full = unit_ball_volume::<f64>(d) * radius.min(delta).powi(d as i32);
                breaks
                    .windows(2)
                    .map(|p| {
                        let (a, b) = (p[0], p[1]);
                        let m = dist(0.5 * (a + b));
                        if m >= radius + delta {
                            0.0
                        } else if m <= (radius - delta).abs() {
                            full * (b - a)
                        } else {
                            gl.integrate(a, b, |t| {
                                ball_intersection_volume(d, delta, radius, dist(t))
                            })
                        }
                    })
                    .sum()
            }
            SliceProfile::Ball { radius, t0 } => {
                // t = t0 + ρ sin θ removes the square-root endpoints
                let th = |t: f64| ((t - t0) / radius).clamp(-1.0, 1.0).asin();
                gl.composite(th(lo), th(hi), 8, |theta| {
                    let (sn, cs) = theta.sin_cos();
                    let t = t0 + radius * sn;
                    radius * cs * ball_intersection_volume(d, delta, radius * cs, dist(t))
                })
            }
        };
        integral / norm_const
    }

    /// `𝒩_δ χ(x)` over an `s`-grid with optional refinement.
    pub fn maximal(
        &self,
        curve: &Curve<f64>,
        delta: f64,
        x: &[f64],
        cfg: &MaximalConfig,
    ) -> Result<MaximalValue> {
        maximize_over_s(delta, cfg, |s| Ok(self.average(curve, delta, x, s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::lookup;
    use crate::operators::{averaging_direct, AveragingQuadrature, TubeWidth};

    #[test]
    fn analytic_average_matches_quadrature() {
        let c = lookup::<f64>("circle2d", 2).unwrap();
        let delta = 0.1;
        let set = SlicedBallSet::reflected_tube(&c, vec![0.1, -0.2], 0.3, 10.0 * delta);
        let q = AveragingQuadrature {
            t_panels: 64,
            t_order: 8,
            radial: 24,
            angular: 64,
        };
        for (x, s) in [([0.1, -0.2], 0.3), ([0.3, -0.1], 0.5), ([0.0, 0.0], -0.6)] {
            let fast = set.average(&c, delta, &x, s);
            let slow = averaging_direct(
                &c,
                &TubeWidth::Iso(delta),
                &|y: &[f64], t| set.indicator(y, t),
                &x,
                s,
                &q,
            )
            .unwrap();
            assert!((fast - slow).abs() < 2e-2, "{fast} vs {slow}");
        }
        // aligned direction: the tube sits inside the witness
        assert!((set.average(&c, delta, &[0.1, -0.2], 0.3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ball_average_is_order_delta_on_reflected_curve() {
        let c = lookup::<f64>("circle2d", 2).unwrap();
        let delta = 1.0 / 32.0;
        let set = SlicedBallSet::ball(vec![0.0, 0.0], -1.0 + delta, delta);
        let g = c.eval(0, 0.4);
        let x = [-g[0], -g[1]];
        let v = set.average(&c, delta, &x, 0.4);
        assert!(v > 0.1 * delta && v < delta, "{v}");
        assert!((set.measure() - std::f64::consts::PI * 4.0 / 3.0 * delta.powi(3)).abs() < 1e-15);
    }
}
