//! Isotropic and anisotropic tubes in `R^{d+1}`, intersection volumes and the
//! admissibility conditions on anisotropic scale vectors.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{frenet_frame, Curve};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::scalar::{dot, norm, unit_ball_volume, Real};

/// Relative slack on boundary comparisons in membership tests.
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum TubeKind<T> {
    Isotropic {
        delta: T,
    },
    /// Half-widths `r_j` along the Frenet vectors `e_j(s)`.
    Anisotropic {
        r: Vec<T>,
        frame: Vec<Vec<T>>,
    },
}

/// `w + T(s)` where `T(s)` is a δ-tube or an anisotropic `r`-tube in direction `γ(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube<T> {
    pub kind: TubeKind<T>,
    pub s: T,
    /// `γ(s)`.
    pub direction: Vec<T>,
    /// Translation `w ∈ R^{d+1}`; the last coordinate is the `t` shift.
    pub center_shift: Vec<T>,
}

impl<T: Real> Tube<T> {
    pub fn isotropic(curve: &Curve<T>, s: T, delta: T) -> Result<Self> {
        if !(delta > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "tube radius {delta} must be positive"
            )));
        }
        Ok(Self {
            kind: TubeKind::Isotropic { delta },
            s,
            direction: curve.try_eval(0, s)?,
            center_shift: vec![T::zero(); curve.dim() + 1],
        })
    }

    pub fn anisotropic(curve: &Curve<T>, s: T, r: &[T]) -> Result<Self> {
        if r.len() != curve.dim() || r.iter().any(|&x| !(x > T::zero())) {
            return Err(Error::InvalidInput(format!(
                "need {} positive half-widths",
                curve.dim()
            )));
        }
        Ok(Self {
            kind: TubeKind::Anisotropic {
                r: r.to_vec(),
                frame: frenet_frame(curve, s)?,
            },
            s,
            direction: curve.try_eval(0, s)?,
            center_shift: vec![T::zero(); curve.dim() + 1],
        })
    }

    pub fn with_shift(mut self, shift: Vec<T>) -> Self {
        assert_eq!(shift.len(), self.dim() + 1);
        self.center_shift = shift;
        self
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    /// Membership of `(y, t) ∈ R^{d+1}`.
    pub fn contains(&self, point: &[T]) -> bool {
        let d = self.dim();
        let tol = T::lit(BOUNDARY_TOL);
        let t = point[d] - self.center_shift[d];
        if t.abs() > T::one() + tol {
            return false;
        }
        let mut v = [T::zero(); 8];
        let v = &mut v[..d];
        for j in 0..d {
            v[j] = point[j] - self.center_shift[j] - t * self.direction[j];
        }
        match &self.kind {
            TubeKind::Isotropic { delta } => norm(v) <= *delta * (T::one() + tol),
            TubeKind::Anisotropic { r, frame } => frame
                .iter()
                .zip(r)
                .all(|(e, &rj)| dot(v, e).abs() <= rj * (T::one() + tol)),
        }
    }

    /// Closed form `(d+1)`-volume.
    pub fn volume(&self) -> T {
        let two = T::lit(2.0);
        match &self.kind {
            TubeKind::Isotropic { delta } => {
                two * unit_ball_volume::<T>(self.dim()) * delta.powi(self.dim() as i32)
            }
            TubeKind::Anisotropic { r, .. } => r.iter().fold(two, |acc, &x| acc * two * x),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)` in `R^{d+1}`.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        let d = self.dim();
        let mut lo = vec![T::zero(); d + 1];
        let mut hi = vec![T::zero(); d + 1];
        for j in 0..d {
            let half = match &self.kind {
                TubeKind::Isotropic { delta } => *delta,
                TubeKind::Anisotropic { r, frame } => frame
                    .iter()
                    .zip(r)
                    .fold(T::zero(), |acc, (e, &rk)| acc + rk * e[j].abs()),
            };
            let g = self.direction[j].abs();
            lo[j] = self.center_shift[j] - g - half;
            hi[j] = self.center_shift[j] + g + half;
        }
        lo[d] = self.center_shift[d] - T::one();
        hi[d] = self.center_shift[d] + T::one();
        (lo, hi)
    }
}

/// Textual tube description: `iso:s=<f>,delta=<f>` or `aniso:s=<f>,r=<f,f,...>`.
#[derive(Debug, Clone, PartialEq)]
pub enum TubeSpec {
    Iso { s: f64, delta: f64 },
    Aniso { s: f64, r: Vec<f64> },
}

impl TubeSpec {
    pub fn build<T: Real>(&self, curve: &Curve<T>) -> Result<Tube<T>> {
        match self {
            TubeSpec::Iso { s, delta } => Tube::isotropic(curve, T::lit(*s), T::lit(*delta)),
            TubeSpec::Aniso { s, r } => Tube::anisotropic(
                curve,
                T::lit(*s),
                &r.iter().map(|&x| T::lit(x)).collect::<Vec<_>>(),
            ),
        }
    }
}

impl FromStr for TubeSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidInput(format!("tube spec `{text}`: {why}"));
        let (kind, rest) = text.split_once(':').ok_or_else(|| bad("missing `kind:`"))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("bad number `{v}`")))
        };
        let (s_part, tail) = rest
            .split_once(',')
            .ok_or_else(|| bad("missing parameters"))?;
        let s = num(s_part
            .trim()
            .strip_prefix("s=")
            .ok_or_else(|| bad("expected `s=`"))?)?;
        match kind.trim() {
            "iso" => {
                let delta = num(tail
                    .trim()
                    .strip_prefix("delta=")
                    .ok_or_else(|| bad("expected `delta=`"))?)?;
                Ok(TubeSpec::Iso { s, delta })
            }
            "aniso" => {
                let list = tail
                    .trim()
                    .strip_prefix("r=")
                    .ok_or_else(|| bad("expected `r=`"))?;
                let r = list.split(',').map(num).collect::<Result<Vec<_>>>()?;
                Ok(TubeSpec::Aniso { s, r })
            }
            other => Err(bad(&format!("unknown kind `{other}`"))),
        }
    }
}

/// Half-widths of an anisotropic tube.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleVector<T>(pub Vec<T>);

impl<T: Real> ScaleVector<T> {
    pub fn isotropic(delta: T, d: usize) -> Self {
        Self(vec![delta; d])
    }

    /// `(δ, δ², …, δ^d)`.
    pub fn graded(delta: T, d: usize) -> Self {
        Self((1..=d).map(|j| delta.powi(j as i32)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    /// First violated constraint, if any.
    pub violation: Option<String>,
}

/// Checks `r_d ≤ … ≤ r_1 ≤ r_2^{1/2}` and the log-convexity constraints
/// `r_j ≤ r_i^{(k-j)/(k-i)} r_k^{(j-i)/(k-i)}` on a log scale.
pub fn check_admissible<T: Real>(r: &ScaleVector<T>) -> Result<Admissibility> {
    let r = &r.0;
    if r.iter().any(|&x| !(x > T::zero() && x < T::one())) {
        return Err(Error::InvalidInput(
            "scale vector components must lie in (0,1)".into(),
        ));
    }
    let logs: Vec<f64> = r.iter().map(|x| x.as_f64().ln()).collect();
    let tol = 1e-12;
    let d = logs.len();
    let fail = |why: String| {
        Ok(Admissibility {
            admissible: false,
            violation: Some(why),
        })
    };
    for j in 1..d {
        if logs[j] > logs[j - 1] + tol {
            return fail(format!("r_{} <= r_{}", j + 1, j));
        }
    }
    if d >= 2 && logs[0] > 0.5 * logs[1] + tol {
        return fail("r_1 <= r_2^(1/2)".into());
    }
    for i in 0..d {
        for k in (i + 1)..d {
            for j in i..=k {
                let span = (k - i) as f64;
                let rhs = ((k - j) as f64 * logs[i] + (j - i) as f64 * logs[k]) / span;
                if logs[j] > rhs + tol {
                    return fail(format!(
                        "r_{} <= r_{}^({}/{}) r_{}^({}/{})",
                        j + 1,
                        i + 1,
                        k - j,
                        k - i,
                        k + 1,
                        j - i,
                        k - i
                    ));
                }
            }
        }
    }
    Ok(Admissibility {
        admissible: true,
        violation: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub volume: f64,
    pub std_error: f64,
    pub hits: u64,
    pub samples: u64,
}

const MC_CHUNK: u64 = 1 << 14;

/// Monte-Carlo estimate of `|a ∩ b|` from points drawn uniformly in the smaller tube.
///
/// Each chunk of samples draws from its own ChaCha stream keyed by `(seed, chunk)`,
/// and hit counts are summed as integers, so the result does not depend on the
/// thread schedule.
pub fn intersection_volume_mc<T: Real>(
    a: &Tube<T>,
    b: &Tube<T>,
    samples: u64,
    seed: u64,
) -> VolumeEstimate {
    let (small, other) = if a.volume() <= b.volume() {
        (a, b)
    } else {
        (b, a)
    };
    let (lo, hi) = small.bounding_box();
    let (olo, ohi) = other.bounding_box();
    let disjoint = (0..lo.len()).any(|j| hi[j] < olo[j] || ohi[j] < lo[j]);
    if disjoint || samples == 0 {
        return VolumeEstimate {
            volume: 0.0,
            std_error: 0.0,
            hits: 0,
            samples,
        };
    }
    let d = small.dim();
    let volume = small.volume().as_f64();
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut p = vec![T::zero(); d + 1];
            let mut u = vec![0.0f64; d];
            let mut count = 0u64;
            for _ in 0..n {
                let t = 2.0 * rng.random::<f64>() - 1.0;
                match &small.kind {
                    TubeKind::Isotropic { delta } => {
                        // rejection from the cube
                        loop {
                            u.iter_mut()
                                .for_each(|x| *x = 2.0 * rng.random::<f64>() - 1.0);
                            if u.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                                break;
                            }
                        }
                        for j in 0..d {
                            p[j] = *delta * T::lit(u[j]);
                        }
                    }
                    TubeKind::Anisotropic { r, frame } => {
                        p.iter_mut().for_each(|x| *x = T::zero());
                        for (e, &rk) in frame.iter().zip(r) {
                            let c = rk * T::lit(2.0 * rng.random::<f64>() - 1.0);
                            for j in 0..d {
                                p[j] = p[j] + c * e[j];
                            }
                        }
                    }
                }
                let tt = T::lit(t);
                for ((pj, c), v) in p.iter_mut().zip(&small.center_shift).zip(&small.direction) {
                    *pj = *pj + *c + tt * *v;
                }
                p[d] = small.center_shift[d] + tt;
                if other.contains(&p) {
                    count += 1;
                }
            }
            count
        })
        .sum();
    let frac = hits as f64 / samples as f64;
    VolumeEstimate {
        volume: volume * frac,
        std_error: volume * (frac * (1.0 - frac) / samples as f64).sqrt(),
        hits,
        samples,
    }
}

/// `δ^{d+1} / (δ + |γ(r) − γ(s)|)`, the intersection law up to constants.
pub fn predicted_intersection_volume(delta: f64, gamma_gap: f64, d: usize) -> f64 {
    delta.powi(d as i32 + 1) / (delta + gamma_gap)
}

/// Volume of a spherical cap of height `h` cut from a ball of radius `r` in `R^d`.
fn cap_volume(d: usize, r: f64, h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    let ball = unit_ball_volume::<f64>(d) * r.powi(d as i32);
    if h >= 2.0 * r {
        return ball;
    }
    if h > r {
        return ball - cap_volume(d, r, 2.0 * r - h);
    }
    match d {
        1 => return h,
        2 => {
            return r * r * ((r - h) / r).clamp(-1.0, 1.0).acos()
                - (r - h) * (2.0 * r * h - h * h).max(0.0).sqrt()
        }
        3 => return std::f64::consts::PI * h * h * (3.0 * r - h) / 3.0,
        _ => {}
    }
    let x = ((2.0 * r * h - h * h) / (r * r)).clamp(0.0, 1.0);
    0.5 * ball * statrs::function::beta::beta_reg((d as f64 + 1.0) / 2.0, 0.5, x)
}

/// Exact volume of `B(c1, r1) ∩ B(c2, r2)` in `R^d` with `|c1 − c2| = dist`.
pub fn ball_intersection_volume(d: usize, r1: f64, r2: f64, dist: f64) -> f64 {
    if dist >= r1 + r2 {
        return 0.0;
    }
    if dist <= (r1 - r2).abs() {
        return unit_ball_volume::<f64>(d) * r1.min(r2).powi(d as i32);
    }
    let a = (dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist);
    cap_volume(d, r1, r1 - a) + cap_volume(d, r2, r2 - (dist - a))
}

/// Exact `|a ∩ b|` for two isotropic tubes, by quadrature in `t` of exact
/// ball-intersection volumes (the centres move affinely in `t`).
pub fn exact_isotropic_intersection(a: &Tube<f64>, b: &Tube<f64>) -> Result<f64> {
    let (TubeKind::Isotropic { delta: ra }, TubeKind::Isotropic { delta: rb }) = (&a.kind, &b.kind)
    else {
        return Err(Error::InvalidInput(
            "exact intersection needs isotropic tubes".into(),
        ));
    };
    let d = a.dim();
    let lo = (a.center_shift[d] - 1.0).max(b.center_shift[d] - 1.0);
    let hi = (a.center_shift[d] + 1.0).min(b.center_shift[d] + 1.0);
    if lo >= hi {
        return Ok(0.0);
    }
    // centre difference c(t) = u + t v
    let u: Vec<f64> = (0..d)
        .map(|j| {
            (a.center_shift[j] - a.center_shift[d] * a.direction[j])
                - (b.center_shift[j] - b.center_shift[d] * b.direction[j])
        })
        .collect();
    let v: Vec<f64> = (0..d).map(|j| a.direction[j] - b.direction[j]).collect();
    let dist = |t: f64| norm(&(0..d).map(|j| u[j] + t * v[j]).collect::<Vec<_>>());
    let mut breaks = vec![lo, hi];
    let (vv, uv, uu) = (dot(&v, &v), dot(&u, &v), dot(&u, &u));
    for level in [ra + rb, (ra - rb).abs()] {
        // |u + t v|² = level²
        if vv > 0.0 {
            let disc = uv * uv - vv * (uu - level * level);
            if disc > 0.0 {
                for root in [(-uv - disc.sqrt()) / vv, (-uv + disc.sqrt()) / vv] {
                    if root > lo && root < hi {
                        breaks.push(root);
                    }
                }
            }
        }
    }
    breaks.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let gl = GaussLegendre::<f64>::new(24);
    Ok(breaks
        .windows(2)
        .map(|w| {
            gl.composite(w[0], w[1], 8, |t| {
                ball_intersection_volume(d, *ra, *rb, dist(t))
            })
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_caps_match_incomplete_beta() {
        for d in [2usize, 3] {
            for (r, h) in [(1.0, 0.3), (0.5, 0.5), (2.0, 0.01)] {
                let ball = unit_ball_volume::<f64>(d) * f64::powi(r, d as i32);
                let x = (2.0 * r * h - h * h) / (r * r);
                let general =
                    0.5 * ball * statrs::function::beta::beta_reg((d as f64 + 1.0) / 2.0, 0.5, x);
                assert!(
                    (cap_volume(d, r, h) - general).abs() < 1e-12 * ball,
                    "d={d} r={r} h={h}"
                );
            }
        }
    }
    use crate::curve::lookup;

    #[test]
    fn axis_points_are_inside() {
        let c = lookup::<f64>("circle2d", 2).unwrap();
        let tube = Tube::isotropic(&c, 0.3, 0.1).unwrap();
        for t in [-1.0, -0.2, 0.5, 1.0] {
            let g = c.eval(0, 0.3);
            assert!(tube.contains(&[t * g[0], t * g[1], t]));
        }
        let g = c.eval(0, 0.3);
        assert!(!tube.contains(&[g[0] + 0.2, g[1], 1.0]));
    }

    #[test]
    fn anisotropic_frame_membership() {
        let c = lookup::<f64>("moment", 2).unwrap();
        let delta = 0.1;
        let tube = Tube::anisotropic(&c, 0.4, &[delta, delta * delta]).unwrap();
        let e = frenet_frame(&c, 0.4).unwrap();
        let g = c.eval(0, 0.4);
        let t = 0.3;
        let inside: Vec<f64> = (0..2)
            .map(|j| t * g[j] + delta * e[0][j])
            .chain([t])
            .collect();
        let outside: Vec<f64> = (0..2)
            .map(|j| t * g[j] + 2.0 * delta * delta * e[1][j])
            .chain([t])
            .collect();
        assert!(tube.contains(&inside));
        assert!(!tube.contains(&outside));
    }

    #[test]
    fn admissibility_examples() {
        for d in 1..=4 {
            assert!(
                check_admissible(&ScaleVector::isotropic(0.1, d))
                    .unwrap()
                    .admissible
            );
            assert!(
                check_admissible(&ScaleVector::graded(0.1, d))
                    .unwrap()
                    .admissible
            );
        }
        let bad = check_admissible(&ScaleVector(vec![0.01, 0.1])).unwrap();
        assert!(!bad.admissible);
        assert_eq!(bad.violation.as_deref(), Some("r_2 <= r_1"));
        assert!(check_admissible(&ScaleVector(vec![1.5, 0.1])).is_err());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "iso:s=0.5,delta=0.01".parse::<TubeSpec>().unwrap(),
            TubeSpec::Iso {
                s: 0.5,
                delta: 0.01
            }
        );
        assert_eq!(
            "aniso:s=-0.25,r=0.1,0.01".parse::<TubeSpec>().unwrap(),
            TubeSpec::Aniso {
                s: -0.25,
                r: vec![0.1, 0.01]
            }
        );
        assert!("box:s=0,delta=1".parse::<TubeSpec>().is_err());
        assert!("iso:s=0,radius=1".parse::<TubeSpec>().is_err());
    }

    #[test]
    fn lens_area_matches_closed_form() {
        // two unit discs at distance 1: 2π/3 − √3/2
        let exact = 2.0 * std::f64::consts::PI / 3.0 - 3f64.sqrt() / 2.0;
        assert!((ball_intersection_volume(2, 1.0, 1.0, 1.0) - exact).abs() < 1e-12);
        // two unit balls in R^3 at distance 1: 5π/12
        assert!(
            (ball_intersection_volume(3, 1.0, 1.0, 1.0) - 5.0 * std::f64::consts::PI / 12.0).abs()
                < 1e-12
        );
        assert_eq!(ball_intersection_volume(3, 1.0, 0.5, 2.0), 0.0);
    }

    #[test]
    fn self_intersection_is_full_volume() {
        let c = lookup::<f64>("circle2d", 2).unwrap();
        let tube = Tube::isotropic(&c, 0.1, 0.05).unwrap();
        let exact = exact_isotropic_intersection(&tube, &tube).unwrap();
        assert!((exact - tube.volume()).abs() < 1e-10);
        let mc = intersection_volume_mc(&tube, &tube, 200_000, 7);
        assert!((mc.volume - tube.volume()).abs() <= 3.0 * mc.std_error + 1e-12);
        let again = intersection_volume_mc(&tube, &tube, 200_000, 7);
        assert_eq!(mc, again);
    }

    #[test]
    fn crossing_tubes_match_exact_volume() {
        let c = lookup::<f64>("circle2d", 2).unwrap();
        let a = Tube::isotropic(&c, -0.5, 0.2).unwrap();
        let b = Tube::isotropic(&c, 0.4, 0.05)
            .unwrap()
            .with_shift(vec![0.1, -0.05, 0.0]);
        let exact = exact_isotropic_intersection(&a, &b).unwrap();
        let mc = intersection_volume_mc(&a, &b, 400_000, 3);
        assert!(exact > 0.0);
        assert!(
            (mc.volume - exact).abs() < 4.0 * mc.std_error,
            "{} vs {exact}",
            mc.volume
        );
    }
}
