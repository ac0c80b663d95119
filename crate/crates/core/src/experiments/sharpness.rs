//! The two sharpness constructions and the Theorem-1 trend, measured on
//! ball and tube indicators whose averages are computed in closed form.

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{scaling_law_fit, Claim, ScalingFit};
use crate::curve::Curve;
use crate::error::Result;
use crate::operators::{MaximalConfig, SliceProfile, SlicedBallSet};
use crate::quadrature::Halton;
use crate::scalar::{norm, unit_ball_volume};
use crate::symbols::sphere_point;

/// Where probe points are drawn.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ProbeDesign {
    /// Nested cubes of half-sizes `inner·2^j` around `focus`, `per_shell` points in each shell.
    Shells {
        focus: Vec<f64>,
        inner: f64,
        shells: usize,
        per_shell: usize,
    },
    /// `y = c + t0·γ(s) + u`, `s ∈ I`, `u ∈ B(0, radius)`, reweighted by the local multiplicity.
    CurveNeighbourhood {
        c: Vec<f64>,
        t0: f64,
        radius: f64,
        samples: usize,
    },
}

/// Weighted probe values: `∫ F ≈ Σ w_i F(y_i)`.
#[derive(Debug, Clone, Default)]
pub struct ProbeField {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl ProbeField {
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    /// Measure of `{lo < F ≤ hi}`.
    pub fn level_measure(&self, lo: f64, hi: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v > lo && v <= hi)
            .map(|(w, _)| w)
            .sum()
    }

    pub fn superlevel_measure(&self, level: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v >= level)
            .map(|(w, _)| w)
            .sum()
    }
}

fn probe_points(curve: &Curve<f64>, design: &ProbeDesign, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let d = curve.dim();
    let skip = 1 + (seed % 1_000_003) * 7919;
    match design {
        ProbeDesign::Shells {
            focus,
            inner,
            shells,
            per_shell,
        } => {
            let mut pts = Vec::new();
            let mut wts = Vec::new();
            for j in 0..=*shells {
                let half = inner * 2f64.powi(j as i32);
                let hole = if j == 0 { 0.0 } else { half / 2.0 };
                let vol = (2.0 * half).powi(d as i32) - (2.0 * hole).powi(d as i32);
                let mut accepted = 0;
                for u in Halton::new(d, skip + 1_000_000 * j as u64) {
                    let y: Vec<f64> = (0..d)
                        .map(|k| focus[k] + half * (2.0 * u[k] - 1.0))
                        .collect();
                    if (0..d).all(|k| (y[k] - focus[k]).abs() < hole) {
                        continue;
                    }
                    pts.push(y);
                    accepted += 1;
                    if accepted == *per_shell {
                        break;
                    }
                }
                wts.extend(std::iter::repeat_n(vol / *per_shell as f64, *per_shell));
            }
            (pts, wts)
        }
        ProbeDesign::CurveNeighbourhood {
            c,
            t0,
            radius,
            samples,
        } => {
            let centre = |s: f64| -> Vec<f64> {
                curve
                    .eval(0, s)
                    .iter()
                    .zip(c)
                    .map(|(g, ci)| ci + t0 * g)
                    .collect()
            };
            // multiplicity `|{s' ∈ I : |y − centre(s')| ≤ radius}|` on a fine scan
            let scan_n = ((2.0 / (radius / 16.0)).ceil() as usize).max(64);
            let scan: Vec<Vec<f64>> = (0..=scan_n)
                .map(|k| centre(-1.0 + 2.0 * k as f64 / scan_n as f64))
                .collect();
            let ball = unit_ball_volume::<f64>(d) * radius.powi(d as i32);
            Halton::new(d + 1, skip)
                .take(*samples)
                .map(|u| {
                    let s = -1.0 + 2.0 * u[0];
                    let dir = sphere_point(&u[1..d], d);
                    let r = radius * u[d].powf(1.0 / d as f64);
                    let y: Vec<f64> = centre(s).iter().zip(&dir).map(|(a, b)| a + r * b).collect();
                    let inside = scan
                        .iter()
                        .filter(|p| {
                            p.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                                <= radius * radius
                        })
                        .count();
                    let mult = (inside.max(1) as f64) * 2.0 / (scan_n + 1) as f64;
                    let weight = 2.0 * ball / mult / *samples as f64;
                    (y, weight)
                })
                .unzip()
        }
    }
}

/// `𝒩_δ χ_E` at the probe points.
pub fn probe_maximal(
    set: &SlicedBallSet,
    curve: &Curve<f64>,
    delta: f64,
    design: &ProbeDesign,
    seed: u64,
) -> Result<ProbeField> {
    let (points, weights) = probe_points(curve, design, seed);
    let cfg = MaximalConfig::for_width(delta);
    let values = points
        .par_iter()
        .map(|y| set.maximal(curve, delta, y, &cfg).map(|m| m.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeField {
        points,
        weights,
        values,
    })
}

/// Probe layout adapted to the witness.
pub fn default_design(
    set: &SlicedBallSet,
    curve: &Curve<f64>,
    delta: f64,
    budget: usize,
) -> ProbeDesign {
    match set.profile {
        SliceProfile::Ball { radius, t0 } => {
            let sup_gamma = (0..=64)
                .map(|k| norm(&curve.eval(0, -1.0 + k as f64 / 32.0)))
                .fold(0.0, f64::max);
            ProbeDesign::CurveNeighbourhood {
                c: set.c0.clone(),
                t0,
                radius: (radius + delta) * 1.001 + radius * sup_gamma,
                samples: budget,
            }
        }
        SliceProfile::Cylinder { radius } => {
            let reach = (0..=64)
                .map(|k| {
                    norm(
                        &curve
                            .eval(0, -1.0 + k as f64 / 32.0)
                            .iter()
                            .zip(&set.c1)
                            .map(|(a, b)| a + b)
                            .collect::<Vec<_>>(),
                    )
                })
                .fold(0.0, f64::max);
            let inner = radius + delta;
            let shells = ((reach + inner) / inner).log2().ceil().max(0.0) as usize;
            ProbeDesign::Shells {
                focus: set.c0.clone(),
                inner,
                shells,
                per_shell: budget / (shells + 1),
            }
        }
    }
}

pub fn witness_hash(set: &SlicedBallSet) -> String {
    let mut h = Sha256::new();
    h.update(format!("{set:?}").as_bytes());
    format!("{:x}", h.finalize())
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximalNorm {
    pub label: String,
    pub witness_hash: String,
    pub p: f64,
    pub maximal_norm: f64,
    pub witness_norm: f64,
    pub ratio: f64,
    pub probes: usize,
}

/// `‖𝒩_δ χ_E‖_p / ‖χ_E‖_p`, a lower bound for the operator norm.
pub fn maximal_l2_norm(
    label: &str,
    set: &SlicedBallSet,
    curve: &Curve<f64>,
    delta: f64,
    p: f64,
    budget: usize,
    seed: u64,
) -> Result<(MaximalNorm, ProbeField)> {
    let design = default_design(set, curve, delta, budget);
    let field = probe_maximal(set, curve, delta, &design, seed)?;
    let maximal_norm = field.lp_norm(p);
    let witness_norm = set.lp_norm(p);
    Ok((
        MaximalNorm {
            label: label.into(),
            witness_hash: witness_hash(set),
            p,
            maximal_norm,
            witness_norm,
            ratio: maximal_norm / witness_norm,
            probes: field.values.len(),
        },
        field,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct RangeReport {
    pub delta: f64,
    pub p: f64,
    /// `min N g_δ / δ` over points within `δ` of the reflected curve.
    pub c_min: f64,
    pub neighbourhood_probes: usize,
    /// `|{N g_δ ≥ (c_min/2) δ}|`.
    pub superlevel_measure: f64,
    /// `superlevel_measure / δ^{d−1}`.
    pub measure_ratio: f64,
    /// `(c_min/2) δ |E|^{1/p} / ‖g_δ‖_p` from Chebyshev.
    pub lower_bound: f64,
    pub max_value: f64,
}

/// `g_δ` is the ball of radius `δ` centred at `(0, −1+δ)`: tubes meet it near
/// their `t = −1` end, so `𝒩 g_δ ≳ δ` near `−γ`.
pub fn sharpness_range_experiment(
    curve: &Curve<f64>,
    delta: f64,
    p: f64,
    probes: usize,
    seed: u64,
) -> Result<RangeReport> {
    let d = curve.dim();
    let t0 = -1.0 + delta;
    let set = SlicedBallSet::ball(vec![0.0; d], t0, delta);
    let cfg = MaximalConfig::for_width(delta);
    let near: Vec<Vec<f64>> = Halton::new(d + 1, 11 + seed)
        .take(200)
        .map(|u| {
            let g = curve.eval(0, -1.0 + 2.0 * u[0]);
            let dir = sphere_point(&u[1..d], d);
            let r = delta * u[d].powf(1.0 / d as f64);
            g.iter().zip(&dir).map(|(a, b)| t0 * a + r * b).collect()
        })
        .collect();
    let near_vals = near
        .par_iter()
        .map(|y| set.maximal(curve, delta, y, &cfg).map(|m| m.value))
        .collect::<Result<Vec<_>>>()?;
    let c_min = near_vals.iter().copied().fold(f64::INFINITY, f64::min) / delta;
    let field = probe_maximal(
        &set,
        curve,
        delta,
        &default_design(&set, curve, delta, probes),
        seed,
    )?;
    let level = 0.5 * c_min * delta;
    let superlevel_measure = field.superlevel_measure(level);
    Ok(RangeReport {
        delta,
        p,
        c_min,
        neighbourhood_probes: near.len(),
        superlevel_measure,
        measure_ratio: superlevel_measure / delta.powi(d as i32 - 1),
        lower_bound: level * superlevel_measure.powf(1.0 / p) / set.lp_norm(p),
        max_value: field.values.iter().copied().fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSetReport {
    pub delta: f64,
    pub p: f64,
    pub k_max: usize,
    /// No `k ≥ 1` fits below `log₂ δ⁻¹`.
    pub degenerate: bool,
    /// `|A_k|` with `A_k = {2^{−k−1} < 𝒩f ≤ 2^{−k}}`.
    pub level_measures: Vec<f64>,
    /// `|A_k| / (2^{2k} δ^d)`.
    pub ratios: Vec<f64>,
    /// `min_k` of the ratios: the single constant `c`.
    pub c: f64,
    pub ratio_spread: f64,
    /// δ-neighbourhood of `{x + t(γ(r) − γ(s)) : t ∈ I, 2^{k−1/2}δ ≤ |γ(s) − γ(r)| < 2^{k+1/2}δ}`.
    pub cone_measures: Vec<f64>,
    /// `cone_measures[k] / (2^{2k} δ^d)`.
    pub cone_ratios: Vec<f64>,
    pub cone_c: f64,
    pub cone_spread: f64,
    /// Median of `2^k 𝒩f` over probes inside the `k`-th cone.
    pub cone_levels: Vec<f64>,
    pub per_k_pass: bool,
    /// `Σ_k 2^{−2k}|A_k|`.
    pub weighted_sum: f64,
    /// `Σ_k 2^{−kp}|A_k| ≤ 2^p ‖𝒩f‖_p^p`.
    pub chebyshev_holds: bool,
    pub maximal_norm: f64,
    pub witness_norm: f64,
    /// `(Σ_k 2^{−2k}|A_k|)^{1/p} / ‖f‖_p`.
    pub lower_bound: f64,
    pub max_value: f64,
    pub min_value: f64,
    pub probes: usize,
}

/// Maximal spread of the per-`k` ratios accepted as "one constant".
pub const LEVEL_RATIO_SPREAD: f64 = 16.0;

/// `f_δ` is the indicator of `{(z, t) : |z − x + tγ(r)| ≤ 10δ, t ∈ I}`.
pub fn sharpness_log_experiment(
    curve: &Curve<f64>,
    delta: f64,
    p: f64,
    x: &[f64],
    r: f64,
    probes: usize,
    seed: u64,
) -> Result<LevelSetReport> {
    let d = curve.dim();
    let set = SlicedBallSet::reflected_tube(curve, x.to_vec(), r, 10.0 * delta);
    let field = probe_maximal(
        &set,
        curve,
        delta,
        &default_design(&set, curve, delta, probes),
        seed,
    )?;
    let k_max = (1.0 / delta).log2().floor().max(0.0) as usize;
    let level_measures: Vec<f64> = (0..=k_max)
        .map(|k| field.level_measure(0.5f64.powi(k as i32 + 1), 0.5f64.powi(k as i32)))
        .collect();
    let ratios: Vec<f64> = level_measures
        .iter()
        .enumerate()
        .map(|(k, m)| m / (4f64.powi(k as i32) * delta.powi(d as i32)))
        .collect();
    let c = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let cmax = ratios.iter().copied().fold(0.0, f64::max);
    let weighted_sum: f64 = level_measures
        .iter()
        .enumerate()
        .map(|(k, m)| m * 0.25f64.powi(k as i32))
        .sum();
    let cheb: f64 = level_measures
        .iter()
        .enumerate()
        .map(|(k, m)| m * 0.5f64.powf(k as f64 * p))
        .sum();
    let maximal_norm = field.lp_norm(p);
    let witness_norm = set.lp_norm(p);
    let per_cone = (probes / (k_max + 1)).max(64);
    let cones = (0..=k_max)
        .map(|k| cone_probe(&set, curve, delta, x, r, k, per_cone, seed))
        .collect::<Result<Vec<_>>>()?;
    let cone_ratios: Vec<f64> = cones
        .iter()
        .enumerate()
        .map(|(k, c)| c.measure / (4f64.powi(k as i32) * delta.powi(d as i32)))
        .collect();
    let cone_c = cone_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let cone_spread = if cone_c > 0.0 {
        cone_ratios.iter().copied().fold(0.0, f64::max) / cone_c
    } else {
        f64::INFINITY
    };
    Ok(LevelSetReport {
        delta,
        p,
        k_max,
        degenerate: k_max < 1,
        ratio_spread: if c > 0.0 { cmax / c } else { f64::INFINITY },
        cone_c,
        cone_spread,
        per_k_pass: cone_c > 0.0 && cone_spread <= LEVEL_RATIO_SPREAD,
        cone_measures: cones.iter().map(|c| c.measure).collect(),
        cone_ratios,
        cone_levels: cones.iter().map(|c| c.level).collect(),
        level_measures,
        ratios,
        c,
        weighted_sum,
        chebyshev_holds: cheb <= 2f64.powf(p) * maximal_norm.powf(p) * (1.0 + 1e-12),
        maximal_norm,
        witness_norm,
        lower_bound: weighted_sum.powf(1.0 / p) / witness_norm,
        max_value: field.values.iter().copied().fold(0.0, f64::max),
        min_value: field.values.iter().copied().fold(f64::INFINITY, f64::min),
        probes: field.values.len(),
    })
}

struct ConeProbe {
    measure: f64,
    level: f64,
}

/// Points of the δ-neighbourhood of the `k`-th cone at `x`, and `𝒩f` on a few of them.
#[allow(clippy::too_many_arguments)]
fn cone_probe(
    set: &SlicedBallSet,
    curve: &Curve<f64>,
    delta: f64,
    x: &[f64],
    r: f64,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<ConeProbe> {
    const LEVEL_PROBES: usize = 96;
    let d = curve.dim();
    let lo = delta * 2f64.powi(k as i32) / std::f64::consts::SQRT_2;
    let speed = (0..=64)
        .map(|j| norm(&curve.eval(1, -1.0 + j as f64 / 32.0)))
        .fold(0.0, f64::max);
    let n = ((16.0 * speed / delta).ceil() as usize).max(64);
    let gr = curve.eval(0, r);
    let chords: Vec<Vec<f64>> = (0..=n)
        .map(|j| {
            curve
                .eval(0, -1.0 + 2.0 * j as f64 / n as f64)
                .iter()
                .zip(&gr)
                .map(|(a, b)| b - a)
                .collect::<Vec<_>>()
        })
        .filter(|v| (lo..2.0 * lo).contains(&norm(v)))
        .collect();
    if chords.is_empty() {
        return Ok(ConeProbe {
            measure: 0.0,
            level: 0.0,
        });
    }
    let half = 2.0 * lo + delta;
    let near = |y: &[f64]| {
        chords.iter().any(|v| {
            let vv: f64 = v.iter().map(|a| a * a).sum();
            let t = (y
                .iter()
                .zip(x)
                .zip(v)
                .map(|((a, b), c)| (a - b) * c)
                .sum::<f64>()
                / vv)
                .clamp(-1.0, 1.0);
            y.iter()
                .zip(x)
                .zip(v)
                .map(|((a, b), c)| (a - b - t * c).powi(2))
                .sum::<f64>()
                <= delta * delta
        })
    };
    let skip = 1 + (seed % 1_000_003) * 7919 + 10_000_000 * k as u64;
    let hits: Vec<Vec<f64>> = Halton::new(d, skip)
        .take(samples)
        .map(|u| {
            (0..d)
                .map(|j| x[j] + half * (2.0 * u[j] - 1.0))
                .collect::<Vec<_>>()
        })
        .filter(|y| near(y))
        .collect();
    let measure = (2.0 * half).powi(d as i32) * hits.len() as f64 / samples as f64;
    let cfg = MaximalConfig::for_width(delta);
    let stride = (hits.len() / LEVEL_PROBES).max(1);
    let mut levels = hits
        .iter()
        .step_by(stride)
        .map(|y| {
            set.maximal(curve, delta, y, &cfg)
                .map(|m| m.value * 2f64.powi(k as i32))
        })
        .collect::<Result<Vec<_>>>()?;
    levels.sort_by(f64::total_cmp);
    let level = levels.get(levels.len() / 2).copied().unwrap_or(0.0);
    Ok(ConeProbe { measure, level })
}

#[derive(Debug, Clone, Serialize)]
pub struct LogSweepReport {
    pub runs: Vec<LevelSetReport>,
    pub fit: ScalingFit,
}

/// Lower bounds over a `δ` sweep, fitted against `log δ⁻¹` with claimed exponent `1/p`.
pub fn sharpness_log_sweep(
    curve: &Curve<f64>,
    deltas: &[f64],
    p: f64,
    slack: f64,
    probes: usize,
    seed: u64,
) -> Result<LogSweepReport> {
    let x = vec![0.0; curve.dim()];
    let runs = deltas
        .iter()
        .map(|&dl| sharpness_log_experiment(curve, dl, p, &x, 0.0, probes, seed))
        .collect::<Result<Vec<_>>>()?;
    let scales: Vec<f64> = deltas.iter().map(|dl| (1.0 / dl).ln()).collect();
    let lbs: Vec<f64> = runs.iter().map(|r| r.lower_bound).collect();
    let fit = scaling_law_fit(&scales, &lbs, 1.0 / p, slack, Claim::Lower)?;
    Ok(LogSweepReport { runs, fit })
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem1Point {
    pub delta: f64,
    pub witnesses: Vec<MaximalNorm>,
    pub best: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem1Report {
    pub d: usize,
    pub points: Vec<Theorem1Point>,
    pub fit: ScalingFit,
}

/// The adversarial family at scale `δ`: the reflected-curve ball and tubes of radius `δ` and `10δ`.
pub fn adversarial_family(curve: &Curve<f64>, delta: f64) -> Vec<(String, SlicedBallSet)> {
    let d = curve.dim();
    let origin = vec![0.0; d];
    vec![
        (
            "ball".into(),
            SlicedBallSet::ball(origin.clone(), -1.0 + delta, delta),
        ),
        (
            "tube-1".into(),
            SlicedBallSet::reflected_tube(curve, origin.clone(), 0.0, delta),
        ),
        (
            "tube-10".into(),
            SlicedBallSet::reflected_tube(curve, origin, 0.0, 10.0 * delta),
        ),
    ]
}

/// Empirical `L²` lower bounds for `𝒩_δ` over `δ`, fitted against the claimed `d/2`.
pub fn theorem1_scaling(
    curve: &Curve<f64>,
    deltas: &[f64],
    slack: f64,
    probes: usize,
    seed: u64,
) -> Result<Theorem1Report> {
    let d = curve.dim();
    let points = deltas
        .iter()
        .map(|&delta| {
            let witnesses = adversarial_family(curve, delta)
                .iter()
                .map(|(label, set)| {
                    maximal_l2_norm(label, set, curve, delta, 2.0, probes, seed).map(|r| r.0)
                })
                .collect::<Result<Vec<_>>>()?;
            let best = witnesses.iter().map(|w| w.ratio).fold(0.0, f64::max);
            Ok(Theorem1Point {
                delta,
                witnesses,
                best,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scales: Vec<f64> = deltas.iter().map(|dl| (1.0 / dl).ln()).collect();
    let norms: Vec<f64> = points.iter().map(|p| p.best).collect();
    let fit = scaling_law_fit(&scales, &norms, d as f64 / 2.0, slack, Claim::Upper)?;
    Ok(Theorem1Report { d, points, fit })
}
