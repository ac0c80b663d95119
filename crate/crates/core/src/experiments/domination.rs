//! Pointwise domination of the direct tube average by `𝒜[a_δ, γ]` on
//! nonnegative fields.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::keyed_rng;
use crate::curve::Curve;
use crate::cutoffs::CutoffLibrary;
use crate::error::Result;
use crate::field::{AxisLabel, Field, GridSpec};
use crate::operators::{averaging_direct, averaging_fio, AveragingQuadrature, TubeWidth};
use crate::symbols::build_a_delta;

/// Gaussian bumps per field.
const BUMPS: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct DominationPoint {
    pub delta: f64,
    pub fields: usize,
    pub points: usize,
    /// `max A_δ g / 𝒜[a_δ]g` over the samples: the fitted `C_d`.
    pub constant: f64,
    /// Samples with `𝒜[a_δ]g ≤ 0` while `A_δ g > 0`.
    pub violations: usize,
    /// `max |Im 𝒜[a_δ]g| / max |𝒜[a_δ]g|`.
    pub imaginary_part: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    pub curve: String,
    pub points: Vec<DominationPoint>,
    /// `max C / min C` across `δ`.
    pub spread: f64,
}

struct Bump {
    centre: Vec<f64>,
    t: f64,
    amp: f64,
}

/// Compares `A_δ g(x, s)` with `𝒜[a_δ, γ] g(x, s)` at grid points near the
/// support of fields made of bumps of width `δ`.
pub fn backend_domination(
    curve: &Curve<f64>,
    deltas: &[f64],
    fields: usize,
    points_per_field: usize,
    seed: u64,
) -> Result<DominationReport> {
    let d = curve.dim();
    let lib = Arc::new(CutoffLibrary::new());
    let mut out = Vec::with_capacity(deltas.len());
    for (di, &delta) in deltas.iter().enumerate() {
        let a = build_a_delta(&lib, delta, d)?;
        let nx = ((16.0 / delta).ceil() as usize).next_power_of_two().max(32);
        let grid = GridSpec::new(d, 2.0, nx, 32)?;
        let q = AveragingQuadrature::for_width(delta);
        let width = TubeWidth::Iso(delta);
        let inv = 1.0 / (2.0 * delta * delta);
        let (mut constant, mut violations, mut imag) = (0.0f64, 0, 0.0f64);
        for f in 0..fields {
            let mut rng = keyed_rng(seed, (di * fields + f) as u64);
            let bumps: Vec<Bump> = (0..BUMPS)
                .map(|_| Bump {
                    centre: (0..d).map(|_| rng.random::<f64>() - 0.5).collect(),
                    t: 1.6 * rng.random::<f64>() - 0.8,
                    amp: 0.2 + rng.random::<f64>(),
                })
                .collect();
            let g = |x: &[f64], t: f64| -> f64 {
                bumps
                    .iter()
                    .map(|b| {
                        let r2: f64 = x
                            .iter()
                            .zip(&b.centre)
                            .map(|(u, v)| (u - v).powi(2))
                            .sum::<f64>()
                            + (t - b.t).powi(2);
                        b.amp * (-r2 * inv).exp()
                    })
                    .sum()
            };
            let field = Field::from_real_fn(grid, AxisLabel::T, 1.0, g);
            let avg = averaging_fio(&a, curve, &field)?;
            let peak = avg.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            imag = imag.max(avg.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / peak);
            let per = grid.points_per_slice();
            for _ in 0..points_per_field {
                let b = &bumps[rng.random_range(0..BUMPS)];
                let js = grid.nt + rng.random_range(0..grid.nt) - grid.nt / 2;
                let s = avg.axis_coord(js);
                let gamma = curve.eval(0, s);
                let mut flat = 0;
                for (c, g) in b.centre.iter().zip(&gamma) {
                    let y = c + b.t * g + 2.0 * delta * (2.0 * rng.random::<f64>() - 1.0);
                    let k = ((y + grid.x_half) / grid.h())
                        .round()
                        .clamp(0.0, (nx - 1) as f64) as usize;
                    flat = flat * nx + k;
                }
                let x = grid.point(flat);
                let direct = averaging_direct(curve, &width, &g, &x, s, &q)?;
                let fio = avg.values[js * per + flat].re;
                if fio <= 0.0 {
                    if direct > 0.0 {
                        violations += 1;
                    }
                } else {
                    constant = constant.max(direct / fio);
                }
            }
        }
        out.push(DominationPoint {
            delta,
            fields,
            points: fields * points_per_field,
            constant,
            violations,
            imaginary_part: imag,
        });
    }
    let hi = out.iter().map(|p| p.constant).fold(0.0, f64::max);
    let lo = out.iter().map(|p| p.constant).fold(f64::INFINITY, f64::min);
    Ok(DominationReport {
        curve: curve.name().into(),
        points: out,
        spread: hi / lo,
    })
}
