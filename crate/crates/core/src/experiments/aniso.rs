//! Admissibility of the isotropic and graded scale families, and the
//! isotropic sandwich for `r = (δ,…,δ)` on symbols and on tubes.

use std::sync::Arc;

use serde::Serialize;

use crate::curve::Curve;
use crate::cutoffs::CutoffLibrary;
use crate::error::{Error, Result};
use crate::quadrature::Halton;
use crate::symbols::{isotropic_sandwich, sphere_point, SandwichReport};
use crate::tube::{check_admissible, Admissibility, ScaleVector, Tube};

#[derive(Debug, Clone, Serialize)]
pub struct TubeSandwich {
    pub samples: usize,
    /// Points of the δ-tube outside the box tube.
    pub inner_violations: usize,
    /// Points of the box tube outside the `δ√d`-tube.
    pub outer_violations: usize,
    pub passes: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnisoPoint {
    pub delta: f64,
    pub isotropic: Admissibility,
    pub graded: Admissibility,
    pub symbol: SandwichReport,
    pub tube: TubeSandwich,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnisoReport {
    pub curve: String,
    pub d: usize,
    pub points: Vec<AnisoPoint>,
    pub pass: bool,
}

/// `isotropic(δ) ⊆ box(δ,…,δ) ⊆ isotropic(δ√d)` at points drawn around the axis at `s`.
pub fn tube_sandwich(
    curve: &Curve<f64>,
    s: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<TubeSandwich> {
    let d = curve.dim();
    let outer_r = delta * (d as f64).sqrt();
    let inner = Tube::isotropic(curve, s, delta)?;
    let outer = Tube::isotropic(curve, s, outer_r)?;
    let boxed = Tube::anisotropic(curve, s, &vec![delta; d])?;
    let (mut vin, mut vout) = (0, 0);
    for u in Halton::new(d + 1, 5 + seed).take(samples) {
        let t = -1.0 + 2.0 * u[0];
        let dir = sphere_point(&u[1..d], d);
        let rad = 1.2 * outer_r * u[d];
        let mut y: Vec<f64> = curve
            .eval(0, s)
            .iter()
            .zip(&dir)
            .map(|(g, e)| t * g + rad * e)
            .collect();
        y.push(t);
        if inner.contains(&y) && !boxed.contains(&y) {
            vin += 1;
        }
        if boxed.contains(&y) && !outer.contains(&y) {
            vout += 1;
        }
    }
    Ok(TubeSandwich {
        samples,
        inner_violations: vin,
        outer_violations: vout,
        passes: vin == 0 && vout == 0,
    })
}

pub fn aniso_admissibility_experiment(
    curve: &Curve<f64>,
    deltas: &[f64],
    samples: usize,
    seed: u64,
) -> Result<AnisoReport> {
    if deltas.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let d = curve.dim();
    let lib = Arc::new(CutoffLibrary::new());
    let points = deltas
        .iter()
        .map(|&delta| {
            Ok(AnisoPoint {
                delta,
                isotropic: check_admissible(&ScaleVector::isotropic(delta, d))?,
                graded: check_admissible(&ScaleVector::graded(delta, d))?,
                symbol: isotropic_sandwich(&lib, curve, delta, samples)?,
                tube: tube_sandwich(curve, 0.3, delta, samples, seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = points
        .iter()
        .all(|p| p.isotropic.admissible && p.graded.admissible && p.symbol.passes && p.tube.passes);
    Ok(AnisoReport {
        curve: curve.name().into(),
        d,
        points,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sandwich_samples_hit_both_shells() {
        let c = crate::curve::lookup::<f64>("circle2d", 2).unwrap();
        let r = tube_sandwich(&c, 0.3, 0.05, 1000, 1).unwrap();
        assert!(r.passes);
    }
}
