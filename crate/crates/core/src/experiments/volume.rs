//! `|w + T_{10δ}(r) ∩ z + T_δ(s)| ∼ δ^{d+1}/(δ + |γ(r) − γ(s)|)` on intersecting pairs.

use serde::Serialize;

use crate::curve::Curve;
use crate::error::Result;
use crate::scalar::norm;
use crate::tube::{intersection_volume_mc, predicted_intersection_volume, Tube};

#[derive(Debug, Clone, Serialize)]
pub struct VolumePair {
    pub delta: f64,
    pub r: f64,
    pub s: f64,
    pub gap: f64,
    pub measured: f64,
    pub std_error: f64,
    pub predicted: f64,
    pub ratio: f64,
    pub within: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeLawReport {
    pub curve: String,
    pub d: usize,
    pub samples: u64,
    /// `sqrt(min · max)` of the ratios: the constant that best centres the band.
    pub constant: f64,
    pub factor: f64,
    pub pairs: Vec<VolumePair>,
    pub pass: bool,
}

/// `δ ∈ {2⁻³, …, 2⁻⁶}` and `s − r ∈ {0, 2δ, 8δ, 1/2, 1}` with `r = −1/2`.
pub fn default_pairs() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for k in 3..=6 {
        let delta = 0.5f64.powi(k);
        for ds in [0.0, 2.0 * delta, 8.0 * delta, 0.5, 1.0] {
            out.push((delta, -0.5, -0.5 + ds));
        }
    }
    out
}

/// The tubes are translated so that their axes cross at `t = 0.3`.
pub fn tube_volume_experiment(
    curve: &Curve<f64>,
    pairs: &[(f64, f64, f64)],
    samples: u64,
    seed: u64,
    factor: f64,
) -> Result<VolumeLawReport> {
    let d = curve.dim();
    let mut rows = Vec::with_capacity(pairs.len());
    for (i, &(delta, r, s)) in pairs.iter().enumerate() {
        let (gr, gs) = (curve.eval(0, r), curve.eval(0, s));
        let diff: Vec<f64> = gr.iter().zip(&gs).map(|(a, b)| a - b).collect();
        let gap = norm(&diff);
        let mut shift: Vec<f64> = diff.iter().map(|v| 0.3 * v).collect();
        shift.push(0.0);
        let wide = Tube::isotropic(curve, r, 10.0 * delta)?;
        let thin = Tube::isotropic(curve, s, delta)?.with_shift(shift);
        let est = intersection_volume_mc(&wide, &thin, samples, seed.wrapping_add(i as u64));
        let predicted = predicted_intersection_volume(delta, gap, d);
        rows.push(VolumePair {
            delta,
            r,
            s,
            gap,
            measured: est.volume,
            std_error: est.std_error,
            predicted,
            ratio: est.volume / predicted,
            within: false,
        });
    }
    let positive = rows.iter().all(|p| p.ratio > 0.0);
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
        (lo.min(p.ratio), hi.max(p.ratio))
    });
    let constant = if positive { (lo * hi).sqrt() } else { 0.0 };
    for p in &mut rows {
        p.within = positive && p.ratio >= constant / factor && p.ratio <= constant * factor;
    }
    let pass = !rows.is_empty() && rows.iter().all(|p| p.within);
    Ok(VolumeLawReport {
        curve: curve.name().into(),
        d,
        samples,
        constant,
        factor,
        pairs: rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::lookup;

    #[test]
    fn coarse_law_holds() {
        let c = lookup::<f64>("circle2d", 2).unwrap();
        let pairs = [(0.125, -0.5, -0.5), (0.125, -0.5, 0.5)];
        let r = tube_volume_experiment(&c, &pairs, 50_000, 1, 4.0).unwrap();
        assert!(r.pairs[0].measured > r.pairs[1].measured);
        assert!(r.pass);
    }
}
