//! Kernel estimates for `𝒜𝒜*`: the non-stationary base case and the `n = 0`
//! piece of the decomposition near `Γ`.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::audit::{n0_schur_stage, Decomposition, N0Schur};
use crate::curve::Curve;
use crate::cutoffs::CutoffLibrary;
use crate::error::{Error, Result};
use crate::operators::{decay_fit, kernel_k, schur_bound, DecayFit, KernelQuadrature};
use crate::scalar::norm;
use crate::symbols::{d_s_symbol, Separable, SupportHint, Symbol, SymbolMeta};

/// A normalized Schur sum may exceed the one at the smallest `λ` by at most this factor.
pub const SCHUR_GROWTH: f64 = 2.0;

/// Decay exponent required of `|K|` in `1 + |t − t'|λ`.
pub const REQUIRED_DECAY: f64 = 2.0;

/// `β(|ξ|/λ) ζ(2(θ − π/2)) · ζ(2s) · χ̃_I(t)`: on its support `|⟨γ'(s),ξ⟩| ≥ sin(π/2 − 1)|ξ|` for the circle.
pub fn base_case_symbol(lib: &Arc<CutoffLibrary>, lambda: f64) -> Symbol<f64> {
    let (l1, l2, l3) = (lib.clone(), lib.clone(), lib.clone());
    let xi = Arc::new(move |x: &[f64]| {
        let r = norm(x);
        if r == 0.0 {
            return 0.0;
        }
        let theta = x[1].atan2(x[0]);
        l1.beta(r / lambda) * l1.zeta(2.0 * (theta - FRAC_PI_2))
    });
    let meta = SymbolMeta {
        id: format!("nonstationary(lambda={lambda})"),
        lambda,
        a_const: 1.0,
        l: 1,
        curve: "circle2d".into(),
    };
    let support = SupportHint {
        xi_min: lambda / 2.0,
        xi_max: 2.0 * lambda,
        s: (-0.5, 0.5),
        t: (-1.0, 1.0),
    };
    Symbol::separable(
        meta,
        support,
        2,
        Separable {
            xi,
            s: Arc::new(move |s| l2.zeta(2.0 * s)),
            t: Arc::new(move |t| l3.chi_tilde_i(t)),
        },
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct BaseCasePoint {
    pub lambda: f64,
    /// `(1 + |t − t'|λ, |K[a]|)` and `(1 + |t − t'|λ, |K[𝔡_s a]|/λ²)`.
    pub profile: Vec<(f64, f64, f64)>,
    pub decay: DecayFit,
    pub decay_ds: DecayFit,
    /// `λ · sup ∫|K[a]| dt`.
    pub schur0: f64,
    /// `λ⁻¹ · sup ∫|K[𝔡_s a]| dt`.
    pub schur1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaseCaseReport {
    pub points: Vec<BaseCasePoint>,
    pub min_decay: f64,
    pub schur0_growth: f64,
    pub schur1_growth: f64,
    pub pass: bool,
}

fn growth(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let first = values.clone().next().unwrap_or(0.0);
    values.fold(0.0f64, |m, v| m.max(v / first))
}

/// Decay profile and Schur sums of the non-stationary circle symbol at each `λ`.
pub fn base_case_experiment(lambdas: &[f64], q: &KernelQuadrature) -> Result<BaseCaseReport> {
    if lambdas.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let lib = Arc::new(CutoffLibrary::new());
    let curve = crate::curve::lookup::<f64>("circle2d", 2)?;
    let mut lambdas = lambdas.to_vec();
    lambdas.sort_by(f64::total_cmp);
    let points = lambdas
        .par_iter()
        .map(|&lambda| base_case_point(&lib, &curve, lambda, q))
        .collect::<Result<Vec<_>>>()?;
    let min_decay = points
        .iter()
        .flat_map(|p| [p.decay.exponent, p.decay_ds.exponent])
        .fold(f64::INFINITY, f64::min);
    let schur0_growth = growth(points.iter().map(|p| p.schur0));
    let schur1_growth = growth(points.iter().map(|p| p.schur1));
    Ok(BaseCaseReport {
        pass: min_decay >= REQUIRED_DECAY
            && schur0_growth <= SCHUR_GROWTH
            && schur1_growth <= SCHUR_GROWTH,
        points,
        min_decay,
        schur0_growth,
        schur1_growth,
    })
}

fn base_case_point(
    lib: &Arc<CutoffLibrary>,
    curve: &Curve<f64>,
    lambda: f64,
    q: &KernelQuadrature,
) -> Result<BaseCasePoint> {
    let a = base_case_symbol(lib, lambda);
    let da = d_s_symbol(&a, curve).combined;
    let xi = vec![0.0, lambda];
    let (sec, dsec) = (a.section(&xi), da.section(&xi));
    let tprime = -1.0;
    let profile: Vec<(f64, f64, f64)> = (0..=40)
        .map(|k| {
            let u = 2f64.powf(-(lambda.log2()) + k as f64 * (lambda.log2() + 1.0) / 40.0);
            let k0 = kernel_k(&sec, curve, &xi, tprime, tprime + u, q).norm();
            let k1 = kernel_k(&dsec, curve, &xi, tprime, tprime + u, q).norm() / (lambda * lambda);
            (1.0 + u * lambda, k0, k1)
        })
        .collect();
    let diag = profile[0].1.max(f64::MIN_POSITIVE);
    let diag_ds = profile[0].2.max(f64::MIN_POSITIVE);
    let decay = decay_fit(
        &profile.iter().map(|p| (p.0, p.1)).collect::<Vec<_>>(),
        1e-11 * diag,
    )?;
    let decay_ds = decay_fit(
        &profile.iter().map(|p| (p.0, p.2)).collect::<Vec<_>>(),
        1e-9 * diag_ds,
    )?;
    let xis: Vec<Vec<f64>> = [FRAC_PI_2 - 0.4, FRAC_PI_2, FRAC_PI_2 + 0.4]
        .iter()
        .map(|th| vec![lambda * th.cos(), lambda * th.sin()])
        .collect();
    let tps = [-0.9, 0.0, 0.7];
    let s0 = schur_bound(&a, curve, &xis, &tps, q);
    let s1 = schur_bound(&da, curve, &xis, &tps, q);
    Ok(BaseCasePoint {
        lambda,
        profile,
        decay,
        decay_ds,
        schur0: s0.sup * lambda,
        schur1: s1.sup / lambda,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaPoint {
    pub lambda: f64,
    pub schur: N0Schur,
}

/// The `n = 0` estimates across `λ` with the constants `2W` and `2W·D²`
/// taken from the calibration and the largest sampled `D`.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaSweep {
    pub curve: String,
    pub n_level: usize,
    pub points: Vec<LemmaPoint>,
    pub width_constant: f64,
    pub derivative_constant: f64,
    pub c0: f64,
    pub c1: f64,
    pub pass: bool,
}

pub fn n0_lemma_experiment(
    curve: &Curve<f64>,
    n_level: usize,
    lambdas: &[u64],
    seed: u64,
    q: &KernelQuadrature,
) -> Result<LemmaSweep> {
    if lambdas.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let lib = Arc::new(CutoffLibrary::new());
    let mut lambdas = lambdas.to_vec();
    lambdas.sort_unstable();
    let points = lambdas
        .par_iter()
        .map(|&lambda| {
            let dec = Decomposition::build(curve, &lib, lambda, n_level, seed)?;
            Ok(LemmaPoint {
                lambda: lambda as f64,
                schur: n0_schur_stage(&dec, q)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let width_constant = points
        .iter()
        .map(|p| p.schur.width_constant)
        .fold(0.0, f64::max);
    let derivative_constant = points
        .iter()
        .map(|p| p.schur.derivative_constant)
        .fold(0.0, f64::max);
    let c0 = 2.0 * width_constant;
    let c1 = 2.0 * width_constant * derivative_constant.powi(2);
    let pass = derivative_constant <= super::audit::DERIVATIVE_CAP
        && width_constant <= super::audit::DERIVATIVE_CAP
        && points
            .iter()
            .all(|p| p.schur.normalized0 <= c0 && p.schur.normalized1 <= c1 && p.schur.samples > 0);
    Ok(LemmaSweep {
        curve: curve.name().into(),
        n_level,
        points,
        width_constant,
        derivative_constant,
        c0,
        c1,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_is_nonstationary_on_its_support() {
        let lib = Arc::new(CutoffLibrary::new());
        let c = crate::curve::lookup::<f64>("circle2d", 2).unwrap();
        let a = base_case_symbol(&lib, 64.0);
        let pts = crate::symbols::sample_support(&a, 4000, 3);
        assert!(pts.len() > 100);
        for p in &pts {
            let v = c.inner(1, p.s, &p.xi).abs() / norm(&p.xi);
            assert!(v >= (FRAC_PI_2 - 1.0).sin() - 1e-12, "{v}");
        }
    }
}
