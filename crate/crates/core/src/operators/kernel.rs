//! The kernel `K[a](ξ; t', t)` of `𝒜𝒜*` at a fixed frequency, Schur sums of
//! `|K|`, and the oscillatory remainder `b_δ`.

use num_complex::Complex;
use serde::Serialize;

use crate::curve::Curve;
use crate::cutoffs::CutoffLibrary;
use crate::error::{Error, Result};
use crate::linalg::linear_fit;
use crate::quadrature::GaussLegendre;
use crate::scalar::{norm, Real};
use crate::symbols::{Section, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelQuadrature {
    /// Gauss-Legendre order per panel.
    pub order: usize,
    /// Nodes per oscillation of the phase.
    pub nodes_per_oscillation: usize,
    pub min_panels: usize,
    /// Panels of the graded `t`-rule on each side of `t'`.
    pub t_levels: usize,
}

impl Default for KernelQuadrature {
    fn default() -> Self {
        Self {
            order: 16,
            nodes_per_oscillation: 16,
            min_panels: 4,
            t_levels: 4,
        }
    }
}

impl KernelQuadrature {
    fn panels(&self, length: f64, frequency: f64) -> usize {
        let oscillations = length * frequency / std::f64::consts::TAU;
        let nodes = (oscillations * self.nodes_per_oscillation as f64).ceil() as usize;
        nodes.div_ceil(self.order).max(self.min_panels)
    }
}

/// `K[a](ξ; t', t) = ∫ e^{i(t−t')⟨γ(s),ξ⟩} a(ξ,s,t') a(ξ,s,t) ds`.
pub fn kernel_k<T: Real>(
    sec: &Section<T>,
    curve: &Curve<T>,
    xi: &[T],
    tprime: T,
    t: T,
    q: &KernelQuadrature,
) -> Complex<T> {
    if sec.is_empty() {
        return Complex::new(T::zero(), T::zero());
    }
    let (lo, hi) = sec.s_window;
    let u = t - tprime;
    let freq = (u.abs() * norm(xi) * curve.bound()).as_f64();
    let panels = q.panels((hi - lo).as_f64(), freq);
    let gl = GaussLegendre::<T>::new(q.order);
    let mut acc = Complex::new(T::zero(), T::zero());
    for (s, w) in gl.composite_nodes(lo, hi, panels) {
        let amp = sec.eval(s, tprime) * sec.eval(s, t);
        if amp != T::zero() {
            acc = acc + Complex::from_polar(w * amp, u * curve.inner(0, s, xi));
        }
    }
    acc
}

/// `t`-rule on `[-1, 1]` graded geometrically towards `t'` from scale `h`.
pub fn graded_t_nodes(tprime: f64, h: f64, levels: usize, order: usize) -> Vec<(f64, f64)> {
    let mut breaks = vec![-1.0, 1.0, tprime];
    let mut r = h;
    while r < 2.0 {
        for b in [tprime - r, tprime + r] {
            if b > -1.0 && b < 1.0 {
                breaks.push(b);
            }
        }
        r *= 2.0;
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let gl = GaussLegendre::<f64>::new(order);
    breaks
        .windows(2)
        .flat_map(|p| gl.composite_nodes(p[0], p[1], levels.max(1)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchurReport {
    pub symbol_id: String,
    pub samples: usize,
    /// `sup_{ξ,t'} ∫ |K[a](ξ; t', t)| dt` over the samples.
    pub sup: f64,
    pub argmax_xi: Vec<f64>,
    pub argmax_tprime: f64,
}

/// Schur sum of `|K[a]|` at the sampled frequencies and base points `t'`,
/// with the `t`-rule graded at scale `1/λ`.
pub fn schur_bound<T: Real>(
    a: &Symbol<T>,
    curve: &Curve<T>,
    xi_samples: &[Vec<T>],
    tprime_samples: &[T],
    q: &KernelQuadrature,
) -> SchurReport {
    let h = 1.0 / a.meta.lambda.max(1.0);
    let mut report = SchurReport {
        symbol_id: a.meta.id.clone(),
        samples: 0,
        sup: 0.0,
        argmax_xi: Vec::new(),
        argmax_tprime: 0.0,
    };
    for xi in xi_samples {
        let sec = a.section(xi);
        if sec.is_empty() {
            continue;
        }
        for &tp in tprime_samples {
            report.samples += 1;
            let nodes = graded_t_nodes(tp.as_f64(), h, q.t_levels, 8);
            let total: f64 = nodes
                .iter()
                .map(|&(t, w)| w * kernel_k(&sec, curve, xi, tp, T::lit(t), q).norm().as_f64())
                .sum();
            if total > report.sup {
                report.sup = total;
                report.argmax_xi = xi.iter().map(|v| v.as_f64()).collect();
                report.argmax_tprime = tp.as_f64();
            }
        }
    }
    report
}

/// `b_δ(ξ, σ, t) = χ̃₃(σ) ∫ e^{−i(σs + t⟨γ(s),ξ⟩)} a(ξ,s,t) ds` over `s ∈ [-2, 2]`,
/// with `χ̃₃(σ) = (1+|σ|)(1 − η(σδ/C))^{1/2}`.
#[allow(clippy::too_many_arguments)]
pub fn b_delta_eval<T: Real>(
    a: &Symbol<T>,
    lib: &CutoffLibrary,
    curve: &Curve<T>,
    xi: &[T],
    sigma: T,
    t: T,
    c_cut: T,
    delta: T,
    q: &KernelQuadrature,
) -> Complex<T> {
    let chi = T::one() - lib.eta(sigma * delta / c_cut);
    if chi <= T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let weight = (T::one() + sigma.abs()) * chi.sqrt();
    let sec = a.section(xi);
    if sec.is_empty() {
        return Complex::new(T::zero(), T::zero());
    }
    let (lo, hi) = (
        sec.s_window.0.max(T::lit(-2.0)),
        sec.s_window.1.min(T::lit(2.0)),
    );
    if lo >= hi {
        return Complex::new(T::zero(), T::zero());
    }
    let freq = (sigma.abs() + t.abs() * norm(xi) * curve.bound()).as_f64();
    let panels = q.panels((hi - lo).as_f64(), freq);
    let gl = GaussLegendre::<T>::new(q.order);
    let mut acc = Complex::new(T::zero(), T::zero());
    for (s, w) in gl.composite_nodes(lo, hi, panels) {
        let amp = sec.eval(s, t);
        if amp != T::zero() {
            acc = acc + Complex::from_polar(w * amp, -(sigma * s + t * curve.inner(0, s, xi)));
        }
    }
    acc * weight
}

/// Power law `|K| ≈ C |u|^{-p}` fitted in log-log coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub constant: f64,
    pub exponent_stderr: f64,
    pub used: usize,
    pub discarded: usize,
}

/// Fits `(|u|, |K|)` pairs above `noise_floor`.
pub fn decay_fit(points: &[(f64, f64)], noise_floor: f64) -> Result<DecayFit> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(u, k)| u > 0.0 && k > noise_floor && k.is_finite())
        .map(|(u, k)| (u.ln(), k.ln()))
        .collect();
    if kept.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: kept.len(),
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = kept.iter().copied().unzip();
    let fit = linear_fit(&x, &y).ok_or(Error::InsufficientData {
        needed: 3,
        got: kept.len(),
    })?;
    Ok(DecayFit {
        exponent: -fit.slope,
        constant: fit.intercept.exp(),
        exponent_stderr: fit.slope_stderr,
        used: kept.len(),
        discarded: points.len() - kept.len(),
    })
}
