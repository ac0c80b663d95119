//! The decomposition of a type-`(λ, A, N)` symbol away from the degenerate set
//! `Γ`: the split by `H`, the distance function `G`, the pieces `aⁿ`, `a^{n,ν}`,
//! calibration of `A'`, `ε₀`, `ε₁` and the sampled audits of each step.

use std::sync::Arc;

use serde::Serialize;

use super::{
    build_a_delta, littlewood_paley_piece, sphere_point, ScalarFn, SupportPoint, Symbol, XiFn,
};
use crate::curve::{solve_sigma, Curve};
use crate::cutoffs::CutoffLibrary;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::quadrature::Halton;
use crate::scalar::{norm, Real};

/// `c_N = (4N)^{-N}`.
pub fn c_n(n: usize) -> f64 {
    (4.0 * n as f64).powi(-(n as i32))
}

/// `a^λ_δ` with `δ = 1/(4λ)` restricted to the cone `|σ(ξ)| ≤ 1/2` by `ζ̃(8σ(ξ))`,
/// zero where `σ(ξ)` has no root in `I`.
pub fn base_symbol<T: Real>(
    lib: &Arc<CutoffLibrary>,
    curve: &Curve<T>,
    lambda: u64,
    n: usize,
) -> Result<Symbol<T>> {
    let d = curve.dim();
    if n < 2 || n > d {
        return Err(Error::InvalidInput(format!("level N={n} outside 2..={d}")));
    }
    let delta = T::lit(0.25 / lambda.max(1) as f64);
    let a = littlewood_paley_piece(&build_a_delta(lib, delta, d)?, lib, lambda)?;
    let (l, c) = (lib.clone(), curve.clone());
    let cone: XiFn<T> = Arc::new(move |xi| {
        if norm(xi) == T::zero() {
            return T::zero();
        }
        match solve_sigma(&c, xi, n) {
            Ok(Some(sigma)) => l.zeta_tilde(sigma * T::lit(8.0)),
            _ => T::zero(),
        }
    });
    let mut support = a.support;
    support.s = (-1.0, 1.0);
    support.t = (-1.0, 1.0);
    let mut sym = a.with_xi_factor(format!("base(lambda={lambda},N={n})"), cone, support);
    sym.meta.curve = curve.name().into();
    sym.meta.l = n;
    Ok(sym)
}

/// `H(ξ,s) = ∏_{i<N} η(A'λ⁻¹⟨γ^{(i)}(s),ξ⟩)`.
#[derive(Clone)]
pub struct HFactor<T: Real> {
    pub curve: Curve<T>,
    pub lib: Arc<CutoffLibrary>,
    pub lambda: T,
    pub a_prime: T,
    pub n: usize,
}

impl<T: Real> HFactor<T> {
    pub fn eval(&self, xi: &[T], s: T) -> T {
        let k = self.a_prime / self.lambda;
        (1..self.n).fold(T::one(), |acc, i| {
            if acc == T::zero() {
                acc
            } else {
                acc * self.lib.eta(k * self.curve.inner(i, s, xi))
            }
        })
    }
}

pub fn build_h<T: Real>(
    curve: &Curve<T>,
    lib: &Arc<CutoffLibrary>,
    lambda: T,
    a_prime: T,
    n: usize,
) -> Result<HFactor<T>> {
    if !(a_prime > T::one()) {
        return Err(Error::InvalidInput(format!("A'={a_prime} must exceed 1")));
    }
    Ok(HFactor {
        curve: curve.clone(),
        lib: lib.clone(),
        lambda,
        a_prime,
        n,
    })
}

/// `(aH, a(1 − H))`.
pub fn split_by_h<T: Real>(a: &Symbol<T>, h: &HFactor<T>) -> (Symbol<T>, Symbol<T>) {
    let full = (T::lit(-2.0), T::lit(2.0));
    let (h1, h2) = (h.clone(), h.clone());
    let inside = a.with_section_factor(format!("{}|H", a.meta.id), a.support, move |xi| {
        let (h, xi) = (h1.clone(), xi.to_vec());
        let m: ScalarFn<T> = Arc::new(move |s| h.eval(&xi, s));
        Some((m, full))
    });
    let outside = a.with_section_factor(format!("{}|1-H", a.meta.id), a.support, move |xi| {
        let (h, xi) = (h2.clone(), xi.to_vec());
        let m: ScalarFn<T> = Arc::new(move |s| T::one() - h.eval(&xi, s));
        Some((m, full))
    });
    (inside, outside)
}

/// The distance function to `Γ`.
#[derive(Clone)]
pub struct GFunction<T: Real> {
    pub curve: Curve<T>,
    pub lambda: T,
    pub n: usize,
    pub eps0: T,
}

/// `σ(ξ)` and the `s`-independent part of `G(ξ, ·)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GAnchor<T> {
    pub sigma: T,
    pub fixed: T,
}

impl<T: Real> GFunction<T> {
    /// `None` marks an excluded point: `σ(ξ)` is not solvable in `I`.
    pub fn anchor(&self, xi: &[T]) -> Option<GAnchor<T>> {
        if norm(xi) == T::zero() {
            return None;
        }
        let sigma = solve_sigma(&self.curve, xi, self.n).ok().flatten()?;
        let k = T::one() / (self.eps0 * self.lambda);
        let fixed = (1..self.n)
            .map(|i| {
                let v = (k * self.curve.inner(i, sigma, xi)).abs();
                v.powf(T::lit(2.0 / (self.n - i) as f64))
            })
            .sum();
        Some(GAnchor { sigma, fixed })
    }

    pub fn at(&self, anchor: &GAnchor<T>, s: T) -> T {
        let r = (s - anchor.sigma) / self.eps0;
        anchor.fixed + r * r
    }

    pub fn eval(&self, xi: &[T], s: T) -> Option<T> {
        self.anchor(xi).map(|a| self.at(&a, s))
    }

    /// A bound for `G` on `{|ξ| ≤ 2λ, s ∈ I, |σ| ≤ 1/2}` from `|⟨γ^{(i)},ξ⟩| ≤ 2Bλ`.
    pub fn analytic_bound(&self) -> f64 {
        let b = self.curve.bound().as_f64();
        let e = self.eps0.as_f64();
        let terms: f64 = (1..self.n.saturating_sub(1))
            .map(|i| (2.0 * b / e).powf(2.0 / (self.n - i) as f64))
            .sum();
        terms + 2.25 / (e * e)
    }
}

/// `aⁿ = a·η₁(ε₁²λ^{2/N}G)` for `n = 0` and `a·β₁(ε₁²2^{−2n}λ^{2/N}G)` for `n ≥ 1`.
/// Excluded points (no `σ(ξ)`) are assigned to `a⁰`.
pub fn build_a_n<T: Real>(
    a: &Symbol<T>,
    g: &GFunction<T>,
    lib: &Arc<CutoffLibrary>,
    eps1: T,
    n: u32,
) -> Symbol<T> {
    let scale =
        eps1 * eps1 * g.lambda.powf(T::lit(2.0 / g.n as f64)) * T::lit(0.25f64.powi(n as i32));
    let (g, lib) = (g.clone(), lib.clone());
    let id = format!("{}|a^{n}", a.meta.id);
    a.with_section_factor(id, a.support, move |xi| {
        let Some(anchor) = g.anchor(xi) else {
            let one: ScalarFn<T> = Arc::new(|_| T::one());
            return (n == 0).then_some((one, (T::lit(-2.0), T::lit(2.0))));
        };
        // support of the cutoff in G is {G ≤ 4/scale}
        let room = T::lit(4.0) / scale - anchor.fixed;
        if room < T::zero() {
            return None;
        }
        let half = g.eps0 * room.sqrt();
        let (g, lib) = (g.clone(), lib.clone());
        let m: ScalarFn<T> = if n == 0 {
            Arc::new(move |s| lib.eta1(scale * g.at(&anchor, s)))
        } else {
            Arc::new(move |s| lib.beta1(scale * g.at(&anchor, s)))
        };
        Some((m, (anchor.sigma - half, anchor.sigma + half)))
    })
}

/// `ρ = 2ⁿλ^{−1/N}`.
pub fn rho<T: Real>(lambda: T, n_level: usize, n: u32) -> T {
    T::lit(2f64.powi(n as i32)) * lambda.powf(-T::lit(1.0 / n_level as f64))
}

/// `a^{n,ν} = aⁿ·ζ(2^{−n}λ^{1/N}(s − s_{n,ν}))` with `s_{n,ν} = 2ⁿλ^{−1/N}ν`.
pub fn build_a_n_nu<T: Real>(
    a_n: &Symbol<T>,
    lib: &Arc<CutoffLibrary>,
    n: u32,
    nu: i64,
    lambda: T,
    n_level: usize,
) -> Symbol<T> {
    let r = rho(lambda, n_level, n);
    let center = r * T::lit(nu as f64);
    let lib = lib.clone();
    let mut support = a_n.support;
    support.s = (
        (center - r).as_f64().max(support.s.0),
        (center + r).as_f64().min(support.s.1),
    );
    a_n.with_section_factor(format!("{}|nu={nu}", a_n.meta.id), support, move |_| {
        let l = lib.clone();
        let m: ScalarFn<T> = Arc::new(move |s| l.zeta((s - center) / r));
        Some((m, (center - r, center + r)))
    })
}

/// The constants of the decomposition and how they were obtained.
#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub lambda: f64,
    pub n_level: usize,
    /// Type constant of the base symbol (sampled).
    pub a_const: f64,
    pub b: f64,
    /// Degeneracy threshold `κ` in `Σ_{i<N}|⟨γ^{(i)},ξ⟩| ≤ κA⁻¹|ξ|`.
    pub kappa: f64,
    pub a_prime: f64,
    pub a_prime_analytic: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub g_bound: f64,
}

/// Smallest `ε₀ = 2^{-k}` with `Σ_{i=i₀+1}^{N−1} 2^N ε₀^{i−i₀} + Bε₀^{N−i₀−1} ≤ c_N/2` for every `1 ≤ i₀ ≤ N−2`.
pub fn calibrate_eps0(b: f64, n: usize) -> Result<f64> {
    let ok = |e: f64| {
        (1..n.saturating_sub(1)).all(|i0| {
            let s: f64 = (i0 + 1..n)
                .map(|i| 2f64.powi(n as i32) * e.powi((i - i0) as i32))
                .sum();
            s + b * e.powi((n - i0 - 1) as i32) <= c_n(n) / 2.0
        })
    };
    let mut e = 0.5;
    while !ok(e) {
        e /= 2.0;
        if e < 1e-12 {
            return Err(Error::Calibration(format!(
                "no ε₀ ≥ 1e-12 satisfies the Taylor condition for B={b}, N={n}"
            )));
        }
    }
    Ok(e)
}

/// Largest `ε₁ = 2^{-k}` with `2ε₁√G_max ≤ B^{−2d}`, which forces `ρ ≤ B^{−2d}` on every nonzero `aⁿ`.
pub fn calibrate_eps1(g_bound: f64, b: f64, d: usize) -> Result<f64> {
    let target = b.powi(-2 * d as i32);
    let mut e = 0.5;
    while 2.0 * e * g_bound.sqrt() > target {
        e /= 2.0;
        if e < 1e-15 {
            return Err(Error::Calibration(format!(
                "no ε₁ makes ρ ≤ B^(-2d) = {target:.3e}"
            )));
        }
    }
    Ok(e)
}

/// Worst point of the `H`-split audit.
#[derive(Debug, Clone, Serialize)]
pub struct HSplitReport {
    pub a_prime: f64,
    pub samples: usize,
    pub large_violations: usize,
    pub degeneracy_violations: usize,
    pub h_range_violations: usize,
    pub worst_degeneracy_ratio: f64,
    pub min_large_ratio: f64,
    pub passes: bool,
}

/// Checks `(10A)⁻¹|ξ| ≤ |⟨γ^{(N)},ξ⟩| ≤ A|ξ|` and `Σ_{i<N}|⟨γ^{(i)},ξ⟩| ≤ κA⁻¹|ξ|` where `aH ≠ 0`.
pub fn audit_h_split<T: Real>(
    points: &[SupportPoint<T>],
    h: &HFactor<T>,
    a_const: f64,
    kappa: f64,
) -> HSplitReport {
    let n = h.n;
    let (mut large, mut degen, mut range, mut used) = (0, 0, 0, 0);
    let (mut worst, mut min_large) = (0.0f64, f64::INFINITY);
    for p in points {
        let hv = h.eval(&p.xi, p.s).as_f64();
        if !(0.0..=1.0).contains(&hv) {
            range += 1;
        }
        if hv == 0.0 {
            continue;
        }
        used += 1;
        let xn = norm(&p.xi).as_f64();
        let top = h.curve.inner(n, p.s, &p.xi).abs().as_f64() / xn;
        let low: f64 = (1..n)
            .map(|i| h.curve.inner(i, p.s, &p.xi).abs().as_f64())
            .sum::<f64>()
            / xn;
        min_large = min_large.min(top);
        worst = worst.max(low * a_const / kappa);
        if top < 1.0 / (10.0 * a_const) || top > a_const {
            large += 1;
        }
        if low > kappa / a_const {
            degen += 1;
        }
    }
    HSplitReport {
        a_prime: h.a_prime.as_f64(),
        samples: used,
        large_violations: large,
        degeneracy_violations: degen,
        h_range_violations: range,
        worst_degeneracy_ratio: worst,
        min_large_ratio: min_large,
        passes: used > 0 && large == 0 && degen == 0 && range == 0,
    }
}

/// Doubles `A'` from 2 until the `H`-split audit passes.
pub fn calibrate_a_prime<T: Real>(
    points: &[SupportPoint<T>],
    curve: &Curve<T>,
    lib: &Arc<CutoffLibrary>,
    lambda: T,
    n: usize,
    a_const: f64,
    kappa: f64,
) -> Result<(f64, HSplitReport)> {
    let mut ap = 2.0;
    loop {
        let h = build_h(curve, lib, lambda, T::lit(ap), n)?;
        let rep = audit_h_split(points, &h, a_const, kappa);
        if rep.passes {
            return Ok((ap, rep));
        }
        ap *= 2.0;
        if ap > 2f64.powi(20) {
            return Err(Error::Calibration(format!(
                "no A' <= 2^20 passes the H-split audit (worst degeneracy ratio {:.3e}, min top ratio {:.3e})",
                rep.worst_degeneracy_ratio, rep.min_large_ratio
            )));
        }
    }
}

/// Points concentrated near `Γ`: `ξ = M(σ₀)^{−⊤}p` with prescribed inner products
/// `p_i = ⟨γ^{(i)}(σ₀),ξ⟩` (`p_{N−1} = 0`, `p_i` log-uniform below `2λ/A'` for
/// `i ≤ N−2`, `|p_N| ∈ [0.05, 4]λ`) and `s = σ₀ ± τ` with `τ` log-uniform in `[10⁻⁴, 2]`.
pub fn sample_near_gamma<T: Real>(
    curve: &Curve<T>,
    lambda: f64,
    n: usize,
    a_prime: f64,
    count: usize,
    skip: u64,
) -> Vec<(Vec<T>, T, T)> {
    let d = curve.dim();
    let dims = 4 + n + d.saturating_sub(n);
    Halton::new(dims.min(12), skip)
        .take(count)
        .filter_map(|u| {
            let sigma0 = -0.55 + 1.1 * u[0];
            let s0 = T::lit(sigma0);
            let cols: Vec<Vec<T>> = (1..=d).map(|i| curve.eval(i, s0)).collect();
            let m = Matrix::from_columns(&cols);
            let mt_inv = m.transpose().inverse()?;
            let mut p = vec![T::zero(); d];
            for i in 1..=d {
                let v = if i + 1 == n {
                    0.0
                } else if i < n {
                    let w = u[3 + i % 9];
                    let mag = (2.0 * lambda / a_prime) * 10f64.powf(-6.0 * w);
                    if ((w * 1e4) as u64).is_multiple_of(2) {
                        mag
                    } else {
                        -mag
                    }
                } else if i == n {
                    let w = u[1];
                    let mag = lambda * 0.05 * 80f64.powf(w);
                    if ((w * 1e4) as u64).is_multiple_of(2) {
                        mag
                    } else {
                        -mag
                    }
                } else {
                    lambda * (2.0 * u[(3 + i) % u.len()] - 1.0)
                };
                p[i - 1] = T::lit(v);
            }
            let xi = mt_inv.apply(&p);
            let tau = 1e-4 * 2e4f64.powf(u[2]);
            let sign = if ((u[2] * 1e4) as u64).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            let s = (sigma0 + sign * tau).clamp(-1.0, 1.0);
            let t = T::lit(2.0 * u[u.len() - 1] - 1.0);
            Some((xi, T::lit(s), t))
        })
        .collect()
}

/// Evaluates `a` at targeted draws and keeps the nonzero ones.
pub fn accepted<T: Real>(a: &Symbol<T>, draws: &[(Vec<T>, T, T)]) -> Vec<SupportPoint<T>> {
    draws
        .iter()
        .filter_map(|(xi, s, t)| {
            let value = a.eval(xi, *s, *t);
            (value != T::zero()).then(|| SupportPoint {
                xi: xi.clone(),
                s: *s,
                t: *t,
                value,
            })
        })
        .collect()
}

/// Uniform draws over `|ξ| ∈ [λ/2, 2λ]`, `s, t ∈ I`.
pub fn sample_annulus<T: Real>(
    d: usize,
    lambda: f64,
    count: usize,
    skip: u64,
) -> Vec<(Vec<T>, T, T)> {
    Halton::new(d + 2, skip)
        .take(count)
        .map(|u| {
            let r = lambda * (0.5 + 1.5 * u[0]);
            let dir = sphere_point(&u[1..d], d);
            let xi = dir.iter().map(|&c| T::lit(r * c)).collect();
            (xi, T::lit(2.0 * u[d] - 1.0), T::lit(2.0 * u[d + 1] - 1.0))
        })
        .collect()
}

/// `Σ_{i≤N−1} ρ^{i−N}|⟨γ^{(i)}(s),ξ⟩| / λ`.
pub fn unscaled_sum_ratio<T: Real>(
    curve: &Curve<T>,
    xi: &[T],
    s: T,
    rho: f64,
    n: usize,
    lambda: f64,
) -> f64 {
    (1..n)
        .map(|i| rho.powi(i as i32 - n as i32) * curve.inner(i, s, xi).abs().as_f64())
        .sum::<f64>()
        / lambda
}

/// Bracket `[c, C]` for the unscaled sum from the constants of the decomposition.
pub fn inner_product_bracket(cal: &Calibration) -> (f64, f64) {
    let (a, b, e0, e1, n) = (cal.a_const, cal.b, cal.eps0, cal.eps1, cal.n_level);
    let lower = (e0 / (80.0 * a * e1)).min(c_n(n) * e0 / 2.0);
    let fact = |k: usize| (1..=k).fold(1.0, |acc, j| acc * j as f64);
    let upper: f64 = (1..n)
        .map(|i| {
            let taylor: f64 = (i..n)
                .map(|j| {
                    e0 * (2.0 / e1).powi((n - j) as i32) * (2.0 * e0 / e1).powi((j - i) as i32)
                        / fact(j - i)
                })
                .sum();
            taylor + 2.0 * b * (2.0 * e0 / e1).powi((n - i) as i32) / fact(n - i)
        })
        .sum();
    (lower, upper)
}

#[derive(Debug, Clone, Serialize)]
pub struct InnerProductReport {
    pub symbol_id: String,
    pub lemma: String,
    pub n: u32,
    pub nu: Option<i64>,
    pub lambda: f64,
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub fraction_within: f64,
    pub empty: bool,
    pub pass: bool,
}

/// Two-sided audit of the unscaled sum on the sampled support of `a^{n,ν}` (or `aⁿ` when `nu` is `None`).
pub fn verify_inner_product_bounds<T: Real>(
    symbol_id: &str,
    curve: &Curve<T>,
    points: &[SupportPoint<T>],
    n: u32,
    nu: Option<i64>,
    cal: &Calibration,
) -> InnerProductReport {
    let r = rho(cal.lambda, cal.n_level, n);
    let (lower, upper) = inner_product_bracket(cal);
    let ratios: Vec<f64> = points
        .iter()
        .map(|p| unscaled_sum_ratio(curve, &p.xi, p.s, r, cal.n_level, cal.lambda))
        .collect();
    let within = ratios.iter().filter(|&&x| x >= lower && x <= upper).count();
    let empty = ratios.is_empty();
    let fraction_within = if empty {
        0.0
    } else {
        within as f64 / ratios.len() as f64
    };
    InnerProductReport {
        symbol_id: symbol_id.into(),
        lemma: "localised inner products".into(),
        n,
        nu,
        lambda: cal.lambda,
        samples: ratios.len(),
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        lower,
        upper,
        fraction_within,
        empty,
        pass: !empty && fraction_within >= 0.99,
    }
}
