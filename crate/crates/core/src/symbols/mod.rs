//! Symbols `a(ξ, s, t)` of the Fourier integral operators: `a_δ`, its
//! Littlewood–Paley pieces, the anisotropic `a_r`, rescaled symbols, `𝔡_s a`
//! and the decomposition pieces in [`decomposition`].

pub mod decomposition;

use std::sync::Arc;

use serde::Serialize;

use crate::curve::{frenet_frame, Curve, RescalingMap};
use crate::cutoffs::CutoffLibrary;
use crate::error::{Error, Result};
use crate::quadrature::Halton;
use crate::scalar::{dot, norm, Real};
use crate::tube::ScaleVector;

pub type XiFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
pub type SectionFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;
type SectionBuilder<T> = Arc<dyn Fn(&[T]) -> Section<T> + Send + Sync>;

/// `a(ξ, s, t) = f(ξ) g(s) h(t)`.
#[derive(Clone)]
pub struct Separable<T> {
    pub xi: XiFn<T>,
    pub s: ScalarFn<T>,
    pub t: ScalarFn<T>,
}

/// The restriction `(s, t) ↦ a(ξ, s, t)` at a fixed frequency, with an
/// interval in `s` outside of which it vanishes.
#[derive(Clone)]
pub struct Section<T> {
    pub f: SectionFn<T>,
    pub s_window: (T, T),
}

impl<T: Real> Section<T> {
    pub fn zero() -> Self {
        Self {
            f: Arc::new(|_, _| T::zero()),
            s_window: (T::zero(), T::zero()),
        }
    }

    pub fn eval(&self, s: T, t: T) -> T {
        (self.f)(s, t)
    }

    pub fn is_empty(&self) -> bool {
        self.s_window.0 >= self.s_window.1
    }
}

#[derive(Clone)]
enum Repr<T> {
    Separable(Separable<T>),
    Sectioned(SectionBuilder<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolMeta {
    pub id: String,
    /// Dyadic frequency scale (0 for the low-frequency piece).
    pub lambda: f64,
    /// Type constant `A`, if known.
    pub a_const: f64,
    /// Type order `L`.
    pub l: usize,
    pub curve: String,
}

/// Box containing the support: `|ξ| ∈ [xi_min, xi_max]`, `s ∈ s`, `t ∈ t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportHint {
    pub xi_min: f64,
    pub xi_max: f64,
    pub s: (f64, f64),
    pub t: (f64, f64),
}

/// A real symbol evaluated lazily from cutoffs and curve data.
#[derive(Clone)]
pub struct Symbol<T: Real> {
    pub meta: SymbolMeta,
    pub support: SupportHint,
    d: usize,
    repr: Repr<T>,
}

impl<T: Real> std::fmt::Debug for Symbol<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol")
            .field("meta", &self.meta)
            .field("support", &self.support)
            .finish()
    }
}

impl<T: Real> Symbol<T> {
    pub fn separable(
        meta: SymbolMeta,
        support: SupportHint,
        d: usize,
        parts: Separable<T>,
    ) -> Self {
        Self {
            meta,
            support,
            d,
            repr: Repr::Separable(parts),
        }
    }

    pub fn sectioned<F>(meta: SymbolMeta, support: SupportHint, d: usize, f: F) -> Self
    where
        F: Fn(&[T]) -> Section<T> + Send + Sync + 'static,
    {
        Self {
            meta,
            support,
            d,
            repr: Repr::Sectioned(Arc::new(f)),
        }
    }

    pub fn zero(d: usize) -> Self {
        let meta = SymbolMeta {
            id: "zero".into(),
            lambda: 0.0,
            a_const: 1.0,
            l: 1,
            curve: String::new(),
        };
        let support = SupportHint {
            xi_min: 0.0,
            xi_max: 0.0,
            s: (0.0, 0.0),
            t: (0.0, 0.0),
        };
        let z: ScalarFn<T> = Arc::new(|_| T::zero());
        Self::separable(
            meta,
            support,
            d,
            Separable {
                xi: Arc::new(|_| T::zero()),
                s: z.clone(),
                t: z,
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn separable_parts(&self) -> Option<&Separable<T>> {
        match &self.repr {
            Repr::Separable(p) => Some(p),
            Repr::Sectioned(_) => None,
        }
    }

    pub fn section(&self, xi: &[T]) -> Section<T> {
        match &self.repr {
            Repr::Separable(p) => {
                let k = (p.xi)(xi);
                if k == T::zero() {
                    return Section::zero();
                }
                let (s, t) = (p.s.clone(), p.t.clone());
                Section {
                    f: Arc::new(move |sv, tv| k * s(sv) * t(tv)),
                    s_window: (T::lit(self.support.s.0), T::lit(self.support.s.1)),
                }
            }
            Repr::Sectioned(b) => b(xi),
        }
    }

    pub fn eval(&self, xi: &[T], s: T, t: T) -> T {
        match &self.repr {
            Repr::Separable(p) => {
                let k = (p.xi)(xi);
                if k == T::zero() {
                    T::zero()
                } else {
                    k * (p.s)(s) * (p.t)(t)
                }
            }
            Repr::Sectioned(b) => b(xi).eval(s, t),
        }
    }

    /// `a(ξ,s,t)·m(ξ)`; separable symbols stay separable.
    pub fn with_xi_factor(&self, id: impl Into<String>, m: XiFn<T>, support: SupportHint) -> Self {
        let mut meta = self.meta.clone();
        meta.id = id.into();
        match &self.repr {
            Repr::Separable(p) => {
                let base = p.xi.clone();
                let xi: XiFn<T> = Arc::new(move |x| {
                    let v = m(x);
                    if v == T::zero() {
                        v
                    } else {
                        v * base(x)
                    }
                });
                Self::separable(
                    meta,
                    support,
                    self.d,
                    Separable {
                        xi,
                        s: p.s.clone(),
                        t: p.t.clone(),
                    },
                )
            }
            Repr::Sectioned(_) => {
                let base = self.clone();
                Self::sectioned(meta, support, self.d, move |x| {
                    let v = m(x);
                    if v == T::zero() {
                        return Section::zero();
                    }
                    let sec = base.section(x);
                    let f = sec.f.clone();
                    Section {
                        f: Arc::new(move |s, t| v * f(s, t)),
                        s_window: sec.s_window,
                    }
                })
            }
        }
    }

    /// `a(ξ,s,t)·m_ξ(s)` where `factor(ξ)` returns `m_ξ` and a window containing its support.
    pub fn with_section_factor<F>(
        &self,
        id: impl Into<String>,
        support: SupportHint,
        factor: F,
    ) -> Self
    where
        F: Fn(&[T]) -> Option<(ScalarFn<T>, (T, T))> + Send + Sync + 'static,
    {
        let mut meta = self.meta.clone();
        meta.id = id.into();
        let base = self.clone();
        Self::sectioned(meta, support, self.d, move |x| {
            let sec = base.section(x);
            if sec.is_empty() {
                return sec;
            }
            let Some((m, (lo, hi))) = factor(x) else {
                return Section::zero();
            };
            let window = (sec.s_window.0.max(lo), sec.s_window.1.min(hi));
            if window.0 >= window.1 {
                return Section::zero();
            }
            let f = sec.f.clone();
            Section {
                f: Arc::new(move |s, t| f(s, t) * m(s)),
                s_window: window,
            }
        })
    }
}

fn hint(xi_max: f64) -> SupportHint {
    SupportHint {
        xi_min: 0.0,
        xi_max,
        s: (-2.0, 2.0),
        t: (-2.0, 2.0),
    }
}

/// `a_δ(ξ,s,t) = ψ(δ|ξ|) χ̃_I(s) χ̃_I(t)`.
pub fn build_a_delta<T: Real>(lib: &Arc<CutoffLibrary>, delta: T, d: usize) -> Result<Symbol<T>> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::InvalidInput(format!("δ={delta} must lie in (0,1)")));
    }
    let (l1, l2, l3) = (lib.clone(), lib.clone(), lib.clone());
    let parts = Separable {
        xi: Arc::new(move |x: &[T]| l1.psi(delta * norm(x))),
        s: Arc::new(move |s| l2.chi_tilde_i(s)),
        t: Arc::new(move |t| l3.chi_tilde_i(t)),
    };
    let meta = SymbolMeta {
        id: format!("a_delta(delta={delta})"),
        lambda: 0.0,
        a_const: f64::NAN,
        l: d,
        curve: String::new(),
    };
    Ok(Symbol::separable(
        meta,
        hint(1.0 / delta.as_f64()),
        d,
        parts,
    ))
}

/// `a·η(|ξ|)` for `λ = 0`, `a·β(|ξ|/λ)` for a power of two `λ`.
pub fn littlewood_paley_piece<T: Real>(
    a: &Symbol<T>,
    lib: &Arc<CutoffLibrary>,
    lambda: u64,
) -> Result<Symbol<T>> {
    if lambda != 0 && !lambda.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "λ={lambda} is neither 0 nor a power of two"
        )));
    }
    let lib = lib.clone();
    let mut support = a.support;
    let m: XiFn<T> = if lambda == 0 {
        support.xi_max = support.xi_max.min(2.0);
        Arc::new(move |x| lib.eta(norm(x)))
    } else {
        let l = T::lit(lambda as f64);
        support.xi_min = support.xi_min.max(lambda as f64 / 2.0);
        support.xi_max = support.xi_max.min(2.0 * lambda as f64);
        Arc::new(move |x| lib.beta(norm(x) / l))
    };
    let mut piece = a.with_xi_factor(format!("{}|lp(lambda={lambda})", a.meta.id), m, support);
    piece.meta.lambda = lambda as f64;
    Ok(piece)
}

/// `a_r(ξ,s,t) = ∏_j ψ(⟨ξ, e_j(s)⟩ r_j) χ̃_I(s) χ̃_I(t)` in the Frenet frame of `γ`.
pub fn build_anisotropic_symbol<T: Real>(
    lib: &Arc<CutoffLibrary>,
    curve: &Curve<T>,
    r: &ScaleVector<T>,
) -> Result<Symbol<T>> {
    let d = curve.dim();
    if r.0.len() != d {
        return Err(Error::InvalidInput(format!(
            "scale vector has {} entries, expected {d}",
            r.0.len()
        )));
    }
    let rmin = r.0.iter().fold(f64::INFINITY, |m, v| m.min(v.as_f64()));
    let meta = SymbolMeta {
        id: "a_r".into(),
        lambda: 0.0,
        a_const: f64::NAN,
        l: d,
        curve: curve.name().into(),
    };
    let support = hint((d as f64).sqrt() / rmin);
    let (lib, curve, r) = (lib.clone(), curve.clone(), r.0.clone());
    Ok(Symbol::sectioned(meta, support, d, move |xi| {
        let xi = xi.to_vec();
        let (lib, curve, r) = (lib.clone(), curve.clone(), r.clone());
        Section {
            f: Arc::new(move |s, t| {
                let cut = lib.chi_tilde_i(s) * lib.chi_tilde_i(t);
                if cut == T::zero() {
                    return T::zero();
                }
                let Ok(frame) = frenet_frame(&curve, s) else {
                    return T::zero();
                };
                frame
                    .iter()
                    .zip(&r)
                    .fold(cut, |acc, (e, &rj)| acc * lib.psi(dot(&xi, e) * rj))
            }),
            s_window: (T::lit(-2.0), T::lit(2.0)),
        }
    }))
}

/// `ã(ξ,s,t) = a(T*ξ, s₀ + ρs, t)`.
pub fn rescale_symbol<T: Real>(a: &Symbol<T>, map: &RescalingMap<T>) -> Symbol<T> {
    let n = map.n;
    let rho = map.rho;
    let rn = rho.powi(n as i32).as_f64();
    let mut meta = a.meta.clone();
    meta.id = format!("{}|rescaled(s0={},rho={rho})", a.meta.id, map.s0);
    meta.lambda *= rn;
    meta.l = n.saturating_sub(1).max(1);
    let tnorm = map.matrix.spectral_norm().as_f64();
    let s0 = map.s0.as_f64();
    let r = rho.as_f64();
    let support = SupportHint {
        xi_min: 0.0,
        xi_max: a.support.xi_max * tnorm,
        s: ((a.support.s.0 - s0) / r, (a.support.s.1 - s0) / r),
        t: a.support.t,
    };
    let base = a.clone();
    let tstar = map.inverse_transpose.clone();
    let s0 = map.s0;
    Symbol::sectioned(meta, support, a.dim(), move |xi| {
        let sec = base.section(&tstar.apply(xi));
        if sec.is_empty() {
            return sec;
        }
        let f = sec.f.clone();
        Section {
            f: Arc::new(move |s, t| f(s0 + rho * s, t)),
            s_window: ((sec.s_window.0 - s0) / rho, (sec.s_window.1 - s0) / rho),
        }
    })
}

fn fd_step<T: Real>() -> T {
    T::epsilon().cbrt() * T::lit(0.5)
}

/// `∂_s a` by central differences.
pub fn s_derivative<T: Real>(a: &Symbol<T>) -> Symbol<T> {
    let mut meta = a.meta.clone();
    meta.id = format!("{}|ds", a.meta.id);
    let base = a.clone();
    Symbol::sectioned(meta, a.support, a.dim(), move |xi| {
        let sec = base.section(xi);
        if sec.is_empty() {
            return sec;
        }
        let f = sec.f.clone();
        let h = fd_step::<T>();
        Section {
            f: Arc::new(move |s, t| (f(s + h, t) - f(s - h, t)) / (h + h)),
            s_window: sec.s_window,
        }
    })
}

/// The two terms of `𝔡_s a = t⟨γ'(s),ξ⟩a + ∂_s a`.
#[derive(Debug, Clone)]
pub struct DsSymbol<T: Real> {
    pub phase_part: Symbol<T>,
    pub derivative_part: Symbol<T>,
    pub combined: Symbol<T>,
}

pub fn d_s_symbol<T: Real>(a: &Symbol<T>, curve: &Curve<T>) -> DsSymbol<T> {
    let mut meta = a.meta.clone();
    meta.id = format!("{}|phase", a.meta.id);
    let (base, c) = (a.clone(), curve.clone());
    let phase_part = Symbol::sectioned(meta, a.support, a.dim(), move |xi| {
        let sec = base.section(xi);
        if sec.is_empty() {
            return sec;
        }
        let (f, xi, c) = (sec.f.clone(), xi.to_vec(), c.clone());
        Section {
            f: Arc::new(move |s, t| t * c.inner(1, s, &xi) * f(s, t)),
            s_window: sec.s_window,
        }
    });
    let derivative_part = s_derivative(a);
    let mut meta = a.meta.clone();
    meta.id = format!("{}|d_s", a.meta.id);
    let (p, q) = (phase_part.clone(), derivative_part.clone());
    let combined = Symbol::sectioned(meta, a.support, a.dim(), move |xi| {
        let (sp, sq) = (p.section(xi), q.section(xi));
        if sp.is_empty() {
            return sp;
        }
        let (fp, fq) = (sp.f.clone(), sq.f.clone());
        Section {
            f: Arc::new(move |s, t| fp(s, t) + fq(s, t)),
            s_window: sp.s_window,
        }
    });
    DsSymbol {
        phase_part,
        derivative_part,
        combined,
    }
}

/// A point `(ξ, s, t)` of the sampled support.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPoint<T> {
    pub xi: Vec<T>,
    pub s: T,
    pub t: T,
    pub value: T,
}

/// Halton points in the support hint (uniform in `|ξ|` and in direction) at which `a ≠ 0`.
pub fn sample_support<T: Real>(a: &Symbol<T>, draws: usize, skip: u64) -> Vec<SupportPoint<T>> {
    let d = a.dim();
    let h = a.support;
    Halton::new(d + 2, skip)
        .take(draws)
        .filter_map(|u| {
            let r = h.xi_min + (h.xi_max - h.xi_min) * u[0];
            let dir = sphere_point(&u[1..d], d);
            let xi: Vec<T> = dir.iter().map(|&c| T::lit(r * c)).collect();
            let s = T::lit(h.s.0 + (h.s.1 - h.s.0) * u[d]);
            let t = T::lit(h.t.0 + (h.t.1 - h.t.0) * u[d + 1]);
            let value = a.eval(&xi, s, t);
            (value != T::zero()).then_some(SupportPoint { xi, s, t, value })
        })
        .collect()
}

/// Maps `d − 1` uniforms to a point of `S^{d−1}` (hyperspherical angles, area-weighted only for `d ≤ 3`).
pub(crate) fn sphere_point(u: &[f64], d: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    match d {
        1 => vec![if u.first().copied().unwrap_or(0.0) < 0.5 {
            -1.0
        } else {
            1.0
        }],
        2 => {
            let th = 2.0 * PI * u[0];
            vec![th.cos(), th.sin()]
        }
        3 => {
            let z = 2.0 * u[0] - 1.0;
            let ph = 2.0 * PI * u[1];
            let r = (1.0 - z * z).sqrt();
            vec![r * ph.cos(), r * ph.sin(), z]
        }
        _ => {
            let mut v = vec![1.0; d];
            for (k, &uk) in u.iter().enumerate() {
                let ang = if k + 2 == d { 2.0 * PI * uk } else { PI * uk };
                let (s, c) = ang.sin_cos();
                for x in v.iter_mut().skip(k + 1) {
                    *x *= s;
                }
                v[k] *= c;
            }
            v
        }
    }
}

/// Two-sided constants of the type condition `A⁻¹|ξ| ≤ Σ_{i≤L}|⟨γ^{(i)}(s),ξ⟩| ≤ A|ξ|` on sampled points.
#[derive(Debug, Clone, Serialize)]
pub struct TypeReport {
    pub l: usize,
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max(max_ratio, 1/min_ratio)`.
    pub a_const: f64,
    pub xi_min: f64,
    pub xi_max: f64,
}

pub fn type_ratio<T: Real>(curve: &Curve<T>, l: usize, xi: &[T], s: T) -> f64 {
    let sum: f64 = (1..=l).map(|i| curve.inner(i, s, xi).abs().as_f64()).sum();
    sum / norm(xi).as_f64()
}

pub fn estimate_type<T: Real>(
    curve: &Curve<T>,
    l: usize,
    points: &[SupportPoint<T>],
) -> Result<TypeReport> {
    if points.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let (mut lo, mut hi, mut xmin, mut xmax) = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
    for p in points {
        let r = type_ratio(curve, l, &p.xi, p.s);
        lo = lo.min(r);
        hi = hi.max(r);
        let n = norm(&p.xi).as_f64();
        xmin = xmin.min(n);
        xmax = xmax.max(n);
    }
    Ok(TypeReport {
        l,
        samples: points.len(),
        min_ratio: lo,
        max_ratio: hi,
        a_const: hi.max(1.0 / lo),
        xi_min: xmin,
        xi_max: xmax,
    })
}

/// Sampled sandwich `supp a_δ ⊆ supp a_r ⊆ {|ξ| ≤ √d/δ}` for `r = (δ,…,δ)`.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub samples: usize,
    pub inner_violations: usize,
    pub outer_violations: usize,
    pub passes: bool,
}

pub fn isotropic_sandwich<T: Real>(
    lib: &Arc<CutoffLibrary>,
    curve: &Curve<T>,
    delta: T,
    samples: usize,
) -> Result<SandwichReport> {
    let d = curve.dim();
    let iso = build_a_delta(lib, delta, d)?;
    let aniso = build_anisotropic_symbol(lib, curve, &ScaleVector::isotropic(delta, d))?;
    let rmax = 1.6 * (d as f64).sqrt() / delta.as_f64();
    let (mut inner, mut outer) = (0, 0);
    for u in Halton::new(d + 1, 1).take(samples) {
        let dir = sphere_point(&u[..d - 1], d);
        let r = rmax * u[d - 1];
        let xi: Vec<T> = dir.iter().map(|&c| T::lit(r * c)).collect();
        let s = T::lit(-1.0 + 2.0 * u[d]);
        let vi = iso.eval(&xi, s, T::zero());
        let va = aniso.eval(&xi, s, T::zero());
        if vi > T::zero() && va <= T::zero() {
            inner += 1;
        }
        if va > T::zero() && r > (d as f64).sqrt() / delta.as_f64() * (1.0 + 1e-12) {
            outer += 1;
        }
    }
    Ok(SandwichReport {
        samples,
        inner_violations: inner,
        outer_violations: outer,
        passes: inner == 0 && outer == 0,
    })
}
