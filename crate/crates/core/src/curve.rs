//! Curves in `R^d`, their non-degeneracy structure, Frenet frames, the root
//! `σ(ξ)` and the rescaling maps of the induction on the type order.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{gram_volume, Matrix};
use crate::scalar::{dot, norm, Real};

/// Evaluates `γ^{(order)}(s)` into a caller supplied buffer of length `d`.
pub trait DerivativeOracle<T: Real>: Send + Sync {
    fn derivative_into(&self, order: usize, s: T, out: &mut [T]);
}

/// A curve `γ: I → R^d` with a derivative oracle up to order `2d`.
#[derive(Clone)]
pub struct Curve<T: Real> {
    name: String,
    d: usize,
    bound: T,
    oracle: Arc<dyn DerivativeOracle<T>>,
}

impl<T: Real> fmt::Debug for Curve<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("bound", &self.bound)
            .finish()
    }
}

/// Number of parameter samples used when deriving the regularity bound.
const BOUND_SAMPLES: usize = 257;

impl<T: Real> Curve<T> {
    /// Wraps an oracle. The regularity bound `B` is derived by sampling: `1.05·max(‖γ‖_{C^{2d}}, 1/min det)`
    /// where the determinant term is dropped for degenerate curves.
    pub fn new(name: impl Into<String>, d: usize, oracle: Arc<dyn DerivativeOracle<T>>) -> Self {
        let mut curve = Self {
            name: name.into(),
            d,
            bound: T::one(),
            oracle,
        };
        let report = check_class_membership(&curve, T::lit(2.0), d, BOUND_SAMPLES);
        let mut b = report.max_cnorm;
        if report.min_gen_det > 1e-12 {
            b = b.max(1.0 / report.min_gen_det);
        }
        curve.bound = T::lit(1.05 * b.max(1.0));
        curve
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Regularity bound `B`.
    pub fn bound(&self) -> T {
        self.bound
    }

    /// Highest derivative order the oracle is required to provide.
    pub fn max_order(&self) -> usize {
        2 * self.d
    }

    pub fn eval_into(&self, order: usize, s: T, out: &mut [T]) {
        self.oracle.derivative_into(order, s, out);
    }

    pub fn eval(&self, order: usize, s: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.d];
        self.oracle.derivative_into(order, s, &mut out);
        out
    }

    /// Like [`Curve::eval`] but rejects non-finite oracle output.
    pub fn try_eval(&self, order: usize, s: T) -> Result<Vec<T>> {
        let v = self.eval(order, s);
        if v.iter().all(|x| x.is_finite()) {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!(
                "{}: derivative {order} at s={s} is not finite",
                self.name
            )))
        }
    }

    /// `⟨γ^{(order)}(s), ξ⟩`.
    pub fn inner(&self, order: usize, s: T, xi: &[T]) -> T {
        let mut buf = [T::zero(); 8];
        if self.d <= buf.len() {
            self.eval_into(order, s, &mut buf[..self.d]);
            dot(&buf[..self.d], xi)
        } else {
            dot(&self.eval(order, s), xi)
        }
    }

    /// The curve `M γ(s)` for a `d × d` matrix `M`.
    pub fn transformed(&self, m: Matrix<T>) -> Self {
        assert_eq!(m.rows(), self.d);
        let oracle = Linear {
            base: self.clone(),
            m,
        };
        Self::new(format!("{}|linear", self.name), self.d, Arc::new(oracle))
    }
}

struct Linear<T: Real> {
    base: Curve<T>,
    m: Matrix<T>,
}

impl<T: Real> DerivativeOracle<T> for Linear<T> {
    fn derivative_into(&self, order: usize, s: T, out: &mut [T]) {
        let v = self.m.apply(&self.base.eval(order, s));
        out.copy_from_slice(&v);
    }
}

fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::from_usize_lossy(k))
}

/// `γ(s) = (s, s²/2!, …, s^d/d!)`.
#[derive(Debug, Clone, Copy)]
pub struct Moment {
    pub d: usize,
}

impl<T: Real> DerivativeOracle<T> for Moment {
    fn derivative_into(&self, order: usize, s: T, out: &mut [T]) {
        for (j0, o) in out.iter_mut().enumerate() {
            let j = j0 + 1;
            *o = if j >= order {
                s.powi((j - order) as i32) / factorial::<T>(j - order)
            } else {
                T::zero()
            };
        }
    }
}

/// `γ(s) = (cos s, sin s)`.
#[derive(Debug, Clone, Copy)]
pub struct CircleLift;

impl<T: Real> DerivativeOracle<T> for CircleLift {
    fn derivative_into(&self, order: usize, s: T, out: &mut [T]) {
        let phase = s + T::FRAC_PI_2() * T::from_usize_lossy(order % 4);
        out[0] = phase.cos();
        out[1] = phase.sin();
    }
}

/// The moment curve plus `ε·(sin s, cos s, sin s, …)`.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedMoment<T> {
    pub d: usize,
    pub eps: T,
}

impl<T: Real> DerivativeOracle<T> for PerturbedMoment<T> {
    fn derivative_into(&self, order: usize, s: T, out: &mut [T]) {
        Moment { d: self.d }.derivative_into(order, s, out);
        let phase = s + T::FRAC_PI_2() * T::from_usize_lossy(order % 4);
        let (sn, cs) = phase.sin_cos();
        for (j0, o) in out.iter_mut().enumerate() {
            *o = *o + self.eps * if j0 % 2 == 0 { sn } else { cs };
        }
    }
}

/// The straight line `(s, 0, …, 0)`; degenerate for every order above one.
#[derive(Debug, Clone, Copy)]
pub struct Line;

impl<T: Real> DerivativeOracle<T> for Line {
    fn derivative_into(&self, order: usize, s: T, out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        out[0] = match order {
            0 => s,
            1 => T::one(),
            _ => T::zero(),
        };
    }
}

/// Central finite differences of an arbitrary position map.
pub struct FiniteDifference<T: Real> {
    f: Arc<dyn Fn(T) -> Vec<T> + Send + Sync>,
}

impl<T: Real> FiniteDifference<T> {
    pub fn new(f: impl Fn(T) -> Vec<T> + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    fn step(order: usize, s: T) -> T {
        let base = T::lit(1e-4) * s.abs().max(T::one());
        if order <= 1 {
            base
        } else {
            base.max(T::epsilon().powf(T::one() / T::from_usize_lossy(order + 2)))
        }
    }
}

impl<T: Real> DerivativeOracle<T> for FiniteDifference<T> {
    fn derivative_into(&self, order: usize, s: T, out: &mut [T]) {
        if order == 0 {
            out.copy_from_slice(&(self.f)(s));
            return;
        }
        // Δ_h^n f(s) = Σ_k (-1)^k C(n,k) f(s + (n/2 - k) h)
        let h = Self::step(order, s);
        out.iter_mut().for_each(|o| *o = T::zero());
        let mut binom = T::one();
        for k in 0..=order {
            let offset = (T::from_usize_lossy(order) / T::lit(2.0) - T::from_usize_lossy(k)) * h;
            let v = (self.f)(s + offset);
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            for (o, x) in out.iter_mut().zip(&v) {
                *o = *o + sign * binom * *x;
            }
            binom = binom * T::from_usize_lossy(order - k) / T::from_usize_lossy(k + 1);
        }
        let hn = h.powi(order as i32);
        out.iter_mut().for_each(|o| *o = *o / hn);
    }
}

/// Curves addressable by registry key: `moment`, `circle2d`, `perturbed-moment:eps=<float>`, `line`.
pub fn lookup<T: Real>(key: &str, d: usize) -> Result<Curve<T>> {
    if d == 0 || d > 6 {
        return Err(Error::InvalidInput(format!("dimension {d} outside 1..=6")));
    }
    let key = key.trim();
    let curve = match key {
        "moment" => Curve::new(format!("moment{d}"), d, Arc::new(Moment { d })),
        "line" => Curve::new(format!("line{d}"), d, Arc::new(Line)),
        "circle2d" => {
            if d != 2 {
                return Err(Error::InvalidInput(format!(
                    "circle2d lives in d=2, not d={d}"
                )));
            }
            Curve::new("circle2d", 2, Arc::new(CircleLift))
        }
        _ => {
            let eps = key
                .strip_prefix("perturbed-moment:eps=")
                .ok_or_else(|| Error::Unknown {
                    kind: "curve",
                    name: key.to_string(),
                })?;
            let eps: f64 = eps
                .parse()
                .map_err(|_| Error::InvalidInput(format!("cannot parse perturbation `{eps}`")))?;
            Curve::new(
                key,
                d,
                Arc::new(PerturbedMoment {
                    d,
                    eps: T::lit(eps),
                }),
            )
        }
    };
    Ok(curve)
}

/// Registry keys accepted by [`lookup`].
pub const CURVE_KEYS: [&str; 4] = ["moment", "circle2d", "perturbed-moment:eps=<float>", "line"];

/// `sqrt(Σ (L×L minors)²)` for the matrix `(γ'(s) … γ^{(L)}(s))`.
pub fn generalized_determinant<T: Real>(curve: &Curve<T>, s: T, l: usize) -> Result<T> {
    if l == 0 || l > curve.dim() {
        return Err(Error::InvalidInput(format!(
            "order {l} outside 1..={}",
            curve.dim()
        )));
    }
    let cols = (1..=l)
        .map(|i| curve.try_eval(i, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(gram_volume(&cols))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyReport {
    #[serde(rename = "L")]
    pub l: usize,
    pub min_gen_det: f64,
    pub max_cnorm: f64,
    pub passes: bool,
    pub samples: usize,
    pub certification: &'static str,
}

/// Sampled certification of membership in the class of curves with
/// `‖γ‖_{C^{2d}} ≤ B` and generalized determinant of order `L` at least `1/B`.
pub fn check_class_membership<T: Real>(
    curve: &Curve<T>,
    b: T,
    l: usize,
    samples: usize,
) -> NondegeneracyReport {
    let samples = samples.max(2);
    let d = curve.dim();
    let mut min_det = f64::INFINITY;
    let mut max_c = 0.0f64;
    let mut buf = vec![T::zero(); d];
    let mut cols = vec![vec![T::zero(); d]; l];
    for k in 0..samples {
        let s = T::lit(-1.0 + 2.0 * k as f64 / (samples - 1) as f64);
        for i in 0..=2 * d {
            curve.eval_into(i, s, &mut buf);
            let n = norm(&buf).as_f64();
            max_c = max_c.max(if n.is_finite() { n } else { f64::INFINITY });
            if (1..=l).contains(&i) {
                cols[i - 1].copy_from_slice(&buf);
            }
        }
        let det = if l == 0 {
            1.0
        } else {
            gram_volume(&cols).as_f64()
        };
        min_det = min_det.min(if det.is_finite() { det } else { 0.0 });
    }
    let b = b.as_f64();
    NondegeneracyReport {
        l,
        min_gen_det: min_det,
        max_cnorm: max_c,
        passes: min_det >= 1.0 / b && max_c <= b,
        samples,
        certification: "sampled",
    }
}

/// Smallest `B` for which the sampled membership report passes.
pub fn class_bound(report: &NondegeneracyReport) -> f64 {
    let det_term = if report.min_gen_det > 0.0 {
        1.0 / report.min_gen_det
    } else {
        f64::INFINITY
    };
    report.max_cnorm.max(det_term)
}

/// Modified Gram–Schmidt (two passes) pivot tolerance.
const PIVOT_TOL: f64 = 1e-10;

/// Orthonormalizes `vectors` in order; fails with the 1-based index of the first dependent vector.
pub fn gram_schmidt<T: Real>(vectors: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(vectors.len());
    for (k, v) in vectors.iter().enumerate() {
        let scale = norm(v).max(T::one());
        let mut w = v.clone();
        for _pass in 0..2 {
            for e in &basis {
                let c = dot(&w, e);
                w.iter_mut().zip(e).for_each(|(wi, &ei)| *wi = *wi - c * ei);
            }
        }
        let n = norm(&w);
        if !(n > T::lit(PIVOT_TOL) * scale) {
            return Err(Error::Degenerate { order: k + 1 });
        }
        basis.push(w.into_iter().map(|x| x / n).collect());
    }
    Ok(basis)
}

/// Frenet frame `e_1(s), …, e_d(s)`: Gram–Schmidt applied to `γ'(s), …, γ^{(d)}(s)`.
pub fn frenet_frame<T: Real>(curve: &Curve<T>, s: T) -> Result<Vec<Vec<T>>> {
    let derivs = (1..=curve.dim())
        .map(|i| curve.try_eval(i, s))
        .collect::<Result<Vec<_>>>()?;
    gram_schmidt(&derivs)
}

const SIGMA_SCAN: usize = 512;

/// The parameter `σ ∈ I` with `⟨γ^{(N-1)}(σ), ξ⟩ = 0`.
///
/// Roots are bracketed on a 512-cell grid and bisected; among several roots the
/// one with the smallest residual wins, ties going to the smallest `σ`. Returns
/// `None` when no sign change is bracketed.
pub fn solve_sigma<T: Real>(curve: &Curve<T>, xi: &[T], n: usize) -> Result<Option<T>> {
    let xi_norm = norm(xi);
    if xi_norm == T::zero() {
        return Err(Error::InvalidInput("σ(ξ) is undefined at ξ = 0".into()));
    }
    if n < 2 || n > curve.dim() {
        return Err(Error::InvalidInput(format!(
            "level N={n} outside 2..={}",
            curve.dim()
        )));
    }
    let order = n - 1;
    let f = |s: T| curve.inner(order, s, xi);
    let grid = |k: usize| T::lit(-1.0 + 2.0 * k as f64 / SIGMA_SCAN as f64);
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(4.0));

    let mut roots: Vec<(T, T)> = Vec::new();
    let mut prev_s = grid(0);
    let mut prev_f = f(prev_s);
    if prev_f == T::zero() {
        roots.push((prev_s, T::zero()));
    }
    for k in 1..=SIGMA_SCAN {
        let s = grid(k);
        let fs = f(s);
        if fs == T::zero() {
            roots.push((s, T::zero()));
        } else if prev_f != T::zero() && (prev_f < T::zero()) != (fs < T::zero()) {
            let (mut lo, mut hi, mut flo) = (prev_s, s, prev_f);
            for _ in 0..200 {
                if hi - lo <= tol {
                    break;
                }
                let mid = (lo + hi) / T::lit(2.0);
                let fm = f(mid);
                if fm == T::zero() {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < T::zero()) == (flo < T::zero()) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let root = (lo + hi) / T::lit(2.0);
            roots.push((root, f(root).abs()));
        }
        prev_s = s;
        prev_f = fs;
    }
    let Some(best) = roots.iter().map(|r| r.1).reduce(T::min) else {
        return Ok(None);
    };
    let slack = T::lit(1e-10) * xi_norm;
    Ok(roots
        .iter()
        .filter(|r| r.1 <= best + slack)
        .map(|r| r.0)
        .reduce(T::min))
}

/// The linear map `T^N_{s0,ρ}` of the induction scheme: it scales `γ^{(i)}(s0)`
/// by `ρ^i` (`1 ≤ i ≤ N`) and the orthogonal complement of their span by `ρ^N`.
#[derive(Debug, Clone)]
pub struct RescalingMap<T: Real> {
    pub s0: T,
    pub rho: T,
    pub n: usize,
    pub matrix: Matrix<T>,
    pub inverse: Matrix<T>,
    /// `T^{-⊤}`, written `T*` in the change of frequency variables.
    pub inverse_transpose: Matrix<T>,
    /// `[γ'(s0) … γ^{(N)}(s0) | orthonormal complement]`.
    pub basis: Matrix<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RescalingCheck {
    pub eigen_residual: f64,
    pub complement_residual: f64,
    pub inverse_norm: f64,
    pub inverse_norm_bound: f64,
    pub det: f64,
    pub det_expected: f64,
    pub passes: bool,
}

pub fn build_rescaling_map<T: Real>(
    curve: &Curve<T>,
    s0: T,
    rho: T,
    n: usize,
) -> Result<RescalingMap<T>> {
    let d = curve.dim();
    if !(rho > T::zero() && rho < T::one()) {
        return Err(Error::InvalidInput(format!("ρ={rho} must lie in (0,1)")));
    }
    if s0 - rho < -T::one() - T::lit(1e-12) || s0 + rho > T::one() + T::lit(1e-12) {
        return Err(Error::InvalidInput(format!(
            "[s0-ρ, s0+ρ] = [{}, {}] leaves I",
            s0 - rho,
            s0 + rho
        )));
    }
    if n == 0 || n > d {
        return Err(Error::InvalidInput(format!("level N={n} outside 1..={d}")));
    }
    let derivs = (1..=n)
        .map(|i| curve.try_eval(i, s0))
        .collect::<Result<Vec<_>>>()?;
    // Orthonormal complement: Gram–Schmidt of the derivatives followed by the standard basis.
    let mut span = gram_schmidt(&derivs)?;
    let mut complement = Vec::new();
    for j in 0..d {
        if span.len() == d {
            break;
        }
        let mut e = vec![T::zero(); d];
        e[j] = T::one();
        let mut trial = span.clone();
        trial.push(e);
        if let Ok(ext) = gram_schmidt(&trial) {
            let v = ext.last().expect("nonempty").clone();
            span.push(v.clone());
            complement.push(v);
        }
    }
    let mut columns = derivs;
    columns.extend(complement);
    let p = Matrix::from_columns(&columns);
    let p_inv = p.inverse().ok_or(Error::Degenerate { order: n })?;
    let diag: Vec<T> = (1..=d).map(|i| rho.powi(i.min(n) as i32)).collect();
    let inv_diag: Vec<T> = diag.iter().map(|&x| T::one() / x).collect();
    let matrix = p.matmul(&Matrix::diagonal(&diag)).matmul(&p_inv);
    let inverse = p.matmul(&Matrix::diagonal(&inv_diag)).matmul(&p_inv);
    let inverse_transpose = inverse.transpose();
    Ok(RescalingMap {
        s0,
        rho,
        n,
        matrix,
        inverse,
        inverse_transpose,
        basis: p,
    })
}

impl<T: Real> RescalingMap<T> {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Numerical check of the defining eigen-relations, the norm bound
    /// `‖T^{-1}‖ ≤ cond(P) ρ^{-N}` and the determinant identity.
    pub fn check(&self, curve: &Curve<T>) -> RescalingCheck {
        let d = self.dim();
        let mut eig = 0.0f64;
        for i in 1..=self.n {
            let g = curve.eval(i, self.s0);
            let tg = self.matrix.apply(&g);
            let k = self.rho.powi(i as i32);
            let res = tg
                .iter()
                .zip(&g)
                .map(|(&a, &b)| (a - k * b).as_f64().powi(2))
                .sum::<f64>()
                .sqrt();
            eig = eig.max(res / (k * norm(&g)).as_f64());
        }
        let rn = self.rho.powi(self.n as i32);
        let mut comp = 0.0f64;
        for j in self.n..d {
            let v = self.basis.column(j);
            let tv = self.matrix.apply(&v);
            let res = tv
                .iter()
                .zip(&v)
                .map(|(&a, &b)| (a - rn * b).as_f64().powi(2))
                .sum::<f64>()
                .sqrt();
            comp = comp.max(res / rn.as_f64());
        }
        let inverse_norm = self.inverse.spectral_norm().as_f64();
        let p_inv = self.basis.inverse().expect("basis invertible");
        let cond = (self.basis.spectral_norm() * p_inv.spectral_norm()).as_f64();
        let bound = cond / rn.as_f64();
        let det = self.matrix.determinant().as_f64();
        let exp = (1..=self.n).sum::<usize>() + self.n * (d - self.n);
        let det_expected = self.rho.as_f64().powi(exp as i32);
        let tol = 1e-8;
        RescalingCheck {
            eigen_residual: eig,
            complement_residual: comp,
            inverse_norm,
            inverse_norm_bound: bound,
            det,
            det_expected,
            passes: eig <= tol
                && comp <= tol
                && inverse_norm <= bound * (1.0 + tol)
                && (det.abs() - det_expected).abs() <= tol * det_expected,
        }
    }
}

struct Rescaled<T: Real> {
    base: Curve<T>,
    s0: T,
    rho: T,
    gamma_s0: Vec<T>,
    inverse: Matrix<T>,
}

impl<T: Real> DerivativeOracle<T> for Rescaled<T> {
    fn derivative_into(&self, order: usize, s: T, out: &mut [T]) {
        let mut g = self.base.eval(order, self.s0 + self.rho * s);
        if order == 0 {
            g.iter_mut()
                .zip(&self.gamma_s0)
                .for_each(|(x, &c)| *x = *x - c);
        }
        let v = self.inverse.apply(&g);
        let k = self.rho.powi(order as i32);
        out.iter_mut().zip(v).for_each(|(o, x)| *o = k * x);
    }
}

/// `γ̃(s) = T^{-1}(γ(s0 + ρs) − γ(s0))`.
pub fn rescale_curve<T: Real>(curve: &Curve<T>, map: &RescalingMap<T>) -> Curve<T> {
    let oracle = Rescaled {
        base: curve.clone(),
        s0: map.s0,
        rho: map.rho,
        gamma_s0: curve.eval(0, map.s0),
        inverse: map.inverse.clone(),
    };
    let name = format!(
        "{}|rescaled(s0={},rho={},N={})",
        curve.name(),
        map.s0,
        map.rho,
        map.n
    );
    Curve::new(name, curve.dim(), Arc::new(oracle))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_determinant_is_one() {
        for d in 1..=6 {
            let c = lookup::<f64>("moment", d).unwrap();
            for s in [-1.0, -0.3, 0.0, 0.7, 1.0] {
                assert!((generalized_determinant(&c, s, d).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn circle_frame_at_zero() {
        let c = lookup::<f64>("circle2d", 2).unwrap();
        let e = frenet_frame(&c, 0.0).unwrap();
        assert!((e[0][0]).abs() < 1e-15 && (e[0][1] - 1.0).abs() < 1e-15);
        assert!((e[1][0] + 1.0).abs() < 1e-15 && e[1][1].abs() < 1e-15);
    }

    #[test]
    fn line_is_degenerate() {
        let c = lookup::<f64>("line", 3).unwrap();
        let r = check_class_membership(&c, 10.0, 2, 100);
        assert_eq!(r.min_gen_det, 0.0);
        assert!(!r.passes);
        assert!(matches!(
            frenet_frame(&c, 0.1),
            Err(Error::Degenerate { order: 2 })
        ));
    }

    #[test]
    fn sigma_examples() {
        let circle = lookup::<f64>("circle2d", 2).unwrap();
        assert!(solve_sigma(&circle, &[1.0, 0.0], 2).unwrap().unwrap().abs() < 1e-12);
        let m = lookup::<f64>("moment", 2).unwrap();
        let s = solve_sigma(&m, &[0.3, 0.6], 2).unwrap().unwrap();
        assert!((s + 0.5).abs() < 1e-11);
        assert!(solve_sigma(&m, &[1.0, 0.25], 2).unwrap().is_none());
        assert!(solve_sigma(&m, &[0.0, 0.0], 2).is_err());
    }

    #[test]
    fn moment_rescaling_is_diagonal() {
        let c = lookup::<f64>("moment", 3).unwrap();
        let map = build_rescaling_map(&c, 0.0, 0.5, 3).unwrap();
        let expected = Matrix::diagonal(&[0.5, 0.25, 0.125]);
        assert!(map.matrix.max_abs_diff(&expected) < 1e-15);
        assert!(map.check(&c).passes);
    }

    #[test]
    fn registry_rejects_unknown_keys() {
        assert!(matches!(
            lookup::<f64>("spiral", 2),
            Err(Error::Unknown { .. })
        ));
        assert!(lookup::<f64>("circle2d", 3).is_err());
        assert!(lookup::<f64>("perturbed-moment:eps=abc", 3).is_err());
        let c = lookup::<f32>("perturbed-moment:eps=0.001", 3).unwrap();
        assert_eq!(c.dim(), 3);
    }

    #[test]
    fn finite_difference_oracle_matches_closed_form() {
        let fd = Curve::new(
            "fd-circle",
            2,
            Arc::new(FiniteDifference::new(|s: f64| vec![s.cos(), s.sin()])),
        );
        let exact = lookup::<f64>("circle2d", 2).unwrap();
        for i in 0..=3 {
            let a = fd.eval(i, 0.4);
            let b = exact.eval(i, 0.4);
            let tol = [1e-12, 1e-7, 1e-5, 1e-4][i];
            assert!(
                a.iter().zip(&b).all(|(x, y)| (x - y).abs() < tol),
                "order {i}: {a:?} vs {b:?}"
            );
        }
    }
}
