//! The decomposition audit: every quantitative step between a symbol of type
//! `(λ, A, N)` and the rescaled symbols of type `N − 1`, checked on samples.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::curve::{
    build_rescaling_map, check_class_membership, class_bound, rescale_curve, Curve,
    NondegeneracyReport,
};
use crate::cutoffs::CutoffLibrary;
use crate::error::{Error, Result};
use crate::operators::{schur_bound, KernelQuadrature};
use crate::scalar::norm;
use crate::symbols::decomposition::{
    accepted, base_symbol, build_a_n, build_a_n_nu, build_h, calibrate_a_prime, calibrate_eps0,
    calibrate_eps1, inner_product_bracket, rho, sample_annulus, sample_near_gamma, split_by_h,
    verify_inner_product_bounds, Calibration, GFunction, HFactor, HSplitReport, InnerProductReport,
};
use crate::symbols::{d_s_symbol, estimate_type, rescale_symbol, SupportPoint, Symbol, TypeReport};

/// Degeneracy threshold `κ` of the `H`-split.
pub const KAPPA: f64 = 0.5;

/// Upper limit on the `λ`-free constants `W` and `D` of the `n = 0` estimate.
pub const DERIVATIVE_CAP: f64 = 100.0;

/// Largest admissible spread of the rescaled-curve constant `B₁` across `ρ`.
pub const B1_SPREAD: f64 = 1.5;

/// The constant `C` in `#{n : aⁿ ≠ 0} ≤ C log₂(2 + λ)`.
pub const COUNT_CONSTANT: f64 = 1.0;

/// Safety factor on the sampled maximum of `G` over `supp aH`.
pub const G_MARGIN: f64 = 2.0;

const DRAWS: usize = 6000;
const SCHUR_FREQUENCIES: usize = 3;
const MEMBERSHIP_SAMPLES: usize = 1000;

pub const STAGES: [&str; 8] = [
    "h-split",
    "g-bounds",
    "an-count",
    "inner-products",
    "rescaling-map",
    "curve-membership",
    "rescaled-type",
    "n0-schur",
];

fn stage_err(index: usize, e: Error) -> Error {
    match e {
        Error::Stage { .. } => e,
        other => Error::Stage {
            stage: STAGES[index].into(),
            reason: other.to_string(),
        },
    }
}

/// The base symbol, its calibrated constants and the pieces built from them.
#[derive(Clone)]
pub struct Decomposition {
    pub curve: Curve<f64>,
    pub lib: Arc<CutoffLibrary>,
    pub lambda: u64,
    pub n_level: usize,
    pub base: Symbol<f64>,
    pub cal: Calibration,
    pub h: HFactor<f64>,
    pub a_h: Symbol<f64>,
    pub g: GFunction<f64>,
    pub h_report: HSplitReport,
    pub type_report: TypeReport,
    /// Annulus and near-`Γ` draws shared by every audit.
    pub draws: Vec<(Vec<f64>, f64, f64)>,
}

impl Decomposition {
    /// Runs the calibration chain `A → A' → ε₀ → G → ε₁`; failures are reported
    /// against the stage that consumes the constant.
    pub fn build(
        curve: &Curve<f64>,
        lib: &Arc<CutoffLibrary>,
        lambda: u64,
        n_level: usize,
        seed: u64,
    ) -> Result<Self> {
        let d = curve.dim();
        let lam = lambda as f64;
        let base = base_symbol(lib, curve, lambda, n_level).map_err(|e| stage_err(0, e))?;
        let skip = seed.wrapping_mul(7919) % 100_000;
        let mut draws = sample_annulus::<f64>(d, lam, DRAWS, skip);
        draws.extend(sample_near_gamma(curve, lam, n_level, 2.0, DRAWS, skip));
        let points = accepted(&base, &draws);
        let type_report = estimate_type(curve, n_level, &points).map_err(|e| stage_err(0, e))?;
        let a_const = type_report.a_const;
        let (a_prime, h_report) =
            calibrate_a_prime(&points, curve, lib, lam, n_level, a_const, KAPPA)
                .map_err(|e| stage_err(0, e))?;
        let b = curve.bound();
        let eps0 = calibrate_eps0(b, n_level).map_err(|e| stage_err(1, e))?;
        let g = GFunction {
            curve: curve.clone(),
            lambda: lam,
            n: n_level,
            eps0,
        };
        let h = build_h(curve, lib, lam, a_prime, n_level).map_err(|e| stage_err(0, e))?;
        let (a_h, _) = split_by_h(&base, &h);
        let sampled = max_g(&a_h, &g, &draws);
        let g_bound = if sampled > 0.0 {
            g.analytic_bound().min(G_MARGIN * sampled)
        } else {
            g.analytic_bound()
        };
        let eps1 = calibrate_eps1(g_bound, b, d).map_err(|e| stage_err(1, e))?;
        draws.extend(sample_near_gamma(
            curve,
            lam,
            n_level,
            a_prime,
            DRAWS,
            skip + DRAWS as u64,
        ));
        let cal = Calibration {
            lambda: lam,
            n_level,
            a_const,
            b,
            kappa: KAPPA,
            a_prime,
            a_prime_analytic: 4.0 * (n_level as f64 - 1.0) * a_const / KAPPA,
            eps0,
            eps1,
            g_bound,
        };
        Ok(Self {
            curve: curve.clone(),
            lib: lib.clone(),
            lambda,
            n_level,
            base,
            cal,
            h,
            a_h,
            g,
            h_report,
            type_report,
            draws,
        })
    }

    pub fn piece(&self, n: u32) -> Symbol<f64> {
        build_a_n(&self.a_h, &self.g, &self.lib, self.cal.eps1, n)
    }

    /// Largest `n` with `ε₁²4⁻ⁿλ^{2/N}G_max ≥ 1/4`, below which `β₁` can be nonzero.
    pub fn n_max(&self) -> Option<u32> {
        analytic_n_max(&self.cal)
    }
}

/// Largest sampled `G` on the support of `a`, or 0 when no draw lands there.
fn max_g(a: &Symbol<f64>, g: &GFunction<f64>, draws: &[(Vec<f64>, f64, f64)]) -> f64 {
    accepted(a, draws)
        .iter()
        .filter_map(|p| g.eval(&p.xi, p.s))
        .fold(0.0, f64::max)
}

fn analytic_n_max(cal: &Calibration) -> Option<u32> {
    let top = 4.0 * cal.eps1 * cal.eps1 * cal.lambda.powf(2.0 / cal.n_level as f64) * cal.g_bound;
    (top >= 4.0).then(|| (top.ln() / 4f64.ln()).floor() as u32)
}

/// `1 + n_max`: the pieces `a⁰, …, a^{n_max}` that can be nonzero.
fn analytic_count(cal: &Calibration) -> u32 {
    1 + analytic_n_max(cal).unwrap_or(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub index: usize,
    pub name: String,
    pub pass: bool,
    /// No sampled point reached the objects the stage audits.
    pub vacuous: bool,
    pub summary: String,
    pub details: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub schema: u32,
    pub curve: String,
    pub d: usize,
    pub lambda: u64,
    pub n_level: usize,
    pub calibration: Calibration,
    pub stages: Vec<StageReport>,
    pub pass: bool,
}

fn stage(index: usize, pass: bool, vacuous: bool, summary: String, details: Value) -> StageReport {
    StageReport {
        index: index + 1,
        name: STAGES[index].into(),
        pass,
        vacuous,
        summary,
        details,
    }
}

/// Runs the eight stages in order and aborts with [`Error::Stage`] at the first failure.
///
/// The membership stage also certifies the input curve; that part runs before
/// the calibration because every later constant presumes it.
pub fn decomposition_audit_pipeline(
    curve: &Curve<f64>,
    lambda: u64,
    n_level: usize,
    seed: u64,
    q: &KernelQuadrature,
) -> Result<AuditReport> {
    let membership = check_class_membership(curve, curve.bound(), n_level, MEMBERSHIP_SAMPLES);
    if !membership.passes {
        return Err(Error::Stage {
            stage: STAGES[5].into(),
            reason: format!(
                "{} is not in the class at level N={n_level}: min generalized determinant {:.3e}, C-norm {:.3e}, B = {:.3e}",
                curve.name(),
                membership.min_gen_det,
                membership.max_cnorm,
                curve.bound()
            ),
        });
    }
    let lib = Arc::new(CutoffLibrary::new());
    let dec = Decomposition::build(curve, &lib, lambda, n_level, seed)?;
    let mut stages = Vec::with_capacity(8);
    let mut push = |s: StageReport| -> Result<()> {
        let fail = (!s.pass).then(|| Error::Stage {
            stage: s.name.clone(),
            reason: s.summary.clone(),
        });
        stages.push(s);
        fail.map_or(Ok(()), Err)
    };

    push(h_split_stage(&dec))?;
    push(g_bounds_stage(&dec))?;
    push(count_stage(&dec))?;
    let (ip_stage, cells) = inner_product_stage(&dec);
    push(ip_stage)?;
    let rhos = rescaling_scales(&dec, &cells);
    push(rescaling_map_stage(&dec, &rhos).map_err(|e| stage_err(4, e))?)?;
    push(membership_stage(&dec, &rhos, &membership).map_err(|e| stage_err(5, e))?)?;
    push(rescaled_type_stage(&dec, &cells).map_err(|e| stage_err(6, e))?)?;
    let schur = n0_schur_stage(&dec, q).map_err(|e| stage_err(7, e))?;
    push(stage(
        7,
        schur.pass,
        false,
        format!(
            "S0·Λ = {:.3e} (≤ 2W = {:.3e}), S1/Λ = {:.3e} (≤ 2WD² = {:.3e}), W = {:.2}, D = {:.2}",
            schur.normalized0,
            2.0 * schur.width_constant,
            schur.normalized1,
            2.0 * schur.width_constant * schur.derivative_constant.powi(2),
            schur.width_constant,
            schur.derivative_constant
        ),
        json!(schur),
    ))?;
    let pass = stages.iter().all(|s| s.pass);
    Ok(AuditReport {
        schema: 1,
        curve: curve.name().into(),
        d: curve.dim(),
        lambda,
        n_level,
        calibration: dec.cal.clone(),
        stages,
        pass,
    })
}

fn h_split_stage(dec: &Decomposition) -> StageReport {
    let r = &dec.h_report;
    let pass = r.passes && dec.cal.a_prime <= 2.0 * dec.cal.a_prime_analytic.max(2.0);
    stage(
        0,
        pass,
        false,
        format!(
            "A = {:.3}, A' = {} (analytic {:.2}), {} samples in supp aH, worst degeneracy ratio {:.3}",
            dec.cal.a_const, dec.cal.a_prime, dec.cal.a_prime_analytic, r.samples, r.worst_degeneracy_ratio
        ),
        json!({ "h_split": r, "type": dec.type_report }),
    )
}

fn g_bounds_stage(dec: &Decomposition) -> StageReport {
    let pts = accepted(&dec.a_h, &dec.draws);
    let (mut lo, mut hi, mut used) = (f64::INFINITY, 0.0f64, 0usize);
    for p in &pts {
        if let Some(v) = dec.g.eval(&p.xi, p.s) {
            lo = lo.min(v);
            hi = hi.max(v);
            used += 1;
        }
    }
    let bound = dec.cal.g_bound;
    let analytic = dec.g.analytic_bound();
    let pass = used > 0 && lo >= 0.0 && hi <= bound && bound <= analytic;
    stage(
        1,
        pass,
        false,
        format!("G ∈ [{lo:.3e}, {hi:.3e}] on {used} points, calibrated bound {bound:.3e}, analytic {analytic:.3e}"),
        json!({ "samples": used, "min": lo, "max": hi, "bound": bound, "analytic_bound": analytic, "eps0": dec.cal.eps0, "eps1": dec.cal.eps1 }),
    )
}

/// Empirical count of nonzero pieces and the largest residual of `Σₙ aⁿ = a`.
fn empirical_count(
    a: &Symbol<f64>,
    g: &GFunction<f64>,
    lib: &Arc<CutoffLibrary>,
    eps1: f64,
    draws: &[(Vec<f64>, f64, f64)],
    n_top: u32,
) -> (Vec<usize>, f64) {
    let pieces: Vec<Symbol<f64>> = (0..=n_top).map(|n| build_a_n(a, g, lib, eps1, n)).collect();
    let mut hits = vec![0usize; pieces.len()];
    let mut residual = 0.0f64;
    for (xi, s, t) in draws {
        let total = a.eval(xi, *s, *t);
        if total == 0.0 {
            continue;
        }
        let mut sum = 0.0;
        for (n, p) in pieces.iter().enumerate() {
            let v = p.eval(xi, *s, *t);
            if v != 0.0 {
                hits[n] += 1;
                sum += v;
            }
        }
        residual = residual.max((total - sum).abs());
    }
    (hits, residual)
}

fn count_stage(dec: &Decomposition) -> StageReport {
    let analytic = analytic_count(&dec.cal);
    let (hits, residual) = empirical_count(
        &dec.a_h,
        &dec.g,
        &dec.lib,
        dec.cal.eps1,
        &dec.draws,
        analytic + 1,
    );
    let empirical = hits.iter().filter(|&&h| h > 0).count() as u32;
    let limit = COUNT_CONSTANT * (2.0 + dec.cal.lambda).log2();
    let pass = empirical <= analytic && analytic as f64 <= limit && residual <= 1e-10;
    stage(
        2,
        pass,
        false,
        format!("{empirical} nonzero pieces sampled, {analytic} possible, limit {limit:.2}, partition residual {residual:.1e}"),
        json!({ "analytic": analytic, "empirical": empirical, "hits": hits, "limit": limit, "partition_residual": residual }),
    )
}

/// Sampled support of `a^{n,ν}` for every `n ≥ 1` and `ν` it reaches.
pub struct Cell {
    pub n: u32,
    pub nu: i64,
    pub rho: f64,
    pub symbol: Symbol<f64>,
    pub points: Vec<SupportPoint<f64>>,
}

fn cells(dec: &Decomposition) -> Vec<Cell> {
    let Some(n_max) = dec.n_max() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for n in 1..=n_max {
        let a_n = dec.piece(n);
        let r = rho(dec.cal.lambda, dec.n_level, n);
        let mut by_nu: BTreeMap<i64, Cell> = BTreeMap::new();
        for p in accepted(&a_n, &dec.draws) {
            let k = p.s / r;
            for nu in [k.floor() as i64, k.ceil() as i64] {
                let cell = by_nu.entry(nu).or_insert_with(|| Cell {
                    n,
                    nu,
                    rho: r,
                    symbol: build_a_n_nu(&a_n, &dec.lib, n, nu, dec.cal.lambda, dec.n_level),
                    points: Vec::new(),
                });
                if cell
                    .points
                    .last()
                    .is_some_and(|q| q.xi == p.xi && q.s == p.s && q.t == p.t)
                {
                    continue;
                }
                let value = cell.symbol.eval(&p.xi, p.s, p.t);
                if value != 0.0 {
                    cell.points.push(SupportPoint { value, ..p.clone() });
                }
            }
        }
        out.extend(by_nu.into_values().filter(|c| !c.points.is_empty()));
    }
    out
}

fn inner_product_stage(dec: &Decomposition) -> (StageReport, Vec<Cell>) {
    let cells = cells(dec);
    let reports: Vec<InnerProductReport> = cells
        .iter()
        .map(|c| {
            verify_inner_product_bounds(
                &c.symbol.meta.id,
                &dec.curve,
                &c.points,
                c.n,
                Some(c.nu),
                &dec.cal,
            )
        })
        .collect();
    let (lower, upper) = inner_product_bracket(&dec.cal);
    let vacuous = reports.is_empty();
    let pass = reports.iter().all(|r| r.pass);
    let worst = reports
        .iter()
        .map(|r| r.fraction_within)
        .fold(1.0, f64::min);
    let summary = if vacuous {
        "no sampled point reaches a piece with n ≥ 1".to_string()
    } else {
        format!(
            "{} cells, bracket [{lower:.3e}, {upper:.3e}], worst in-bracket fraction {worst:.4}",
            reports.len()
        )
    };
    (stage(3, pass, vacuous, summary, json!(reports)), cells)
}

/// `(ρ, s₀)` for every audited cell, plus the largest dyadic `ρ ≤ B^{−2d}` at `s₀ = 0`.
fn rescaling_scales(dec: &Decomposition, cells: &[Cell]) -> Vec<(f64, f64)> {
    let d = dec.curve.dim() as i32;
    let rho_star = 2f64.powf(dec.cal.b.powi(-2 * d).log2().floor()).min(0.5);
    let mut out = vec![(rho_star, 0.0)];
    for c in cells {
        let s0 = (c.rho * c.nu as f64).clamp(-1.0 + c.rho, 1.0 - c.rho);
        if !out.iter().any(|&(r, s)| r == c.rho && s == s0) {
            out.push((c.rho, s0));
        }
    }
    out
}

fn rescaling_map_stage(dec: &Decomposition, rhos: &[(f64, f64)]) -> Result<StageReport> {
    let mut checks = Vec::new();
    for &(r, s0) in rhos {
        let map = build_rescaling_map(&dec.curve, s0, r, dec.n_level)?;
        checks.push(json!({ "rho": r, "s0": s0, "check": map.check(&dec.curve) }));
    }
    let pass = checks
        .iter()
        .all(|c| c["check"]["passes"].as_bool() == Some(true));
    let worst = checks
        .iter()
        .filter_map(|c| c["check"]["eigen_residual"].as_f64())
        .fold(0.0, f64::max);
    Ok(stage(
        4,
        pass,
        false,
        format!(
            "{} maps, worst eigen-relation residual {worst:.1e}",
            checks.len()
        ),
        json!(checks),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaledBound {
    pub rho: f64,
    pub s0: f64,
    pub b1: f64,
    pub report: NondegeneracyReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaledMembership {
    pub n_level: usize,
    pub bounds: Vec<RescaledBound>,
    pub min: f64,
    pub max: f64,
    /// `max B₁ / min B₁`.
    pub spread: f64,
    pub pass: bool,
}

/// Class bound `B₁` at level `N − 1` of the rescaled curve for each `(ρ, s0)`.
pub fn rescaled_membership(
    curve: &Curve<f64>,
    n_level: usize,
    scales: &[(f64, f64)],
    samples: usize,
) -> Result<RescaledMembership> {
    if n_level < 2 {
        return Err(Error::InvalidInput(format!(
            "level N={n_level} leaves no rescaled level"
        )));
    }
    let bounds = scales
        .iter()
        .map(|&(rho, s0)| {
            let map = build_rescaling_map(curve, s0, rho, n_level)?;
            let report =
                check_class_membership(&rescale_curve(curve, &map), 2.0, n_level - 1, samples);
            Ok(RescaledBound {
                rho,
                s0,
                b1: class_bound(&report),
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max = bounds.iter().map(|b| b.b1).fold(0.0, f64::max);
    let min = bounds.iter().map(|b| b.b1).fold(f64::INFINITY, f64::min);
    let spread = max / min;
    Ok(RescaledMembership {
        n_level,
        bounds,
        min,
        max,
        spread,
        pass: max.is_finite() && spread <= B1_SPREAD,
    })
}

fn membership_stage(
    dec: &Decomposition,
    rhos: &[(f64, f64)],
    input: &NondegeneracyReport,
) -> Result<StageReport> {
    let m = rescaled_membership(&dec.curve, dec.n_level, rhos, MEMBERSHIP_SAMPLES)?;
    Ok(stage(
        5,
        m.pass,
        false,
        format!(
            "input curve in class N={} (B = {:.3}); rescaled B₁ ∈ [{:.3}, {:.3}], spread {:.3}",
            dec.n_level, dec.cal.b, m.min, m.max, m.spread
        ),
        json!({ "input": input, "rescaled": m.bounds, "spread": m.spread }),
    ))
}

fn rescaled_type_stage(dec: &Decomposition, cells: &[Cell]) -> Result<StageReport> {
    let (lower, upper) = inner_product_bracket(&dec.cal);
    let mut rows = Vec::new();
    let mut pass = true;
    for c in cells {
        let s0 = (c.rho * c.nu as f64).clamp(-1.0 + c.rho, 1.0 - c.rho);
        let map = build_rescaling_map(&dec.curve, s0, c.rho, dec.n_level)?;
        let curve = rescale_curve(&dec.curve, &map);
        let sym = rescale_symbol(&c.symbol, &map);
        let tt = map.matrix.transpose();
        let mut mapped = Vec::with_capacity(c.points.len());
        let mut consistency = 0.0f64;
        let mut xi_ratio = (f64::INFINITY, 0.0f64);
        let scale = c.rho.powi(dec.n_level as i32) * dec.cal.lambda;
        for p in &c.points {
            let xi = tt.apply(&p.xi);
            let s = (p.s - s0) / c.rho;
            consistency = consistency.max((sym.eval(&xi, s, p.t) - p.value).abs());
            let r = norm(&xi) / scale;
            xi_ratio = (xi_ratio.0.min(r), xi_ratio.1.max(r));
            mapped.push(SupportPoint {
                xi,
                s,
                t: p.t,
                value: p.value,
            });
        }
        let report = estimate_type(&curve, dec.n_level - 1, &mapped)?;
        let p_inv = map
            .basis
            .inverse()
            .ok_or(Error::Degenerate { order: dec.n_level })?;
        let cond = map.basis.spectral_norm() * p_inv.spectral_norm();
        let bound = 4.0 * cond * upper.max(1.0 / lower);
        let ok = report.a_const <= bound && consistency <= 1e-9;
        pass &= ok;
        rows.push(json!({
            "n": c.n, "nu": c.nu, "rho": c.rho, "s0": s0, "type": report, "a1_bound": bound,
            "xi_over_rho_n_lambda": [xi_ratio.0, xi_ratio.1], "consistency": consistency, "pass": ok,
        }));
    }
    let vacuous = cells.is_empty();
    let summary = if vacuous {
        "no rescaled symbol to audit".to_string()
    } else {
        let worst = rows
            .iter()
            .filter_map(|r| r["type"]["a_const"].as_f64())
            .fold(0.0, f64::max);
        format!(
            "{} rescaled symbols, worst type constant {worst:.3}",
            rows.len()
        )
    };
    Ok(stage(6, pass, vacuous, summary, json!(rows)))
}

/// Schur sums of `K[a⁰]` and `K[𝔡_s a⁰]` normalized by `Λ = λ^{1/N}`, with the
/// measured width `W` of the `s`-support and the size `D` of `𝔡_s a⁰`, both in units of `Λ`.
#[derive(Debug, Clone, Serialize)]
pub struct N0Schur {
    pub big_lambda: f64,
    pub samples: usize,
    pub schur0: f64,
    pub schur1: f64,
    pub normalized0: f64,
    pub normalized1: f64,
    pub width_constant: f64,
    pub width_analytic: f64,
    pub derivative_constant: f64,
    pub pass: bool,
}

pub fn n0_schur_stage(dec: &Decomposition, q: &KernelQuadrature) -> Result<N0Schur> {
    let big = dec.cal.lambda.powf(1.0 / dec.n_level as f64);
    let a0 = dec.piece(0);
    let da0 = d_s_symbol(&a0, &dec.curve).combined;
    let pts: Vec<SupportPoint<f64>> = accepted(&a0, &dec.draws)
        .into_iter()
        .filter(|p| dec.g.anchor(&p.xi).is_some())
        .collect();
    if pts.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut ranked: Vec<&SupportPoint<f64>> = pts.iter().collect();
    ranked.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()));
    let mut xis: Vec<Vec<f64>> = Vec::new();
    for p in ranked {
        if xis.len() == SCHUR_FREQUENCIES {
            break;
        }
        if !xis.contains(&p.xi) {
            xis.push(p.xi.clone());
        }
    }
    let mut width = 0.0f64;
    let mut deriv = pts
        .iter()
        .map(|p| da0.eval(&p.xi, p.s, p.t).abs())
        .fold(0.0, f64::max);
    for xi in &xis {
        let sec = a0.section(xi);
        let dsec = da0.section(xi);
        let (lo, hi) = sec.s_window;
        width = width.max(hi - lo);
        for k in 0..=64 {
            let s = lo + (hi - lo) * k as f64 / 64.0;
            for t in [-1.0, 0.0, 1.0] {
                deriv = deriv.max(dsec.eval(s, t).abs());
            }
        }
    }
    let tps = [-0.9, 0.0, 0.7];
    let s0 = schur_bound(&a0, &dec.curve, &xis, &tps, q);
    let s1 = schur_bound(&da0, &dec.curve, &xis, &tps, q);
    let width_constant = width * big;
    let derivative_constant = deriv / big;
    let normalized0 = s0.sup * big;
    let normalized1 = s1.sup / big;
    let pass = width_constant <= DERIVATIVE_CAP
        && derivative_constant <= DERIVATIVE_CAP
        && normalized0 <= 2.0 * width_constant
        && normalized1 <= 2.0 * width_constant * derivative_constant.powi(2);
    Ok(N0Schur {
        big_lambda: big,
        samples: s0.samples,
        schur0: s0.sup,
        schur1: s1.sup,
        normalized0,
        normalized1,
        width_constant,
        width_analytic: 4.0 * dec.cal.eps0 / dec.cal.eps1,
        derivative_constant,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CountPoint {
    pub lambda: u64,
    pub analytic: u32,
    pub empirical: u32,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CountReport {
    pub curve: String,
    pub n_level: usize,
    pub constant: f64,
    pub points: Vec<CountPoint>,
    pub pass: bool,
}

/// `#{n : aⁿ ≠ 0} ≤ C log₂(2 + λ)` for the base symbol across `λ`; the empirical
/// count uses near-`Γ` draws of the base symbol in place of `aH`.
pub fn count_experiment(
    curve: &Curve<f64>,
    n_level: usize,
    lambdas: &[u64],
    seed: u64,
) -> Result<CountReport> {
    let lib = Arc::new(CutoffLibrary::new());
    let b = curve.bound();
    let eps0 = calibrate_eps0(b, n_level)?;
    let mut points = Vec::new();
    for &lambda in lambdas {
        let lam = lambda as f64;
        let a = base_symbol(&lib, curve, lambda, n_level)?;
        let g = GFunction {
            curve: curve.clone(),
            lambda: lam,
            n: n_level,
            eps0,
        };
        let g_bound = g.analytic_bound();
        let eps1 = calibrate_eps1(g_bound, b, curve.dim())?;
        let cal = Calibration {
            lambda: lam,
            n_level,
            a_const: 1.0,
            b,
            kappa: KAPPA,
            a_prime: 2.0,
            a_prime_analytic: 2.0,
            eps0,
            eps1,
            g_bound,
        };
        let analytic = analytic_count(&cal);
        let draws = sample_near_gamma::<f64>(curve, lam, n_level, 2.0, DRAWS / 2, seed % 100_000);
        let (hits, _) = empirical_count(&a, &g, &lib, eps1, &draws, analytic + 1);
        let empirical = hits.iter().filter(|&&h| h > 0).count() as u32;
        let limit = COUNT_CONSTANT * (2.0 + lam).log2();
        points.push(CountPoint {
            lambda,
            analytic,
            empirical,
            limit,
            pass: empirical <= analytic && analytic as f64 <= limit,
        });
    }
    let pass = !points.is_empty() && points.iter().all(|p| p.pass);
    Ok(CountReport {
        curve: curve.name().into(),
        n_level,
        constant: COUNT_CONSTANT,
        points,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::lookup;

    #[test]
    fn line_fails_membership_first() {
        let c = lookup::<f64>("line", 2).unwrap();
        let q = KernelQuadrature {
            t_levels: 1,
            ..Default::default()
        };
        match decomposition_audit_pipeline(&c, 256, 2, 1, &q) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "curve-membership"),
            other => panic!(
                "expected a membership failure, got {:?}",
                other.map(|r| r.pass)
            ),
        }
    }

    #[test]
    fn degenerate_lambda_counts_trivially() {
        let c = lookup::<f64>("circle2d", 2).unwrap();
        let r = count_experiment(&c, 2, &[1], 3).unwrap();
        assert!(r.pass && r.points[0].analytic <= 1, "{:?}", r.points);
    }
}
