//! Empirical operator norms, scaling-law fits, the sharpness constructions,
//! the Sobolev-embedding check, kernel lemmas and the decomposition audit.

pub mod aniso;
pub mod audit;
pub mod domination;
pub mod kernels;
pub mod sharpness;
pub mod sobolev;
pub mod volume;

use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::field::{AxisLabel, Field, GridSpec};
use crate::linalg::linear_fit;
use crate::operators::{averaging_fio, averaging_fio_adjoint};
use crate::symbols::Symbol;

pub use aniso::{aniso_admissibility_experiment, AnisoReport};
pub use audit::{
    count_experiment, decomposition_audit_pipeline, rescaled_membership, AuditReport, CountReport,
    RescaledMembership, StageReport,
};
pub use domination::{backend_domination, DominationReport};
pub use kernels::{base_case_experiment, n0_lemma_experiment, BaseCaseReport, LemmaSweep};
pub use sharpness::{
    maximal_l2_norm, sharpness_log_experiment, sharpness_range_experiment, theorem1_scaling,
    LevelSetReport, RangeReport, Theorem1Report,
};
pub use sobolev::{sobolev_embedding_check, SobolevReport};
pub use volume::{tube_volume_experiment, VolumeLawReport};

/// Declared slack on fitted exponents.
pub const DEFAULT_SLACK: f64 = 0.25;

/// Stream-separated generator for `(seed, index)`.
pub fn keyed_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Random,
    Adversarial,
    PowerIteration,
}

/// Domain of an operator acting on sampled fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldShape {
    pub grid: GridSpec<f64>,
    pub axis: AxisLabel,
    pub axis_half: f64,
}

/// An operator on sampled fields whose norm can be probed.
pub trait NormOperator: Sync {
    fn id(&self) -> String;
    fn domain(&self) -> FieldShape;
    fn apply(&self, g: &Field<f64>) -> Result<Field<f64>>;

    fn linear(&self) -> bool {
        true
    }

    /// The grid adjoint, if available.
    fn adjoint(&self, _h: &Field<f64>) -> Option<Result<Field<f64>>> {
        None
    }

    /// Structured test functions; `None` falls back to random fields.
    fn adversarial(&self, _trial: usize) -> Option<Field<f64>> {
        None
    }
}

pub struct IdentityOperator {
    pub shape: FieldShape,
}

impl NormOperator for IdentityOperator {
    fn id(&self) -> String {
        "identity".into()
    }
    fn domain(&self) -> FieldShape {
        self.shape
    }
    fn apply(&self, g: &Field<f64>) -> Result<Field<f64>> {
        Ok(g.clone())
    }
    fn adjoint(&self, h: &Field<f64>) -> Option<Result<Field<f64>>> {
        Some(Ok(h.clone()))
    }
}

pub type Multiplier = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Real Fourier multiplier in `x`.
pub struct MultiplierOperator {
    pub shape: FieldShape,
    pub m: Multiplier,
}

impl NormOperator for MultiplierOperator {
    fn id(&self) -> String {
        "multiplier".into()
    }
    fn domain(&self) -> FieldShape {
        self.shape
    }
    fn apply(&self, g: &Field<f64>) -> Result<Field<f64>> {
        let m = self.m.clone();
        g.apply_multiplier(move |xi, _| m(xi))
    }
    fn adjoint(&self, h: &Field<f64>) -> Option<Result<Field<f64>>> {
        Some(self.apply(h))
    }
}

/// `𝒜[a,γ]` on a grid.
pub struct FioOperator {
    pub shape: FieldShape,
    pub symbol: Symbol<f64>,
    pub curve: Curve<f64>,
}

impl NormOperator for FioOperator {
    fn id(&self) -> String {
        format!("fio[{}]", self.symbol.meta.id)
    }
    fn domain(&self) -> FieldShape {
        self.shape
    }
    fn apply(&self, g: &Field<f64>) -> Result<Field<f64>> {
        averaging_fio(&self.symbol, &self.curve, g)
    }
    fn adjoint(&self, h: &Field<f64>) -> Option<Result<Field<f64>>> {
        Some(averaging_fio_adjoint(&self.symbol, &self.curve, h))
    }
}

/// `x ↦ sup_s |𝒜[a,γ]g(x,s)|`, sampled on the grid.
pub struct FioMaximalOperator {
    pub shape: FieldShape,
    pub symbol: Symbol<f64>,
    pub curve: Curve<f64>,
}

impl NormOperator for FioMaximalOperator {
    fn id(&self) -> String {
        format!("maximal[{}]", self.symbol.meta.id)
    }
    fn domain(&self) -> FieldShape {
        self.shape
    }
    fn linear(&self) -> bool {
        false
    }
    fn apply(&self, g: &Field<f64>) -> Result<Field<f64>> {
        let out = averaging_fio(&self.symbol, &self.curve, g)?;
        Ok(sup_over_axis(&out))
    }
}

/// `x ↦ max_k |f(x, ·)|` as a one-slice field with unit axis weight.
pub fn sup_over_axis(f: &Field<f64>) -> Field<f64> {
    let per = f.grid.points_per_slice();
    let values = (0..per)
        .map(|i| {
            let m = (0..f.grid.nt)
                .map(|k| f.values[k * per + i].norm())
                .fold(0.0, f64::max);
            Complex::new(m, 0.0)
        })
        .collect();
    Field {
        grid: GridSpec { nt: 1, ..f.grid },
        axis: f.axis,
        axis_half: 0.5,
        values,
    }
}

/// Sum of nonnegative Gaussian bumps of width `width` in every variable.
pub fn random_bump_field(
    shape: &FieldShape,
    bumps: usize,
    width: f64,
    rng: &mut impl Rng,
) -> Field<f64> {
    let d = shape.grid.d;
    let x_half = shape.grid.x_half;
    let centres: Vec<(Vec<f64>, f64, f64)> = (0..bumps)
        .map(|_| {
            let c = (0..d)
                .map(|_| x_half * (rng.random::<f64>() - 0.5))
                .collect();
            let t = shape.axis_half * (2.0 * rng.random::<f64>() - 1.0) * 0.8;
            (c, t, 0.2 + rng.random::<f64>())
        })
        .collect();
    let inv = 1.0 / (2.0 * width * width);
    Field::from_real_fn(shape.grid, shape.axis, shape.axis_half, move |x, t| {
        centres
            .iter()
            .map(|(c, tc, amp)| {
                let r2: f64 =
                    x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + (t - tc).powi(2);
                amp * (-r2 * inv).exp()
            })
            .sum()
    })
}

/// SHA-256 of the little-endian sample values.
pub fn field_hash(f: &Field<f64>) -> String {
    let mut h = Sha256::new();
    for v in &f.values {
        h.update(v.re.to_le_bytes());
        h.update(v.im.to_le_bytes());
    }
    format!("{:x}", h.finalize())
}

#[derive(Debug, Clone, Serialize)]
pub struct NormEstimate {
    pub operator: String,
    pub p: f64,
    pub q: f64,
    pub strategy: Strategy,
    /// Lower bound `‖op w‖_q / ‖w‖_p` achieved by the witness `w`.
    pub value: f64,
    pub trials: usize,
    pub seed: u64,
    pub witness_hash: String,
    /// Rayleigh quotients `‖A g_k‖²/‖g_k‖²` (power iteration only).
    pub rayleigh: Vec<f64>,
    #[serde(skip)]
    pub witness: Option<Field<f64>>,
}

fn ratio(op: &dyn NormOperator, g: &Field<f64>, p: f64, q: f64) -> Result<f64> {
    let den = g.mixed_norm(p, p);
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(op.apply(g)?.mixed_norm(q, q) / den)
}

/// `‖op g‖_q/‖g‖_p` for a stored witness.
pub fn reevaluate(op: &dyn NormOperator, est: &NormEstimate) -> Result<f64> {
    let w = est
        .witness
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("estimate carries no witness".into()))?;
    ratio(op, w, est.p, est.q)
}

pub const POWER_ITERATIONS: usize = 30;

pub fn empirical_norm(
    op: &dyn NormOperator,
    p: f64,
    q: f64,
    strategy: Strategy,
    trials: usize,
    seed: u64,
) -> Result<NormEstimate> {
    let shape = op.domain();
    let width = 2.0 * shape.grid.h();
    let mut best: (f64, Option<Field<f64>>) = (0.0, None);
    let mut rayleigh = Vec::new();
    let consider = |value: f64, g: &Field<f64>, best: &mut (f64, Option<Field<f64>>)| {
        if value > best.0 || best.1.is_none() {
            *best = (value.max(best.0), Some(g.clone()));
        }
    };
    match strategy {
        Strategy::Random | Strategy::Adversarial => {
            for trial in 0..trials {
                let g = match (strategy, op.adversarial(trial)) {
                    (Strategy::Adversarial, Some(g)) => g,
                    _ => random_bump_field(&shape, 4, width, &mut keyed_rng(seed, trial as u64)),
                };
                let v = ratio(op, &g, p, q)?;
                consider(v, &g, &mut best);
            }
        }
        Strategy::PowerIteration => {
            if !op.linear() {
                return Err(Error::InvalidStrategy(format!(
                    "power iteration needs a linear operator, `{}` is not",
                    op.id()
                )));
            }
            if p != 2.0 || q != 2.0 {
                return Err(Error::InvalidStrategy(format!(
                    "power iteration estimates L2 norms, got p={p}, q={q}"
                )));
            }
            for trial in 0..trials.max(1) {
                let mut g = random_bump_field(&shape, 4, width, &mut keyed_rng(seed, trial as u64));
                for _ in 0..POWER_ITERATIONS {
                    let ng = g.l2_norm();
                    if ng == 0.0 {
                        break;
                    }
                    g = g.scaled(1.0 / ng);
                    let ag = op.apply(&g)?;
                    let v = ag.l2_norm();
                    rayleigh.push(v * v);
                    consider(v, &g, &mut best);
                    g = op.adjoint(&ag).ok_or_else(|| {
                        Error::InvalidStrategy(format!("`{}` has no adjoint", op.id()))
                    })??;
                }
            }
        }
    }
    let witness = best.1;
    Ok(NormEstimate {
        operator: op.id(),
        p,
        q,
        strategy,
        value: best.0,
        trials,
        seed,
        witness_hash: witness.as_ref().map(field_hash).unwrap_or_default(),
        rayleigh,
        witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Claim {
    /// The norm grows at most like the claimed power.
    Upper,
    /// The norm grows at least like the claimed power.
    Lower,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    /// `log(log scale)`.
    pub x: Vec<f64>,
    /// `log(norm)`.
    pub y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r2: f64,
    pub claimed_exponent: f64,
    pub slack: f64,
    pub claim: Claim,
    pub pass: bool,
}

/// Least-squares slope of `log norm` against `log L`, where `L` is `log δ⁻¹` or `log(2+λ)`.
pub fn scaling_law_fit(
    log_scales: &[f64],
    norms: &[f64],
    claimed: f64,
    slack: f64,
    claim: Claim,
) -> Result<ScalingFit> {
    let n = log_scales.len().min(norms.len());
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    if log_scales[..n]
        .iter()
        .chain(&norms[..n])
        .any(|&v| !(v > 0.0))
    {
        return Err(Error::InvalidInput(
            "scales and norms must be positive".into(),
        ));
    }
    let x: Vec<f64> = log_scales[..n].iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = norms[..n].iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&x, &y)
        .ok_or_else(|| Error::InvalidInput("scales must not all coincide".into()))?;
    let my = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let rss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - fit.intercept - fit.slope * a).powi(2))
        .sum();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let pass = match claim {
        Claim::Upper => fit.slope <= claimed + slack,
        Claim::Lower => fit.slope >= claimed - slack,
    };
    Ok(ScalingFit {
        x,
        y,
        slope: fit.slope,
        intercept: fit.intercept,
        slope_stderr: fit.slope_stderr,
        r2,
        claimed_exponent: claimed,
        slack,
        claim,
        pass,
    })
}
