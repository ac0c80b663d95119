//! `‖𝒩[a_δ]g‖_{L²_x L^∞_s} ≤ C(√(log δ⁻¹)‖𝔇_s𝒜[a_δ]g‖₂ + ‖g‖₂)` on random band-limited fields.

use std::sync::Arc;

use serde::Serialize;

use super::{keyed_rng, random_bump_field, FieldShape};
use crate::curve::Curve;
use crate::cutoffs::CutoffLibrary;
use crate::error::{Error, Result};
use crate::field::{AxisLabel, GridSpec};
use crate::operators::averaging_fio_batch;
use crate::symbols::build_a_delta;

/// Fields transformed together; bounds peak memory on fine grids.
const BATCH: usize = 2;

#[derive(Debug, Clone, Serialize)]
pub struct SobolevPoint {
    pub delta: f64,
    pub nx: usize,
    pub fields: usize,
    /// `max_g` of the ratio; the smallest admissible constant on the sample.
    pub constant: f64,
    pub min_ratio: f64,
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SobolevReport {
    pub d: usize,
    pub points: Vec<SobolevPoint>,
    pub max_constant: f64,
    pub min_constant: f64,
    pub uniformity_ratio: f64,
    pub pass: bool,
}

/// Grid with `X = 2` and `nx = nt = 2/δ`.
pub fn sobolev_grid(d: usize, delta: f64) -> Result<GridSpec<f64>> {
    let n = (2.0 / delta).round() as usize;
    GridSpec::new(d, 2.0, n, n)
}

pub fn sobolev_embedding_check(
    curve: &Curve<f64>,
    deltas: &[f64],
    fields_per_delta: usize,
    seed: u64,
) -> Result<SobolevReport> {
    if deltas.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let d = curve.dim();
    let lib = Arc::new(CutoffLibrary::new());
    let mut points = Vec::new();
    for (di, &delta) in deltas.iter().enumerate() {
        let grid = sobolev_grid(d, delta)?;
        let shape = FieldShape {
            grid,
            axis: AxisLabel::T,
            axis_half: 1.0,
        };
        let a = build_a_delta(&lib, delta, d)?;
        let log_term = (1.0 / delta).ln().sqrt();
        let mut ratios = Vec::with_capacity(fields_per_delta);
        let indices: Vec<usize> = (0..fields_per_delta).collect();
        for chunk in indices.chunks(BATCH) {
            let fields: Vec<_> = chunk
                .iter()
                .map(|&m| {
                    random_bump_field(
                        &shape,
                        6,
                        grid.h(),
                        &mut keyed_rng(seed, (di * 10_000 + m) as u64),
                    )
                })
                .collect();
            let outs = averaging_fio_batch(&a, curve, &fields)?;
            for (g, out) in fields.iter().zip(&outs) {
                let lhs = out.mixed_norm(2.0, f64::INFINITY);
                let rhs = log_term * out.fractional_s_derivative(0.5)?.l2_norm() + g.l2_norm();
                ratios.push(if rhs > 0.0 { lhs / rhs } else { 0.0 });
            }
        }
        let constant = ratios.iter().copied().fold(0.0, f64::max);
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        points.push(SobolevPoint {
            delta,
            nx: grid.nx,
            fields: fields_per_delta,
            constant,
            min_ratio,
            ratios,
        });
    }
    let max_constant = points.iter().map(|p| p.constant).fold(0.0, f64::max);
    let min_constant = points
        .iter()
        .map(|p| p.constant)
        .fold(f64::INFINITY, f64::min);
    let uniformity_ratio = if min_constant > 0.0 {
        max_constant / min_constant
    } else {
        f64::INFINITY
    };
    Ok(SobolevReport {
        d,
        points,
        max_constant,
        min_constant,
        uniformity_ratio,
        pass: uniformity_ratio <= 2.0,
    })
}
