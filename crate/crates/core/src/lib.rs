//! Nikodym maximal functions over δ-tubes along non-degenerate curves.
//!
//! The crate covers the geometric layer (curves, Frenet frames, tubes), sampled
//! fields with spectral transforms, the cutoff and symbol library used in the
//! frequency decomposition, the averaging/maximal/Fourier integral operators,
//! and the experiments that audit each estimate numerically.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar for the common case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod cutoffs;
pub mod error;
pub mod experiments;
pub mod field;
pub mod linalg;
pub mod operators;
pub mod quadrature;
pub mod scalar;
pub mod symbols;
pub mod tube;

pub use error::{Error, Result};
pub use scalar::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Curve64 = curve::Curve<f64>;
pub type RescalingMap64 = curve::RescalingMap<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
