//! The scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// A real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Sum
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable as scalar")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable as scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Euclidean inner product.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Euclidean norm.
#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `a - b` componentwise.
#[inline]
pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// `a + k b` componentwise.
#[inline]
pub fn axpy<T: Real>(a: &[T], k: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + k * y).collect()
}

#[inline]
pub fn scale<T: Real>(k: T, a: &[T]) -> Vec<T> {
    a.iter().map(|&x| k * x).collect()
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume<T: Real>(d: usize) -> T {
    // ω_d = π^{d/2} / Γ(d/2 + 1), via the two-step recurrence ω_d = 2π/d · ω_{d-2}.
    let mut omega = if d.is_multiple_of(2) {
        T::one()
    } else {
        T::lit(2.0)
    };
    let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
    while k <= d {
        omega = omega * T::lit(2.0) * T::PI() / T::from_usize_lossy(k);
        k += 2;
    }
    omega
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        let pi = std::f64::consts::PI;
        assert!((unit_ball_volume::<f64>(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume::<f64>(2) - pi).abs() < 1e-15);
        assert!((unit_ball_volume::<f64>(3) - 4.0 * pi / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume::<f64>(4) - pi * pi / 2.0).abs() < 1e-14);
    }

    #[test]
    fn f32_literals() {
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Real>::from_usize_lossy(7), 7.0);
    }
}
