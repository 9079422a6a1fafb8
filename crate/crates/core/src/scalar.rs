//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point type the algorithms are generic over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; used for constants and index-derived angles.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// `exp(2πi·num/n)` with `num` reduced modulo `n` before the division, so the
/// angle stays in `[0, 2π)` regardless of how large the integer phase grows.
#[inline]
pub fn unit_phasor<T: Scalar>(num: u64, n: u64) -> Complex<T> {
    let r = num % n;
    let angle = T::TAU() * T::lit(r as f64) / T::lit(n as f64);
    let (s, c) = angle.sin_cos();
    Complex::new(c, s)
}

/// `exp(2πi·x)` for a real number of turns.
#[inline]
pub fn turns<T: Scalar>(x: f64) -> Complex<T> {
    let frac = x - x.floor();
    let angle = T::TAU() * T::lit(frac);
    let (s, c) = angle.sin_cos();
    Complex::new(c, s)
}

/// `(a·b) mod n` without overflow for any `u64` operands.
#[inline]
pub fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    if (a | b) >> 32 == 0 {
        (a * b) % n
    } else {
        ((a as u128 * b as u128) % n as u128) as u64
    }
}

/// Canonical representative of a signed integer in `[0, n)`.
#[inline]
pub fn wrap(x: i128, n: u64) -> u64 {
    x.rem_euclid(n as i128) as u64
}
