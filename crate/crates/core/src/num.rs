//! Scalar abstraction for the deterministic numeric kernels.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar used by the generic kernels (`f32`, `f64`).
pub trait Real:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    fn from_f64_(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }
    fn from_usize_(x: usize) -> Self {
        Self::from_usize(x).expect("usize conversion")
    }
    fn from_i64_(x: i64) -> Self {
        Self::from_i64(x).expect("i64 conversion")
    }
    fn to_f64_(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl<T> Real for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Compensated accumulator. The window walks add millions of small terms to
/// slowly varying partial sums; plain summation would drift.
#[derive(Clone, Copy, Debug)]
pub struct Kahan<T: Real> {
    sum: T,
    carry: T,
}

impl<T: Real> Default for Kahan<T> {
    fn default() -> Self {
        Kahan { sum: T::zero(), carry: T::zero() }
    }
}

impl<T: Real> Kahan<T> {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum
    }
}
