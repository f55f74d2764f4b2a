//! Element type of state vectors.
//!
//! The stepper is generic so the same recursion can run on real states and on
//! complex states (the linear test equation `u' = λu` with complex `λ`).

use core::fmt::Debug;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    /// Multiplication by a real factor.
    fn scale(self, k: f64) -> Self;
    fn is_finite(self) -> bool;
    /// Modulus, used for norms and tolerances.
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        self * k
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn magnitude(self) -> f64 {
        libm::fabs(self)
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        Complex64::new(self.re * k, self.im * k)
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn magnitude(self) -> f64 {
        libm::hypot(self.re, self.im)
    }
}

/// Max-norm of a state vector.
pub fn max_norm<T: Scalar>(v: &[T]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.magnitude()))
}

/// Max-norm of the difference of two state vectors.
pub fn max_norm_diff<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |acc, (&x, &y)| acc.max((x - y).magnitude()))
}
