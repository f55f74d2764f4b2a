//! Truncated power series ("jets").
//!
//! A [`Jet`] of order `K` stores `a_0, ..., a_K` representing
//! `Σ a_l (t - t_n)^l`. The elementary functions use the usual `O(K^2)`
//! recurrences obtained by differentiating `g(a(t))` and matching
//! coefficients. No operation reads past index `K`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("jet orders differ ({0} vs {1})")]
    OrderMismatch(usize, usize),
    #[error("division by a series with zero constant term")]
    ZeroDenominator,
    #[error("logarithm of a series with non-positive constant term")]
    NonPositiveLog,
    #[error("square root of a series with non-positive constant term")]
    NonPositiveSqrt,
    #[error("real power of a series with non-positive constant term")]
    NonPositivePower,
    #[error("right-hand side has no jet evaluator")]
    Unsupported,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    /// Series from its coefficients; the order is `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet has at least a constant term");
        Self { coeffs }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        Self { coeffs }
    }

    /// `c + t`, the independent variable shifted to `c`.
    pub fn variable(c: f64, order: usize) -> Self {
        let mut j = Self::constant(c, order);
        if order > 0 {
            j.coeffs[1] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, l: usize) -> f64 {
        self.coeffs[l]
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `l`-th derivative at the expansion point, `l! a_l`.
    pub fn derivative(&self, l: usize) -> f64 {
        let fact: f64 = (1..=l).map(|k| k as f64).product();
        self.coeffs[l] * fact
    }

    /// Evaluates the polynomial at offset `dt` (Horner).
    pub fn eval_at(&self, dt: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * dt + c)
    }

    fn check(&self, other: &Self) -> Result<(), JetError> {
        if self.order() == other.order() {
            Ok(())
        } else {
            Err(JetError::OrderMismatch(self.order(), other.order()))
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    pub fn add_const(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, JetError> {
        self.check(other)?;
        Ok(Self::new(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, JetError> {
        self.check(other)?;
        Ok(Self::new(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, JetError> {
        self.check(other)?;
        let a = &self.coeffs;
        let b = &other.coeffs;
        let coeffs = (0..a.len())
            .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
            .collect();
        Ok(Self::new(coeffs))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self, JetError> {
        self.check(other)?;
        let b = &other.coeffs;
        if b[0] == 0.0 {
            return Err(JetError::ZeroDenominator);
        }
        let a = &self.coeffs;
        let mut c = vec![0.0; a.len()];
        for k in 0..a.len() {
            let conv: f64 = (0..k).map(|j| c[j] * b[k - j]).sum();
            c[k] = (a[k] - conv) / b[0];
        }
        Ok(Self::new(c))
    }

    pub fn recip(&self) -> Result<Self, JetError> {
        Self::constant(1.0, self.order()).try_div(self)
    }

    pub fn exp(&self) -> Self {
        let a = &self.coeffs;
        let mut e = vec![0.0; a.len()];
        e[0] = libm::exp(a[0]);
        for k in 1..a.len() {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Self::new(e)
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        let a = &self.coeffs;
        if !(a[0] > 0.0) {
            return Err(JetError::NonPositiveLog);
        }
        let mut l = vec![0.0; a.len()];
        l[0] = libm::log(a[0]);
        for k in 1..a.len() {
            let s: f64 = (1..k).map(|j| j as f64 * l[j] * a[k - j]).sum();
            l[k] = (a[k] - s / k as f64) / a[0];
        }
        Ok(Self::new(l))
    }

    /// `(sin a, cos a)`, propagated as a coupled pair.
    pub fn sin_cos(&self) -> (Self, Self) {
        let a = &self.coeffs;
        let n = a.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = libm::sin(a[0]);
        c[0] = libm::cos(a[0]);
        for k in 1..n {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                let ja = j as f64 * a[j];
                ss += ja * c[k - j];
                cc += ja * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = -cc / k as f64;
        }
        (Self::new(s), Self::new(c))
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Self {
        self.sin_cos().1
    }

    pub fn sqrt(&self) -> Result<Self, JetError> {
        let a = &self.coeffs;
        if !(a[0] > 0.0) {
            return Err(JetError::NonPositiveSqrt);
        }
        let mut r = vec![0.0; a.len()];
        r[0] = libm::sqrt(a[0]);
        for k in 1..a.len() {
            let s: f64 = (1..k).map(|j| r[j] * r[k - j]).sum();
            r[k] = (a[k] - s) / (2.0 * r[0]);
        }
        Ok(Self::new(r))
    }

    /// `a^alpha` for real `alpha`; needs a positive constant term.
    pub fn powf(&self, alpha: f64) -> Result<Self, JetError> {
        let a = &self.coeffs;
        if !(a[0] > 0.0) {
            return Err(JetError::NonPositivePower);
        }
        let mut p = vec![0.0; a.len()];
        p[0] = libm::pow(a[0], alpha);
        for k in 1..a.len() {
            let s: f64 = (1..=k)
                .map(|j| (alpha * j as f64 - (k - j) as f64) * a[j] * p[k - j])
                .sum();
            p[k] = s / (k as f64 * a[0]);
        }
        Ok(Self::new(p))
    }

    /// `a^n` for non-negative integer `n` by repeated squaring.
    pub fn powi(&self, n: u32) -> Self {
        let mut result = Self::constant(1.0, self.order());
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.try_add(rhs).expect("jet orders must match")
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.try_sub(rhs).expect("jet orders must match")
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.try_mul(rhs).expect("jet orders must match")
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
