//! Operation-count model for exact versus approximate Taylor methods.
//!
//! Counts are exact big integers; `m^R` overflows 64 bits quickly.

use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("order must be at least {min}, got {got}")]
    Order { min: u64, got: u64 },
    #[error("dimension must be at least {min}, got {got}")]
    Dimension { min: u64, got: u64 },
    #[error("need {needed} per-derivative costs, got {got}")]
    MissingCosts { needed: usize, got: usize },
}

/// System dimension, method order and per-derivative costs `c_0, ..., c_{R-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostParams {
    pub m: u64,
    pub order: u64,
    pub costs: Vec<u64>,
}

impl CostParams {
    pub fn new(m: u64, order: u64, costs: Vec<u64>) -> Result<Self, CostError> {
        if m == 0 {
            return Err(CostError::Dimension { min: 1, got: m });
        }
        if order == 0 {
            return Err(CostError::Order { min: 1, got: order });
        }
        if costs.len() < order as usize {
            return Err(CostError::MissingCosts {
                needed: order as usize,
                got: costs.len(),
            });
        }
        Ok(Self { m, order, costs })
    }

    /// Costs for the rational system: `c_0 = 4m`, `c_1 = 3`, `c_r = 2r`.
    pub fn rational(m: u64, order: u64) -> Result<Self, CostError> {
        Self::new(m, order, rational_costs(m, order))
    }
}

/// `c_0 = 4m`, `c_1 = 3`, `c_r = 2r` for `r ≥ 2`, truncated to `R` entries.
pub fn rational_costs(m: u64, order: u64) -> Vec<u64> {
    (0..order)
        .map(|r| match r {
            0 => 4 * m,
            1 => 3,
            r => 2 * r,
        })
        .collect()
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

/// `Σ_{r=0}^{R-1} C(m+r-1, r) (c_r + 1)`.
fn derivative_term(p: &CostParams) -> BigUint {
    (0..p.order)
        .map(|r| {
            let n = big(p.m + r - 1);
            binomial(n, big(r)) * big(p.costs[r as usize] + 1)
        })
        .fold(BigUint::zero(), |a, b| a + b)
}

/// `C_T(R, m) = m Σ_{r=0}^{R-1} (r m^r + C(m+r-1, r)(c_r + 1))`.
pub fn cost_exact(p: &CostParams) -> BigUint {
    let products = (0..p.order)
        .map(|r| big(r) * big(p.m).pow(r as u32))
        .fold(BigUint::zero(), |a, b| a + b);
    big(p.m) * (products + derivative_term(p))
}

/// `C̃_T(R, m) = (R-1) m^R + m Σ_{r=0}^{R-1} C(m+r-1, r)(c_r + 1)`, for `m > 1`.
pub fn cost_exact_lower(p: &CostParams) -> Result<BigUint, CostError> {
    if p.m < 2 {
        return Err(CostError::Dimension { min: 2, got: p.m });
    }
    if p.order < 2 {
        return Err(CostError::Order { min: 2, got: p.order });
    }
    Ok(big(p.order - 1) * big(p.m).pow(p.order as u32) + big(p.m) * derivative_term(p))
}

/// `C_AT = m R² (c_0 + 4)`.
pub fn cost_approx(m: u64, order: u64, c0: u64) -> BigUint {
    big(m) * big(order) * big(order) * big(c0 + 4)
}

/// `Q(m, R) = C̃_T / C_AT` for the rational system, together with the two
/// closed-form lower bounds printed alongside it, kept for auditing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostRatio {
    pub m: u64,
    pub order: u64,
    pub lower_exact: BigUint,
    pub approx: BigUint,
    pub q: BigRational,
    /// `((R-1)m^{R-1} + 4m + 4(m+1) + Σ_{r=2}^{R-1} C(m+r-1,r)(2r+1)) / (4(m+1)R²)`
    pub first_bound: BigRational,
    /// `((R-1)m^{R-1} + 8m + Σ_{r=2}^{R-1} C(m+r-1,r)(2r+1)) / (4(m+1)R²)`
    pub second_bound: BigRational,
}

impl CostRatio {
    pub fn q_f64(&self) -> f64 {
        ratio_to_f64(&self.q)
    }

    /// `Q ≥ first_bound`.
    pub fn first_inequality_holds(&self) -> bool {
        self.q >= self.first_bound
    }

    /// `first_bound ≥ second_bound`.
    pub fn second_inequality_holds(&self) -> bool {
        self.first_bound >= self.second_bound
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn to_int(x: BigUint) -> BigInt {
    BigInt::from(x)
}

pub fn cost_ratio_rational(m: u64, order: u64) -> Result<CostRatio, CostError> {
    if order < 2 {
        return Err(CostError::Order { min: 2, got: order });
    }
    if m < 2 {
        return Err(CostError::Dimension { min: 2, got: m });
    }
    let params = CostParams::rational(m, order)?;
    let lower_exact = cost_exact_lower(&params)?;
    let approx = cost_approx(m, order, params.costs[0]);
    let q = BigRational::new(to_int(lower_exact.clone()), to_int(approx.clone()));

    let tail = (2..order)
        .map(|r| binomial(big(m + r - 1), big(r)) * big(2 * r + 1))
        .fold(BigUint::zero(), |a, b| a + b);
    let lead = big(order - 1) * big(m).pow(order as u32 - 1);
    let den = to_int(big(4) * big(m + 1) * big(order) * big(order));
    let first_num = &lead + big(4 * m) + big(4 * (m + 1)) + &tail;
    let second_num = lead + big(8 * m) + tail;
    Ok(CostRatio {
        m,
        order,
        lower_exact,
        approx,
        q,
        first_bound: BigRational::new(to_int(first_num), den.clone()),
        second_bound: BigRational::new(to_int(second_num), den),
    })
}

/// `Q(m, R) - first_bound`, which is the constant `-3 / (4(m+1)R²)`.
pub fn first_bound_gap(m: u64, order: u64) -> Result<BigRational, CostError> {
    let r = cost_ratio_rational(m, order)?;
    Ok(r.q - r.first_bound)
}
