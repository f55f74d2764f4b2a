//! Centered finite-difference operators `Δ^{p,q}_h`.
//!
//! `Δ^{p,q}_h` approximates the `p`-th derivative of a function sampled on a
//! uniform grid of spacing `h` with error `O(h^{2q})`. Stencils are the
//! minimal symmetric ones:
//!
//! * even `p`: offsets `-s..=s` with `s = q + p/2 - 1`;
//! * odd `p`: offsets `-s..=s` without `0`, with `s = q + (p-1)/2`.
//!
//! Both have `p + 2q - 1` nodes. Weights solve the moment conditions
//! `Σ_i w_i i^j = p! δ_{j,p}` exactly over the rationals.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use spin::Mutex;
use thiserror::Error;

use crate::scalar::Scalar;

/// Widest stencil the process-wide cache will build.
pub const DEFAULT_MAX_WIDTH: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StencilError {
    #[error("stencil orders must be positive, got p={p}, q={q}")]
    InvalidOrder { p: usize, q: usize },
    #[error("stencil width {width} for (p={p}, q={q}) exceeds the configured maximum {max}")]
    WidthExceeded {
        p: usize,
        q: usize,
        width: usize,
        max: usize,
    },
    #[error("grid has no value at stencil offset {0}")]
    MissingOffset(i32),
    #[error("grid values have inconsistent dimensions ({expected} vs {found})")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
}

/// A centered stencil with exact rational weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FdStencil {
    p: usize,
    q: usize,
    offsets: Vec<i32>,
    weights: Vec<BigRational>,
    float_weights: Vec<f64>,
}

impl FdStencil {
    /// Number of nodes of the minimal symmetric stencil for `(p, q)`.
    pub fn width_for(p: usize, q: usize) -> usize {
        p + 2 * q - 1
    }

    /// Offsets of the minimal symmetric stencil for `(p, q)`, ascending.
    pub fn offsets_for(p: usize, q: usize) -> Vec<i32> {
        if p % 2 == 0 {
            let s = (q + p / 2 - 1) as i32;
            (-s..=s).collect()
        } else {
            let s = (q + (p - 1) / 2) as i32;
            (-s..=s).filter(|&i| i != 0).collect()
        }
    }

    fn construct(p: usize, q: usize) -> Self {
        let offsets = Self::offsets_for(p, q);
        let weights = solve_moments(&offsets, p);
        let float_weights = weights.iter().map(rational_to_f64).collect();
        Self {
            p,
            q,
            offsets,
            weights,
            float_weights,
        }
    }

    /// Derivative order `p`.
    pub fn derivative_order(&self) -> usize {
        self.p
    }

    /// Half accuracy order `q` (accuracy is `2q`).
    pub fn half_accuracy(&self) -> usize {
        self.q
    }

    pub fn offsets(&self) -> &[i32] {
        &self.offsets
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn float_weights(&self) -> &[f64] {
        &self.float_weights
    }

    pub fn width(&self) -> usize {
        self.offsets.len()
    }

    /// `(offset, weight)` pairs with the weights already in floating point.
    pub fn nodes(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.offsets
            .iter()
            .copied()
            .zip(self.float_weights.iter().copied())
    }

    /// `Σ_i w_i g_i` with `values[j]` holding `g` at `offsets()[j]`.
    ///
    /// The sum is taken over symmetric pairs, `w_s (g_s - g_-s)` for odd `p`
    /// and `w_s ((g_s - g_0) + (g_-s - g_0))` for even `p`, so constant data
    /// cancels exactly.
    pub fn combine<T: Scalar, V: AsRef<[T]>>(&self, values: &[V]) -> Result<Vec<T>, StencilError> {
        let n = self.offsets.len();
        if values.len() != n {
            return Err(StencilError::DimensionMismatch {
                expected: n,
                found: values.len(),
            });
        }
        let dim = values[0].as_ref().len();
        if let Some(bad) = values.iter().find(|v| v.as_ref().len() != dim) {
            return Err(StencilError::DimensionMismatch {
                expected: dim,
                found: bad.as_ref().len(),
            });
        }
        let mut acc = alloc::vec![T::zero(); dim];
        let centre = (self.p % 2 == 0).then(|| values[n / 2].as_ref());
        for j in (n + 1) / 2..n {
            let w = self.float_weights[j];
            let (plus, minus) = (values[j].as_ref(), values[n - 1 - j].as_ref());
            for c in 0..dim {
                let pair = match centre {
                    Some(g0) => (plus[c] - g0[c]) + (minus[c] - g0[c]),
                    None => plus[c] - minus[c],
                };
                acc[c] = acc[c] + pair.scale(w);
            }
        }
        Ok(acc)
    }

    /// Computes `(Σ_i w_i g_i) / h^p` where `g_i = grid[i]`.
    ///
    /// Offsets present in `grid` but not in the stencil are ignored.
    pub fn apply<T: Scalar>(
        &self,
        grid: &BTreeMap<i32, Vec<T>>,
        h: f64,
    ) -> Result<Vec<T>, StencilError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(StencilError::InvalidStep(h));
        }
        let values = self
            .offsets
            .iter()
            .map(|o| grid.get(o).map(Vec::as_slice).ok_or(StencilError::MissingOffset(*o)))
            .collect::<Result<Vec<&[T]>, _>>()?;
        let inv = 1.0 / libm::pow(h, self.p as f64);
        Ok(self.combine(&values)?.into_iter().map(|a| a.scale(inv)).collect())
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    // numerator and denominator stay far below f64::MAX for supported widths
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) => n / d,
        _ => f64::NAN,
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Solves `Σ_i w_i x_i^j = p! δ_{j,p}`, `j = 0..n-1`, by exact Gaussian
/// elimination. Distinct nodes make the system nonsingular.
fn solve_moments(nodes: &[i32], p: usize) -> Vec<BigRational> {
    let n = nodes.len();
    let mut rows: Vec<Vec<BigRational>> = (0..n)
        .map(|j| {
            let mut row: Vec<BigRational> = nodes
                .iter()
                .map(|&x| BigRational::from_integer(BigInt::from(x).pow(j as u32)))
                .collect();
            let rhs = if j == p {
                BigRational::from_integer(factorial(p))
            } else {
                BigRational::zero()
            };
            row.push(rhs);
            row
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !rows[r][col].is_zero())
            .expect("Vandermonde matrix on distinct nodes is nonsingular");
        rows.swap(col, pivot);
        let inv = rows[col][col].recip();
        for c in col..=n {
            rows[col][c] = &rows[col][c] * &inv;
        }
        for r in 0..n {
            if r == col || rows[r][col].is_zero() {
                continue;
            }
            let factor = rows[r][col].clone();
            for c in col..=n {
                let delta = &factor * &rows[col][c];
                rows[r][c] -= delta;
            }
        }
    }
    rows.into_iter().map(|mut row| row.pop().unwrap()).collect()
}

/// Stencils keyed by `(p, q)`, built at most once per key.
///
/// Construction happens under the lock, so concurrent requests for the same
/// key never build twice; the stored stencils are immutable.
pub struct StencilCache {
    max_width: usize,
    entries: Mutex<BTreeMap<(usize, usize), Arc<FdStencil>>>,
}

impl StencilCache {
    pub const fn new(max_width: usize) -> Self {
        Self {
            max_width,
            entries: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn max_width(&self) -> usize {
        self.max_width
    }

    pub fn get(&self, p: usize, q: usize) -> Result<Arc<FdStencil>, StencilError> {
        if p == 0 || q == 0 {
            return Err(StencilError::InvalidOrder { p, q });
        }
        let width = FdStencil::width_for(p, q);
        if width > self.max_width {
            return Err(StencilError::WidthExceeded {
                p,
                q,
                width,
                max: self.max_width,
            });
        }
        let mut entries = self.entries.lock();
        Ok(entries
            .entry((p, q))
            .or_insert_with(|| Arc::new(FdStencil::construct(p, q)))
            .clone())
    }

    /// Snapshot of every stencil built so far, ordered by `(p, q)`.
    pub fn cached(&self) -> Vec<Arc<FdStencil>> {
        self.entries.lock().values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

static GLOBAL_CACHE: StencilCache = StencilCache::new(DEFAULT_MAX_WIDTH);

/// The process-wide stencil cache.
pub fn global_cache() -> &'static StencilCache {
    &GLOBAL_CACHE
}

/// `Δ^{p,q}` from the process-wide cache.
pub fn build_stencil(p: usize, q: usize) -> Result<Arc<FdStencil>, StencilError> {
    GLOBAL_CACHE.get(p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Fornberg's recursion for weights at `x0 = 0`, in exact arithmetic.
    /// Independent of the moment-system solve used by the implementation.
    fn fornberg(nodes: &[i32], p: usize) -> Vec<BigRational> {
        let n = nodes.len();
        let x: Vec<BigRational> = nodes
            .iter()
            .map(|&v| BigRational::from_integer(BigInt::from(v)))
            .collect();
        let mut c = vec![vec![vec![BigRational::zero(); n]; n]; p + 1];
        c[0][0][0] = BigRational::one();
        let mut c1 = BigRational::one();
        for i in 1..n {
            let mut c2 = BigRational::one();
            for j in 0..i {
                let c3 = &x[i] - &x[j];
                c2 = &c2 * &c3;
                for m in 0..=p.min(i) {
                    let prev_m = if m > 0 {
                        c[m - 1][i - 1][j].clone() * BigRational::from_integer(BigInt::from(m))
                    } else {
                        BigRational::zero()
                    };
                    c[m][i][j] = (&x[i] * &c[m][i - 1][j] - prev_m) / &c3;
                }
            }
            for m in 0..=p.min(i) {
                let prev_m = if m > 0 {
                    c[m - 1][i - 1][i - 1].clone() * BigRational::from_integer(BigInt::from(m))
                } else {
                    BigRational::zero()
                };
                c[m][i][i] = &c1 / &c2 * (prev_m - &x[i - 1] * &c[m][i - 1][i - 1]);
            }
            c1 = c2;
        }
        (0..n).map(|j| c[p][n - 1][j].clone()).collect()
    }

    #[test]
    fn first_derivative_second_order() {
        let s = build_stencil(1, 1).unwrap();
        assert_eq!(s.offsets(), &[-1, 1]);
        assert_eq!(s.weights(), &[rat(-1, 2), rat(1, 2)]);
    }

    #[test]
    fn second_derivative_second_order() {
        let s = build_stencil(2, 1).unwrap();
        assert_eq!(s.offsets(), &[-1, 0, 1]);
        assert_eq!(s.weights(), &[rat(1, 1), rat(-2, 1), rat(1, 1)]);
    }

    #[test]
    fn first_derivative_fourth_order_matches_fornberg() {
        let s = build_stencil(1, 2).unwrap();
        assert_eq!(s.offsets(), &[-2, -1, 1, 2]);
        let expected = [rat(1, 12), rat(-2, 3), rat(2, 3), rat(-1, 12)];
        assert_eq!(s.weights(), &expected);
        assert_eq!(fornberg(s.offsets(), 1), expected);
    }

    #[test]
    fn all_small_stencils_match_fornberg() {
        for p in 1..=14 {
            for q in 1..=7 {
                if FdStencil::width_for(p, q) > 15 {
                    continue;
                }
                let s = build_stencil(p, q).unwrap();
                assert_eq!(s.weights(), fornberg(s.offsets(), p).as_slice(), "p={p} q={q}");
            }
        }
    }

    #[test]
    fn symmetry_and_minimality() {
        for p in 1..=10 {
            for q in 1..=5 {
                let s = build_stencil(p, q).unwrap();
                assert_eq!(s.width(), p + 2 * q - 1);
                let sign = if p % 2 == 0 { 1 } else { -1 };
                for (i, &o) in s.offsets().iter().enumerate() {
                    let j = s.offsets().iter().position(|&x| x == -o).unwrap();
                    assert_eq!(
                        s.weights()[j],
                        &s.weights()[i] * BigRational::from_integer(BigInt::from(sign))
                    );
                    assert!(!s.weights()[i].is_zero(), "zero weight in p={p} q={q}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_orders_and_wide_stencils() {
        assert_eq!(build_stencil(0, 1), Err(StencilError::InvalidOrder { p: 0, q: 1 }));
        assert_eq!(build_stencil(1, 0), Err(StencilError::InvalidOrder { p: 1, q: 0 }));
        let cache = StencilCache::new(5);
        assert!(cache.get(2, 2).is_ok());
        assert_eq!(
            cache.get(2, 3),
            Err(StencilError::WidthExceeded {
                p: 2,
                q: 3,
                width: 7,
                max: 5
            })
        );
    }

    #[test]
    fn cache_returns_the_same_instance() {
        let cache = StencilCache::new(DEFAULT_MAX_WIDTH);
        let a = cache.get(3, 2).unwrap();
        let b = cache.get(3, 2).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn apply_on_simple_data() {
        let s = build_stencil(1, 1).unwrap();
        let grid: BTreeMap<i32, Vec<f64>> = [(-1, vec![2.0]), (1, vec![4.0])].into();
        assert_eq!(s.apply(&grid, 1.0).unwrap(), vec![1.0]);

        let s = build_stencil(2, 1).unwrap();
        let grid: BTreeMap<i32, Vec<f64>> =
            [(-1, vec![1.0]), (0, vec![1.0]), (1, vec![1.0])].into();
        assert_eq!(s.apply(&grid, 0.5).unwrap(), vec![0.0]);

        let s = build_stencil(1, 2).unwrap();
        let h = 0.1;
        let grid: BTreeMap<i32, Vec<f64>> = s
            .offsets()
            .iter()
            .map(|&i| {
                let x = i as f64 * h;
                (i, vec![x * x * x])
            })
            .collect();
        assert!(s.apply(&grid, h).unwrap()[0].abs() < 1e-14);
    }

    #[test]
    fn apply_reports_missing_offsets() {
        let s = build_stencil(2, 1).unwrap();
        let grid: BTreeMap<i32, Vec<f64>> = [(-1, vec![1.0]), (1, vec![1.0])].into();
        assert_eq!(s.apply(&grid, 1.0), Err(StencilError::MissingOffset(0)));
        assert_eq!(
            s.apply(&BTreeMap::<i32, Vec<f64>>::new(), 0.0),
            Err(StencilError::InvalidStep(0.0))
        );
    }

    #[test]
    fn exact_on_monomials() {
        for p in 1..=14usize {
            for q in 1..=7usize {
                let width = FdStencil::width_for(p, q);
                if width > 15 {
                    continue;
                }
                let s = build_stencil(p, q).unwrap();
                for &h in &[1.0, 0.5] {
                    for d in 0..=width {
                        let grid: BTreeMap<i32, Vec<f64>> = s
                            .offsets()
                            .iter()
                            .map(|&i| (i, vec![libm::pow(i as f64 * h, d as f64)]))
                            .collect();
                        let got = s.apply(&grid, h).unwrap()[0];
                        let expected = if d == p {
                            (1..=p).map(|k| k as f64).product::<f64>()
                        } else {
                            0.0
                        };
                        let scale = expected.abs().max(1.0);
                        // the sum reads values up to (s h)^d; its rounding is
                        // relative to that, not to the (possibly zero) result
                        let work: f64 = s
                            .nodes()
                            .map(|(i, w)| (w * libm::pow(i as f64 * h, d as f64)).abs())
                            .sum::<f64>()
                            / libm::pow(h, p as f64);
                        assert!(
                            (got - expected).abs() <= 1e-12 * scale + 1e-14 * work,
                            "p={p} q={q} d={d} h={h}: {got} vs {expected}"
                        );
                    }
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        /// `(p, q)` pairs whose stencil fits in 15 nodes.
        fn small_orders() -> impl Strategy<Value = (usize, usize)> {
            (1usize..=14, 1usize..=7).prop_filter("width <= 15", |&(p, q)| FdStencil::width_for(p, q) <= 15)
        }

        proptest! {
            #[test]
            fn constants_cancel_exactly((p, q) in small_orders(), c in -1e6f64..1e6) {
                let s = build_stencil(p, q).unwrap();
                let values = vec![vec![c]; s.width()];
                prop_assert_eq!(s.combine(&values).unwrap(), vec![0.0]);
            }

            #[test]
            fn mirrored_data_flips_by_parity(
                (p, q) in small_orders(),
                data in proptest::collection::vec(-10.0f64..10.0, 15),
            ) {
                let s = build_stencil(p, q).unwrap();
                let values: Vec<Vec<f64>> = data[..s.width()].iter().map(|&x| vec![x]).collect();
                let mirrored: Vec<Vec<f64>> = values.iter().rev().cloned().collect();
                let a = s.combine(&values).unwrap()[0];
                let b = s.combine(&mirrored).unwrap()[0];
                prop_assert_eq!(b, if p % 2 == 0 { a } else { -a });
            }
        }
    }
}
