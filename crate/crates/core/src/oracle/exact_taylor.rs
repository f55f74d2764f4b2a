//! Exact Taylor stepping through jet arithmetic.
//!
//! Coefficients of `u(t_n + τ) = Σ a_l τ^l` follow from `u' = f(u)`:
//! `a_{l+1} = [f(u)]_l / (l + 1)`, where `[·]_l` is the `l`-th coefficient of
//! the series of `f` along the partial expansion `a_0 + ... + a_l τ^l`.

use alloc::vec::Vec;

use crate::oracle::jet::{Jet, JetError};
use crate::stepper::{EvalCounter, StepError, Stepper};
use crate::system::VectorField;

/// `a_0, ..., a_R` for every state component: `result[i][l]`.
pub fn exact_taylor_coefficients<F: VectorField<f64> + ?Sized>(
    field: &F,
    v: &[f64],
    order: usize,
) -> Result<Vec<Vec<f64>>, JetError> {
    let m = v.len();
    let mut coeffs: Vec<Vec<f64>> = v.iter().map(|&x| alloc::vec![x]).collect();
    let mut out: Vec<Jet> = (0..m).map(|_| Jet::constant(0.0, 0)).collect();
    for l in 0..order {
        let inputs: Vec<Jet> = coeffs.iter().map(|c| Jet::new(c.clone())).collect();
        for o in out.iter_mut() {
            *o = Jet::constant(0.0, l);
        }
        field.eval_jet(&inputs, &mut out)?;
        for (c, o) in coeffs.iter_mut().zip(&out) {
            if o.order() != l {
                return Err(JetError::OrderMismatch(o.order(), l));
            }
            c.push(o.coeff(l) / (l + 1) as f64);
        }
    }
    Ok(coeffs)
}

/// One exact Taylor step of order `R`: `Σ_{l≤R} a_l h^l`.
pub fn exact_taylor_step<F: VectorField<f64> + ?Sized>(
    field: &F,
    v: &[f64],
    h: f64,
    order: usize,
) -> Result<Vec<f64>, JetError> {
    let coeffs = exact_taylor_coefficients(field, v, order)?;
    Ok(coeffs
        .iter()
        .map(|c| c.iter().rev().fold(0.0, |acc, &a| acc * h + a))
        .collect())
}

/// The order-`R` exact Taylor method as a [`Stepper`]. Labeled "exact (jet)"
/// in reports.
#[derive(Debug, Clone, Copy)]
pub struct ExactTaylor {
    order: usize,
}

impl ExactTaylor {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "order must be positive");
        Self { order }
    }
}

impl Stepper for ExactTaylor {
    fn name(&self) -> &'static str {
        "exact-taylor"
    }

    fn order(&self) -> usize {
        self.order
    }

    fn step(
        &self,
        field: &dyn VectorField<f64>,
        v: &[f64],
        h: f64,
        counter: &mut EvalCounter,
    ) -> Result<Vec<f64>, StepError> {
        counter.record(self.order as u64);
        exact_taylor_step(field, v, h, self.order).map_err(StepError::from)
    }

    fn supports(&self, field: &dyn VectorField<f64>) -> bool {
        field.has_jet()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    struct Linear(f64);

    impl VectorField<f64> for Linear {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, u: &[f64], out: &mut [f64]) {
            out[0] = self.0 * u[0];
        }
        fn has_jet(&self) -> bool {
            true
        }
        fn eval_jet(&self, u: &[Jet], out: &mut [Jet]) -> Result<(), JetError> {
            out[0] = u[0].scale(self.0);
            Ok(())
        }
    }

    struct Sine;

    impl VectorField<f64> for Sine {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, u: &[f64], out: &mut [f64]) {
            out[0] = libm::sin(u[0]);
        }
        fn has_jet(&self) -> bool {
            true
        }
        fn eval_jet(&self, u: &[Jet], out: &mut [Jet]) -> Result<(), JetError> {
            out[0] = u[0].sin();
            Ok(())
        }
    }

    #[test]
    fn linear_is_truncated_exponential() {
        let (lambda, h) = (-1.1, 0.35);
        let z = lambda * h;
        for order in 1..=8 {
            let got = exact_taylor_step(&Linear(lambda), &[2.0], h, order).unwrap()[0];
            let mut term = 1.0;
            let mut sum = 1.0;
            for l in 1..=order {
                term *= z / l as f64;
                sum += term;
            }
            assert!((got - 2.0 * sum).abs() <= 1e-14 * sum.abs(), "R={order}");
        }
    }

    #[test]
    fn sine_coefficients_at_half_pi() {
        let c = exact_taylor_coefficients(&Sine, &[FRAC_PI_2], 3).unwrap();
        let expected = [FRAC_PI_2, 1.0, 0.0, -1.0 / 6.0];
        for (a, b) in c[0].iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{:?}", c[0]);
        }
    }

    #[test]
    fn third_order_matches_hand_derivatives() {
        // v2 = f'(v) v1, v3 = f''(v) v1^2 + f'(v) v2 for f = sin
        let h = 0.2;
        for i in 0..100 {
            let v = -3.0 + 0.06 * i as f64;
            let v1 = libm::sin(v);
            let v2 = libm::cos(v) * v1;
            let v3 = -libm::sin(v) * v1 * v1 + libm::cos(v) * v2;
            let expected = v + h * v1 + h * h / 2.0 * v2 + h * h * h / 6.0 * v3;
            let got = exact_taylor_step(&Sine, &[v], h, 3).unwrap()[0];
            assert!((got - expected).abs() <= 1e-15 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn unsupported_field() {
        let f = crate::system::closure_field(1, |u, out| out[0] = u[0]);
        assert_eq!(
            exact_taylor_step(f.as_ref(), &[1.0], 0.1, 2),
            Err(JetError::Unsupported)
        );
        assert!(!ExactTaylor::new(2).supports(f.as_ref()));
    }
}
