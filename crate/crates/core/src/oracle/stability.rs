//! Amplification factor on the linear test equation `u' = λu`.

use num_complex::Complex64;

use crate::stepper::{ApproxTaylor, EvalCounter};
use crate::system::FnField;

/// `v_{n+1} / v_n` for one approximate Taylor step of order `R` with
/// `hλ = z`, computed by running the stepper itself in complex arithmetic.
pub fn stability_factor(order: usize, z: Complex64) -> Complex64 {
    assert!((1..=8).contains(&order), "supported orders are 1 through 8");
    let stepper = ApproxTaylor::new(order).expect("stencils for R <= 8 fit the cache");
    let field = FnField::new(1, move |u: &[Complex64], out: &mut [Complex64]| out[0] = z * u[0]);
    let one = [Complex64::new(1.0, 0.0)];
    stepper
        .step(&field, &one, 1.0, &mut EvalCounter::new())
        .map(|v| v[0])
        .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
}

/// `Σ_{l=0}^{R} z^l / l!`.
pub fn truncated_exp(order: usize, z: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for l in 1..=order {
        term = term * z / l as f64;
        sum += term;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let z = Complex64::new(-1.0, 0.0);
        assert!((stability_factor(2, z) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((stability_factor(4, z) - Complex64::new(0.375, 0.0)).norm() < 1e-15);
        for r in 1..=8 {
            assert_eq!(stability_factor(r, Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn matches_truncated_exponential_off_axis() {
        let z = Complex64::new(-0.4, 1.7);
        for r in 1..=8 {
            let a = stability_factor(r, z);
            let b = truncated_exp(r, z);
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0), "R={r}: {a} vs {b}");
        }
    }
}
