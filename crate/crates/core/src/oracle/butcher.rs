//! Explicit Runge-Kutta methods given by Butcher tableaus.

use alloc::vec;
use alloc::vec::Vec;

use crate::scalar::Scalar;
use crate::stepper::{eval_checked, EvalCounter, StepError, Stepper};
use crate::system::VectorField;

/// Coefficients `(A, b, c)` of an explicit Runge-Kutta method.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    name: &'static str,
    order: usize,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ButcherTableau {
    /// Panics if `A` is not strictly lower-triangular or the shapes disagree.
    pub fn new(name: &'static str, order: usize, a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Self {
        let s = b.len();
        assert!(s > 0 && a.len() == s && c.len() == s, "tableau shape mismatch");
        for (i, row) in a.iter().enumerate() {
            assert_eq!(row.len(), s, "tableau row {i} has wrong length");
            assert!(row[i..].iter().all(|&x| x == 0.0), "tableau is not explicit");
        }
        Self { name, order, a, b, c }
    }

    /// The method equal to the second-order approximate Taylor scheme.
    pub fn approx_taylor_3_stage() -> Self {
        Self::new(
            "approx-taylor-rk3s",
            2,
            vec![
                vec![0.0, 0.0, 0.0],
                vec![-1.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0],
            ],
            vec![1.0, -0.25, 0.25],
            vec![0.0, -1.0, 1.0],
        )
    }

    /// The method equal to the third-order approximate Taylor scheme.
    pub fn approx_taylor_5_stage() -> Self {
        Self::new(
            "approx-taylor-rk5s",
            3,
            vec![
                vec![0.0, 0.0, 0.0, 0.0, 0.0],
                vec![-1.0, 0.0, 0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0, 0.0, 0.0],
                vec![-1.0, -0.25, 0.25, 0.0, 0.0],
                vec![1.0, -0.25, 0.25, 0.0, 0.0],
            ],
            vec![2.0 / 3.0, -0.25, 0.25, 1.0 / 6.0, 1.0 / 6.0],
            vec![0.0, -1.0, 1.0, -1.0, 1.0],
        )
    }

    pub fn classical_rk4() -> Self {
        Self::new(
            "rk4",
            4,
            vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            vec![0.0, 0.5, 0.5, 1.0],
        )
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }
}

/// `v + h Σ b_i k_i` with `k_i = f(v + h Σ_{j<i} A_ij k_j)`.
pub fn rk_step<T, F>(
    tab: &ButcherTableau,
    field: &F,
    v: &[T],
    h: f64,
    counter: &mut EvalCounter,
) -> Result<Vec<T>, StepError>
where
    T: Scalar,
    F: VectorField<T> + ?Sized,
{
    let s = tab.stages();
    let mut ks: Vec<Vec<T>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut point = v.to_vec();
        for (j, k) in ks.iter().enumerate() {
            let aij = tab.a[i][j];
            if aij != 0.0 {
                for (p, &kj) in point.iter_mut().zip(k) {
                    *p = *p + kj.scale(h * aij);
                }
            }
        }
        ks.push(eval_checked(field, &point, counter)?);
    }
    let mut incr = vec![T::zero(); v.len()];
    for (k, &bi) in ks.iter().zip(&tab.b) {
        for (acc, &x) in incr.iter_mut().zip(k) {
            *acc = *acc + x.scale(bi);
        }
    }
    Ok(v.iter().zip(incr).map(|(&x, d)| x + d.scale(h)).collect())
}

/// A [`Stepper`] for a fixed tableau.
#[derive(Debug, Clone)]
pub struct RungeKutta {
    tableau: ButcherTableau,
}

impl RungeKutta {
    pub fn new(tableau: ButcherTableau) -> Self {
        Self { tableau }
    }

    pub fn rk4() -> Self {
        Self::new(ButcherTableau::classical_rk4())
    }

    pub fn tableau(&self) -> &ButcherTableau {
        &self.tableau
    }
}

impl Stepper for RungeKutta {
    fn name(&self) -> &'static str {
        self.tableau.name
    }

    fn order(&self) -> usize {
        self.tableau.order
    }

    fn step(
        &self,
        field: &dyn VectorField<f64>,
        v: &[f64],
        h: f64,
        counter: &mut EvalCounter,
    ) -> Result<Vec<f64>, StepError> {
        rk_step(&self.tableau, field, v, h, counter)
    }
}
