//! The approximate Taylor stepper.
//!
//! For order `R`, each step builds approximations `v^(0), ..., v^(R)` of the
//! time derivatives of the solution:
//!
//! ```text
//! v^(0)   = v
//! v^(1)   = f(v)
//! v^(k+1) = Δ^{k, ⌈(R-k)/2⌉}_h [ i ↦ f(T^k(i h)) ],   k = 1, ..., R-1
//! ```
//!
//! where `T^k(ρ) = Σ_{l≤k} v^(l) ρ^l / l!`, and advances with
//! `v_{n+1} = T^R(h)`. Since `T^k(0) = v`, the center node of every even-order
//! stencil reuses `f(v)`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::oracle::jet::JetError;
use crate::scalar::Scalar;
use crate::stencil::{global_cache, FdStencil, StencilCache, StencilError};
use crate::system::{OdeSystem, VectorField};

/// Counts right-hand-side evaluations, in total and per step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalCounter {
    total: u64,
    current: u64,
    last_step: u64,
    steps: usize,
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Marks the start of a new step.
    pub fn begin_step(&mut self) {
        if self.steps > 0 {
            self.last_step = self.current;
        }
        self.current = 0;
        self.steps += 1;
    }

    #[inline]
    pub fn record(&mut self, n: u64) {
        self.total += n;
        self.current += n;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Evaluations made by the most recent step.
    pub fn last_step(&self) -> u64 {
        if self.steps == 0 {
            0
        } else {
            self.current
        }
    }

    /// Evaluations made by the step before the most recent one.
    pub fn previous_step(&self) -> u64 {
        self.last_step
    }

    /// Number of steps started so far.
    pub fn steps(&self) -> usize {
        self.steps
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    /// A right-hand-side evaluation or the updated state was not finite.
    #[error("non-finite value during step {step}")]
    NonFinite { step: usize },
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("invalid integrator configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Stencil(#[from] StencilError),
    #[error("integration diverged at step {step} (t = {t}); last finite state {last_state:?}")]
    Divergence {
        step: usize,
        t: f64,
        last_state: Vec<f64>,
    },
    #[error("step {step} failed: {source}")]
    Jet { step: usize, source: JetError },
}

/// Evaluates `f(u)` into a fresh vector, counting it and checking finiteness.
#[inline]
pub(crate) fn eval_checked<T: Scalar, F: VectorField<T> + ?Sized>(
    field: &F,
    u: &[T],
    counter: &mut EvalCounter,
) -> Result<Vec<T>, StepError> {
    let mut out = vec![T::zero(); u.len()];
    field.eval(u, &mut out);
    counter.record(1);
    if out.iter().all(|x| x.is_finite()) {
        Ok(out)
    } else {
        Err(StepError::NonFinite {
            step: counter.steps().saturating_sub(1),
        })
    }
}

/// `Σ_{l=0}^{k} v^(l) ρ^l / l!` with `k = derivs.len() - 1`, by Horner.
pub fn taylor_poly_eval<T: Scalar>(derivs: &[Vec<T>], rho: f64) -> Vec<T> {
    let k = derivs.len() - 1;
    let mut acc = derivs[k].clone();
    for l in (0..k).rev() {
        let factor = rho / (l + 1) as f64;
        for (a, &d) in acc.iter_mut().zip(&derivs[l]) {
            *a = d + a.scale(factor);
        }
    }
    acc
}

/// Approximations `v^(0), ..., v^(R)` of the solution's time derivatives at
/// the start of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivTableau<T> {
    derivs: Vec<Vec<T>>,
}

impl<T: Scalar> DerivTableau<T> {
    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn derivs(&self) -> &[Vec<T>] {
        &self.derivs
    }

    pub fn get(&self, l: usize) -> &[T] {
        &self.derivs[l]
    }

    /// Degree-`k` approximate Taylor polynomial evaluated at `rho`.
    pub fn poly_eval(&self, k: usize, rho: f64) -> Vec<T> {
        taylor_poly_eval(&self.derivs[..=k], rho)
    }

    pub fn into_inner(self) -> Vec<Vec<T>> {
        self.derivs
    }
}

/// `Σ_{k=1}^{R-1}` of the (non-center) node counts plus the shared `f(v)`.
pub fn predicted_eval_count(order: usize) -> usize {
    assert!(order >= 1, "order must be positive");
    1 + (1..order)
        .map(|k| {
            let q = (order - k).div_ceil(2);
            k + 2 * q - 1 - usize::from(k % 2 == 0)
        })
        .sum::<usize>()
}

/// The order-`R` approximate Taylor method with its stencils resolved.
#[derive(Debug, Clone)]
pub struct ApproxTaylor {
    order: usize,
    stencils: Vec<Arc<FdStencil>>,
}

impl ApproxTaylor {
    /// Uses the process-wide stencil cache.
    pub fn new(order: usize) -> Result<Self, StencilError> {
        Self::with_cache(order, global_cache())
    }

    pub fn with_cache(order: usize, cache: &StencilCache) -> Result<Self, StencilError> {
        if order == 0 {
            return Err(StencilError::InvalidOrder { p: 0, q: 0 });
        }
        let stencils = (1..order)
            .map(|k| cache.get(k, (order - k).div_ceil(2)))
            .collect::<Result<_, _>>()?;
        Ok(Self { order, stencils })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Stencil used for `v^(k+1)`, `k = 1, ..., R-1`.
    pub fn stencil(&self, k: usize) -> &FdStencil {
        &self.stencils[k - 1]
    }

    pub fn compute_tableau<T, F>(
        &self,
        field: &F,
        v: &[T],
        h: f64,
        counter: &mut EvalCounter,
    ) -> Result<DerivTableau<T>, StepError>
    where
        T: Scalar,
        F: VectorField<T> + ?Sized,
    {
        let mut derivs: Vec<Vec<T>> = Vec::with_capacity(self.order + 1);
        derivs.push(v.to_vec());
        let f0 = eval_checked(field, v, counter)?;
        derivs.push(f0.clone());

        let mut h_pow = 1.0;
        for k in 1..self.order {
            h_pow *= h;
            let stencil = &self.stencils[k - 1];
            let mut values: Vec<Vec<T>> = Vec::with_capacity(stencil.width());
            for &offset in stencil.offsets() {
                if offset == 0 {
                    values.push(f0.clone());
                } else {
                    let point = taylor_poly_eval(&derivs, offset as f64 * h);
                    values.push(eval_checked(field, &point, counter)?);
                }
            }
            let inv = 1.0 / h_pow;
            let mut acc = stencil.combine(&values).expect("stencil nodes match offsets");
            for a in acc.iter_mut() {
                *a = a.scale(inv);
            }
            derivs.push(acc);
        }
        Ok(DerivTableau { derivs })
    }

    /// One step `v ↦ T^R(h)`.
    pub fn step<T, F>(
        &self,
        field: &F,
        v: &[T],
        h: f64,
        counter: &mut EvalCounter,
    ) -> Result<Vec<T>, StepError>
    where
        T: Scalar,
        F: VectorField<T> + ?Sized,
    {
        let tableau = self.compute_tableau(field, v, h, counter)?;
        Ok(taylor_poly_eval(tableau.derivs(), h))
    }
}

/// A one-step method on real systems.
pub trait Stepper: Send + Sync {
    fn name(&self) -> &'static str;

    /// Formal order of accuracy.
    fn order(&self) -> usize;

    fn step(
        &self,
        field: &dyn VectorField<f64>,
        v: &[f64],
        h: f64,
        counter: &mut EvalCounter,
    ) -> Result<Vec<f64>, StepError>;

    /// Requirements the method places on the field (e.g. jet support).
    fn supports(&self, _field: &dyn VectorField<f64>) -> bool {
        true
    }
}

impl Stepper for ApproxTaylor {
    fn name(&self) -> &'static str {
        "approx-taylor"
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
        ApproxTaylor::step(self, field, v, h, counter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegratorConfig {
    /// Method order `R`.
    pub order: usize,
    /// Number of uniform steps; `h = (t_end - t0) / n_steps`.
    pub n_steps: usize,
    pub eval_counting: bool,
}

impl IntegratorConfig {
    pub fn new(order: usize, n_steps: usize) -> Self {
        Self {
            order,
            n_steps,
            eval_counting: true,
        }
    }

    pub fn step_size(&self, sys: &OdeSystem) -> f64 {
        sys.span() / self.n_steps as f64
    }

    fn validate(&self, sys: &OdeSystem) -> Result<f64, IntegrateError> {
        if self.order == 0 {
            return Err(IntegrateError::Config("order must be at least 1"));
        }
        validate_steps(sys, self.n_steps)
    }
}

fn validate_steps(sys: &OdeSystem, n_steps: usize) -> Result<f64, IntegrateError> {
    if n_steps == 0 {
        return Err(IntegrateError::Config("n_steps must be at least 1"));
    }
    let h = sys.span() / n_steps as f64;
    if !(h > 0.0 && h.is_finite()) {
        return Err(IntegrateError::Config("step size must be positive and finite"));
    }
    Ok(h)
}

/// Grid points `(t_n, v_n)`, `n = 0, ..., n_steps`, and evaluation totals.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<(f64, Vec<f64>)>,
    pub evals: EvalCounter,
}

impl Trajectory {
    pub fn endpoint(&self) -> &(f64, Vec<f64>) {
        self.points.last().expect("trajectory holds the initial point")
    }
}

/// Runs `n_steps` uniform steps, calling `visit` at every grid point
/// (including the initial one). Returns the final state.
pub fn run<S: Stepper + ?Sized>(
    sys: &OdeSystem,
    stepper: &S,
    n_steps: usize,
    counter: &mut EvalCounter,
    mut visit: impl FnMut(f64, &[f64]),
) -> Result<Vec<f64>, IntegrateError> {
    let h = validate_steps(sys, n_steps)?;
    let field: &dyn VectorField<f64> = sys.rhs.as_ref();
    let mut v = sys.initial_state.clone();
    visit(sys.t0, &v);
    for n in 0..n_steps {
        let t = sys.t0 + n as f64 * h;
        counter.begin_step();
        let next = match stepper.step(field, &v, h, counter) {
            Ok(next) => next,
            Err(StepError::NonFinite { .. }) => {
                return Err(IntegrateError::Divergence {
                    step: n,
                    t,
                    last_state: v,
                })
            }
            Err(StepError::Jet(source)) => return Err(IntegrateError::Jet { step: n, source }),
        };
        if !next.iter().all(|x| x.is_finite()) {
            return Err(IntegrateError::Divergence {
                step: n,
                t,
                last_state: v,
            });
        }
        v = next;
        let t_next = if n + 1 == n_steps {
            sys.t_end
        } else {
            sys.t0 + (n + 1) as f64 * h
        };
        visit(t_next, &v);
    }
    Ok(v)
}

/// Integrates with an arbitrary stepper, keeping every grid point.
pub fn integrate_with<S: Stepper + ?Sized>(
    sys: &OdeSystem,
    stepper: &S,
    n_steps: usize,
) -> Result<Trajectory, IntegrateError> {
    let mut counter = EvalCounter::new();
    let mut points = Vec::with_capacity(n_steps + 1);
    run(sys, stepper, n_steps, &mut counter, |t, v| points.push((t, v.to_vec())))?;
    Ok(Trajectory {
        points,
        evals: counter,
    })
}

/// Integrates `sys` with the approximate Taylor method of `cfg.order`.
pub fn integrate(sys: &OdeSystem, cfg: &IntegratorConfig) -> Result<Trajectory, IntegrateError> {
    cfg.validate(sys)?;
    let stepper = ApproxTaylor::new(cfg.order)?;
    let mut traj = integrate_with(sys, &stepper, cfg.n_steps)?;
    if !cfg.eval_counting {
        traj.evals = EvalCounter::new();
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{closure_field, FnField};
    use num_complex::Complex64;

    fn linear(lambda: f64) -> FnField<impl Fn(&[f64], &mut [f64]) + Send + Sync> {
        FnField::new(1, move |u: &[f64], out: &mut [f64]| out[0] = lambda * u[0])
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn poly_eval_low_degrees() {
        let d = vec![vec![2.0], vec![3.0], vec![5.0]];
        assert_eq!(taylor_poly_eval(&d[..1], 7.0), vec![2.0]);
        assert_eq!(taylor_poly_eval(&d[..2], 0.5), vec![2.0 + 0.5 * 3.0]);
        let h = 0.25;
        assert_eq!(
            taylor_poly_eval(&d, -h),
            vec![2.0 - h * 3.0 + h * h / 2.0 * 5.0]
        );
    }

    #[test]
    fn predicted_counts() {
        assert_eq!(predicted_eval_count(1), 1);
        assert_eq!(predicted_eval_count(2), 3);
        assert_eq!(predicted_eval_count(3), 5);
        assert_eq!(predicted_eval_count(4), 11);
        for r in 1..=12 {
            assert!(predicted_eval_count(r) <= r * r + r);
        }
    }

    #[test]
    fn second_order_tableau_is_central_difference() {
        let f = closure_field(1, |u, out| out[0] = libm::sin(u[0]) + u[0] * u[0]);
        let g = |x: f64| libm::sin(x) + x * x;
        let (v, h) = (0.4, 0.1);
        let mut c = EvalCounter::new();
        c.begin_step();
        let tab = ApproxTaylor::new(2).unwrap().compute_tableau(f.as_ref(), &[v], h, &mut c).unwrap();
        let v1 = g(v);
        assert_eq!(tab.get(1), &[v1]);
        let v2 = (g(v + h * v1) - g(v - h * v1)) / (2.0 * h);
        assert!(rel(tab.get(2)[0], v2) < 1e-14);
        assert_eq!(c.last_step(), 3);
    }

    #[test]
    fn third_order_tableau_matches_explicit_formula() {
        let f = closure_field(1, |u, out| out[0] = libm::cos(u[0]) * u[0]);
        let g = |x: f64| libm::cos(x) * x;
        let (v, h) = (0.9, 0.05);
        let mut c = EvalCounter::new();
        c.begin_step();
        let tab = ApproxTaylor::new(3).unwrap().compute_tableau(f.as_ref(), &[v], h, &mut c).unwrap();
        let v1 = g(v);
        let v2 = (g(v + h * v1) - g(v - h * v1)) / (2.0 * h);
        let tp = v + h * v1 + h * h / 2.0 * v2;
        let tm = v - h * v1 + h * h / 2.0 * v2;
        let v3 = (g(tp) - 2.0 * g(v) + g(tm)) / (h * h);
        assert!(rel(tab.get(2)[0], v2) < 1e-13);
        assert!((tab.get(3)[0] - v3).abs() < 1e-9 * v3.abs().max(1.0));
        assert_eq!(c.last_step(), 5);
    }

    #[test]
    fn linear_tableau_is_powers_of_lambda() {
        let lambda = -1.3;
        let f = linear(lambda);
        for r in 1..=8 {
            let mut c = EvalCounter::new();
            c.begin_step();
            let tab = ApproxTaylor::new(r).unwrap().compute_tableau(&f, &[0.7], 0.2, &mut c).unwrap();
            for k in 0..=r {
                let expected = libm::pow(lambda, k as f64) * 0.7;
                assert!(
                    (tab.get(k)[0] - expected).abs() < 1e-9 * expected.abs().max(1.0),
                    "R={r} k={k}"
                );
            }
        }
    }

    #[test]
    fn zero_rhs_is_stationary() {
        let f = closure_field(3, |_u, out| out.fill(0.0));
        for r in 1..=6 {
            let v = [1.0, -2.0, 3.5];
            let next = ApproxTaylor::new(r).unwrap().step(f.as_ref(), &v, 0.3, &mut EvalCounter::new()).unwrap();
            assert_eq!(next, v.to_vec());
        }
    }

    #[test]
    fn linear_step_is_truncated_exponential() {
        let (lambda, h) = (0.8, 0.3);
        let z = lambda * h;
        let f = linear(lambda);
        let two = ApproxTaylor::new(2).unwrap().step(&f, &[1.0], h, &mut EvalCounter::new()).unwrap();
        assert!(rel(two[0], 1.0 + z + z * z / 2.0) < 1e-14);
        let four = ApproxTaylor::new(4).unwrap().step(&f, &[1.0], h, &mut EvalCounter::new()).unwrap();
        let expected = 1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
        assert!(rel(four[0], expected) < 1e-12);
    }

    #[test]
    fn complex_linear_step() {
        let lambda = Complex64::new(-0.5, 2.0);
        let f = FnField::new(1, move |u: &[Complex64], out: &mut [Complex64]| out[0] = lambda * u[0]);
        let v = [Complex64::new(1.0, 0.0)];
        let next = ApproxTaylor::new(2).unwrap().step(&f, &v, 0.1, &mut EvalCounter::new()).unwrap();
        let z = lambda * 0.1;
        let expected = Complex64::new(1.0, 0.0) + z + z * z * 0.5;
        assert!((next[0] - expected).norm() < 1e-15);
    }

    #[test]
    fn divergence_is_reported_with_last_state() {
        // u' = u^2 from u0 = 1 blows up at t = 1
        let sys = OdeSystem::new(
            "blowup",
            closure_field(1, |u, out| out[0] = u[0] * u[0]),
            vec![1.0],
            0.0,
            10.0,
        );
        let err = integrate(&sys, &IntegratorConfig::new(2, 20)).unwrap_err();
        match err {
            IntegrateError::Divergence { step, last_state, .. } => {
                assert!(step > 2 && step < 20);
                assert!(last_state[0].is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let sys = OdeSystem::new("zero", closure_field(1, |_u, out| out[0] = 0.0), vec![1.0], 0.0, 1.0);
        assert!(matches!(
            integrate(&sys, &IntegratorConfig::new(2, 0)),
            Err(IntegrateError::Config(_))
        ));
        assert!(matches!(
            integrate(&sys, &IntegratorConfig::new(0, 4)),
            Err(IntegrateError::Config(_))
        ));
        let traj = integrate(&sys, &IntegratorConfig::new(3, 1)).unwrap();
        assert_eq!(traj.points.len(), 2);
        assert_eq!(traj.points[0], (0.0, vec![1.0]));
        assert_eq!(traj.endpoint(), &(1.0, vec![1.0]));
    }

    #[test]
    fn counter_tracks_steps() {
        let sys = OdeSystem::new("lin", closure_field(2, |u, out| { out[0] = u[1]; out[1] = -u[0]; }), vec![1.0, 0.0], 0.0, 1.0);
        let traj = integrate(&sys, &IntegratorConfig::new(4, 10)).unwrap();
        assert_eq!(traj.evals.steps(), 10);
        assert_eq!(traj.evals.total(), 10 * predicted_eval_count(4) as u64);
        assert_eq!(traj.evals.last_step(), predicted_eval_count(4) as u64);
        assert_eq!(traj.points.len(), 11);
    }

    mod props {
        use super::*;
        use crate::system::closure_field;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn first_row_is_the_rhs(
                order in 1usize..=8,
                u in proptest::collection::vec(-3.0f64..3.0, 2),
                h in 1e-4f64..0.5,
            ) {
                let field = closure_field(2, |u, out| {
                    out[0] = libm::sin(u[1]) * u[0];
                    out[1] = 1.0 / (2.0 + u[0] * u[0]);
                });
                let mut expected = vec![0.0; 2];
                field.eval( &u, &mut expected);
                let stepper = ApproxTaylor::new(order).unwrap();
                let tableau = stepper.compute_tableau(field.as_ref(), &u, h, &mut EvalCounter::new()).unwrap();
                prop_assert_eq!(&tableau.derivs()[0], &u);
                prop_assert_eq!(&tableau.derivs()[1], &expected);
                prop_assert_eq!(tableau.order(), order);
            }
        }
    }
}
