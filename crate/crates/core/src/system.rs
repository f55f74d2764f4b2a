//! ODE right-hand sides and systems.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::oracle::jet::{Jet, JetError};
use crate::scalar::Scalar;

/// The right-hand side `f` of an autonomous system `u' = f(u)`.
pub trait VectorField<T: Scalar = f64>: Send + Sync {
    /// State dimension `m`.
    fn dim(&self) -> usize;

    /// Writes `f(u)` into `out`. Both slices have length `dim()`.
    fn eval(&self, u: &[T], out: &mut [T]);

    /// Whether [`eval_jet`](Self::eval_jet) is implemented.
    fn has_jet(&self) -> bool {
        false
    }

    /// Evaluates `f` on truncated power series, for exact Taylor stepping.
    fn eval_jet(&self, _u: &[Jet], _out: &mut [Jet]) -> Result<(), JetError> {
        Err(JetError::Unsupported)
    }
}

/// A field backed by a closure.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T, F> VectorField<T> for FnField<F>
where
    T: Scalar,
    F: Fn(&[T], &mut [T]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, u: &[T], out: &mut [T]) {
        (self.f)(u, out)
    }
}

/// The right-hand side `g(t, u)` of a nonautonomous system.
pub trait TimeDependentField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]);

    fn has_jet(&self) -> bool {
        false
    }

    fn eval_jet(&self, _t: &Jet, _u: &[Jet], _out: &mut [Jet]) -> Result<(), JetError> {
        Err(JetError::Unsupported)
    }
}

/// `u' = g(t, u)` rewritten as `(u, τ)' = (g(τ, u), 1)`.
///
/// The clock `τ` is the last state component.
pub struct Autonomized<G> {
    inner: G,
}

impl<G: TimeDependentField> Autonomized<G> {
    pub fn new(inner: G) -> Self {
        Self { inner }
    }

    pub fn inner(&self) -> &G {
        &self.inner
    }
}

impl<G: TimeDependentField> VectorField<f64> for Autonomized<G> {
    fn dim(&self) -> usize {
        self.inner.dim() + 1
    }

    fn eval(&self, u: &[f64], out: &mut [f64]) {
        let m = self.inner.dim();
        self.inner.eval(u[m], &u[..m], &mut out[..m]);
        out[m] = 1.0;
    }

    fn has_jet(&self) -> bool {
        self.inner.has_jet()
    }

    fn eval_jet(&self, u: &[Jet], out: &mut [Jet]) -> Result<(), JetError> {
        let m = self.inner.dim();
        let (head, tail) = out.split_at_mut(m);
        self.inner.eval_jet(&u[m], &u[..m], head)?;
        tail[0] = Jet::constant(1.0, u[m].order());
        Ok(())
    }
}

struct ClosureTimeField<F> {
    dim: usize,
    f: F,
}

impl<F> TimeDependentField for ClosureTimeField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]) {
        (self.f)(t, u, out)
    }
}

/// Exact solution `t ↦ u(t)` of a system, in the system's own coordinates.
pub type ExactSolution = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// An initial value problem `u' = f(u)`, `u(t0) = u0`, on `[t0, t_end]`.
#[derive(Clone)]
pub struct OdeSystem {
    pub label: String,
    pub rhs: Arc<dyn VectorField<f64>>,
    pub initial_state: Vec<f64>,
    pub t0: f64,
    pub t_end: f64,
    pub exact: Option<ExactSolution>,
}

impl core::fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("OdeSystem")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("initial_state", &self.initial_state)
            .field("t0", &self.t0)
            .field("t_end", &self.t_end)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl OdeSystem {
    pub fn new(
        label: impl Into<String>,
        rhs: Arc<dyn VectorField<f64>>,
        initial_state: Vec<f64>,
        t0: f64,
        t_end: f64,
    ) -> Self {
        assert!(!initial_state.is_empty(), "state dimension must be positive");
        assert_eq!(
            rhs.dim(),
            initial_state.len(),
            "rhs dimension must match the initial state"
        );
        Self {
            label: label.into(),
            rhs,
            initial_state,
            t0,
            t_end,
            exact: None,
        }
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn dim(&self) -> usize {
        self.initial_state.len()
    }

    pub fn span(&self) -> f64 {
        self.t_end - self.t0
    }

    pub fn has_jet(&self) -> bool {
        self.rhs.has_jet()
    }

    /// Exact state at `t`, when a closed form is known.
    pub fn exact_at(&self, t: f64) -> Option<Vec<f64>> {
        self.exact.as_ref().map(|e| e(t))
    }
}

/// Adjoins the clock `τ' = 1`, `τ(t0) = t0` to a nonautonomous system.
///
/// The returned system has dimension `m + 1`; the clock is the last
/// component.
pub fn autonomize<F>(label: impl Into<String>, dim: usize, rhs_t: F, u0: &[f64], t0: f64, t_end: f64) -> OdeSystem
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
{
    autonomize_field(label, ClosureTimeField { dim, f: rhs_t }, u0, t0, t_end)
}

/// [`autonomize`] for a field that may also support jets.
pub fn autonomize_field<G>(label: impl Into<String>, field: G, u0: &[f64], t0: f64, t_end: f64) -> OdeSystem
where
    G: TimeDependentField + 'static,
{
    let mut state = u0.to_vec();
    state.push(t0);
    OdeSystem::new(label, Arc::new(Autonomized::new(field)), state, t0, t_end)
}

/// Lifts an exact solution `t ↦ u(t)` of the nonautonomous problem to the
/// autonomized coordinates `(u(t), t)`.
pub fn autonomized_exact<F>(exact: F) -> ExactSolution
where
    F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
{
    Arc::new(move |t| {
        let mut u = exact(t);
        u.push(t);
        u
    })
}

/// Boxed closure field, handy for tests and ad-hoc systems.
pub fn closure_field<F>(dim: usize, f: F) -> Arc<dyn VectorField<f64>>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
{
    Arc::new(FnField::new(dim, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn autonomize_constant_rate() {
        let sys = autonomize("unit", 1, |_t, _u, out| out[0] = 1.0, &[0.0], 0.0, 1.0);
        assert_eq!(sys.dim(), 2);
        let mut out = vec![0.0; 2];
        sys.rhs.eval(&[3.0, 7.0], &mut out);
        assert_eq!(out, vec![1.0, 1.0]);
        assert_eq!(sys.initial_state, vec![0.0, 0.0]);
    }

    #[test]
    fn autonomize_reads_clock_component() {
        let sys = autonomize("t", 1, |t, u, out| out[0] = t * u[0], &[2.0], 1.5, 3.0);
        assert_eq!(sys.initial_state, vec![2.0, 1.5]);
        let mut out = vec![0.0; 2];
        sys.rhs.eval(&[2.0, 4.0], &mut out);
        assert_eq!(out, vec![8.0, 1.0]);
        assert!(!sys.has_jet());
    }
}
