//! Approximate Taylor integrators for autonomous ODE systems `u' = f(u)`.
//!
//! The time derivatives `u^(k)` needed by a Taylor step are estimated by
//! centered finite differences of `f` evaluated on the truncated Taylor
//! polynomial built from the derivatives already computed. Only `f` itself is
//! needed, and the scheme reaches any prescribed order `R` with roughly `R^2`
//! evaluations of `f` per step.
//!
//! The crate is `no_std` (it needs `alloc`). Besides the stepper it carries the
//! pieces used to check it:
//!
//! * [`stencil`]: exact rational centered difference weights.
//! * [`stepper`]: derivative tableau, step update, fixed-step driver.
//! * [`oracle`]: jet-based exact Taylor stepping, Faà di Bruno sums,
//!   Butcher-tableau Runge-Kutta stepping and the linear amplification factor.
//! * [`problems`]: the benchmark catalog.
//! * [`costmodel`]: operation-count model of exact versus approximate Taylor.

#![no_std]

extern crate alloc;

pub mod costmodel;
pub mod oracle;
pub mod problems;
pub mod scalar;
pub mod stencil;
pub mod stepper;
pub mod system;

pub use oracle::jet::{Jet, JetError};
pub use scalar::Scalar;
pub use stencil::{build_stencil, FdStencil, StencilCache, StencilError};
pub use stepper::{
    integrate, predicted_eval_count, ApproxTaylor, DerivTableau, EvalCounter, IntegrateError,
    IntegratorConfig, StepError, Stepper, Trajectory,
};
pub use system::{autonomize, OdeSystem, VectorField};
