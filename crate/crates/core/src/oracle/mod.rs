//! Reference integrators and cross-checks for the approximate Taylor stepper.

pub mod butcher;
pub mod exact_taylor;
pub mod faa_di_bruno;
pub mod jet;
pub mod stability;

pub use butcher::{rk_step, ButcherTableau, RungeKutta};
pub use exact_taylor::{exact_taylor_coefficients, exact_taylor_step, ExactTaylor};
pub use faa_di_bruno::{enumerate_partitions, faa_di_bruno_scalar, PartitionMultiIndex};
pub use jet::{Jet, JetError};
pub use stability::{stability_factor, truncated_exp};
