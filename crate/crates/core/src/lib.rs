//! Finite-volume simulation of a regularized double-haptotaxis model of
//! stem cell migration and (de)differentiation in tissue regeneration.
//!
//! Four species live on a uniform 1D/2D box with zero-flux boundaries:
//! stem cells `c1`, chondrocytes `c2`, hyaluron `h` and ECM `tau`. Besides the
//! time stepper the crate computes, along every trajectory, the a priori
//! quantities that control the system (mass ledger, sup bounds, entropy and
//! dissipation) and provides weak-form residual and vanishing-regularization
//! studies.

// `!(x > 0.0)` is how NaN is rejected alongside the range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli_io;
pub mod discretization;
pub mod error;
pub mod model;
pub mod monitors;
pub mod stepper;

pub use error::{Error, Result};
