//! Deterministic volume estimates for polytopes `P = {x >= 0 : Ax = b}`.
//!
//! The estimate is built from the analytic center `z` of `P`:
//!
//! ```text
//! E(A, b) = e^n ζ₁⋯ζₙ · sqrt(det AAᵀ) / sqrt(det BBᵀ),   B = A · diag(z)
//! ```
//!
//! and comes with certified bounds `c_lo(m)·E <= vol P <= α₀^(-m/2)·E`.
//! Everything is computed in log space.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod center;
pub mod error;
pub mod estimator;
pub mod generators;
pub mod model;
pub mod numerics;
pub mod reference;

pub use error::{Error, Result};
pub use center::{analytic_center, CenterResult, SolverConfig};
pub use estimator::{estimate_full, VolumeEstimate};
pub use model::{load_instance, validate, PolytopeInstance, ValidationReport};
