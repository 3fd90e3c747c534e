//! Observer-based dynamic LQR.
//!
//! A linear plant `x⁺ = Ax + Bu`, `y = Cx` is driven by a Luenberger-observer
//! controller `ξ⁺ = (A - BK - LC)ξ + Ly`, `u = -Kξ`, and the pair of gains
//! `(K, L)` is scored by the infinite-horizon quadratic cost averaged over the
//! initial condition. This crate evaluates that cost and its exact gradients,
//! synthesizes the standard LQR/observer pair, computes genuine stationary
//! points of the joint problem, certifies local gradient dominance, and
//! simulates the closed loop as an independent oracle.

// Negated comparisons are used to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builtin;
pub mod closedloop;
pub mod design;
pub mod dominance;
pub mod error;
pub mod gradient;
pub mod mateq;
pub mod problem;
pub mod sampling;
pub mod serde_matrix;
pub mod simulate;
pub mod stationary;

pub use error::{Error, Result};
pub use mateq::Matrix;
