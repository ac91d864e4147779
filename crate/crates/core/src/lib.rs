//! Variable Bregman proximal gradient (VBPG) for `min f(x) + g(x)` with `f`
//! smooth and `g` possibly nonconvex, plus sample-based diagnostics for the
//! level-set error-bound conditions that drive its linear convergence.
//!
//! Numerical routines are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation. The corpus is `f64`
//! only.

// `!(x > 0)` is the idiom for "not positive, or NaN".
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bregman;
pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod problem;
mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// A point of `ℝⁿ`.
pub type Point = ndarray::Array1<f64>;
pub type Problem = problem::CompositeProblem<f64>;
pub type Kernel = bregman::BregmanKernel<f64>;
pub type Step = bregman::BregmanStep<f64>;
pub type Constants = problem::SolverConstants<f64>;
pub type Trace = solver::SolverTrace<f64>;
pub type Config = solver::VbpgConfig<f64>;
pub type Region = diagnostics::Region<f64>;
