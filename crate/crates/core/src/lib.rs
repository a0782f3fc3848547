//! Heavy-ball methods with Lyapunov-based convergence diagnostics.
//!
//! The crate covers the full-gradient Heavy-ball iteration
//! `x⁺ = x − γ∇f(x) + β(x − x⁻)`, its cyclic and uniformly-random
//! block-coordinate variants, and a decentralized variant over a
//! communication graph. Every run emits an [`IterateTrace`]; the
//! [`lyapunov`] module turns traces into Lyapunov series and certifies the
//! sufficient-descent inequalities and the sublinear/linear rate bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decentralized;
pub mod error;
pub mod linalg;
pub mod lyapunov;
pub mod objective;
pub mod problems;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use objective::{ArgminSet, BlockPartition, Capabilities, Problem, Quadratic, SmoothObjective};
pub use problems::{Dataset, Distribution, RegressionSpec};
pub use solvers::{IterateTrace, MomentumSchedule, SolverConfig, TraceRecord, UpdateRule};

pub use nalgebra::{DMatrix, DVector};
