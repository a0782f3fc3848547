//! Heavy-ball schemes: full gradient, cyclic block-coordinate and uniformly
//! random block-coordinate.
//!
//! All runs start from `x⁰ = x^{−1}` (zero unless overridden), so the first
//! inertial term vanishes. Full and stochastic runs record one
//! [`TraceRecord`] per iteration, cyclic runs one per sweep over the blocks.

mod run;
mod schedule;
mod step;
mod trace;

pub use run::{run, run_cyclic, run_heavy_ball, run_stochastic, unit_step_c, SolverConfig, UpdateRule};
pub use schedule::MomentumSchedule;
pub use step::{heavy_ball_step, step_size_full, step_size_stochastic};
pub use trace::{IterateTrace, TraceMeta, TraceRecord, TRACE_HEADER};

/// Factor of `max(|f(x⁰)|, 1)` above which a run is declared divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e6;
