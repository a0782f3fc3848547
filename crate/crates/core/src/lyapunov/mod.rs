//! Lyapunov quantities of the Heavy-ball schemes and checks of the
//! inequalities and rate bounds they satisfy.
//!
//! For a full-gradient run with `γ_k = 2(1 − β_k)c/L`:
//!
//! * `δ_k = β_k/(2γ_k) + ½((1 − β_k)/γ_k − L/2)`
//! * `ξ_k = f(x^k) + δ_k‖x^k − x^{k−1}‖² − min f`, non-increasing
//! * `ε_k = 4cδ_k²/((1 − c)L) + 4c/((1 − c)Lγ_k²)`
//!
//! and `ξ_k² ≤ ε_k(ξ_k − ξ_{k+1})(2‖x^k − x̄^k‖² + ‖x^k − x^{k−1}‖²)`, which
//! yields `f(x^k) − min f ≤ 4R·sup ε_k/k` and, under restricted strong
//! convexity with modulus `ν`, contraction by `ω = ℓ/(1 + ℓ)`. The cyclic
//! and stochastic schemes have per-block and in-expectation analogues.

mod checks;
mod formulas;
mod rates;
mod replicates;
mod report;
mod series;

pub use checks::{
    check_descent, check_error_bound, descent_rows, error_bound_rows, DescentRow, ErrorBoundRow,
};
pub use formulas::{delta_full, delta_stochastic, epsilon_cyclic, epsilon_full, epsilon_stochastic, xi_full};
pub use rates::{ell, fit_geometric_rate, rate_report, LinearRate, RateReport};
pub use replicates::{ContractionRow, GradientTrend, MeanDescentRow, MeanSeries, Replicates};
pub use report::{diagnostics_csv, parse_summary, summary_text, Verdict, DIAGNOSTICS_HEADER};
pub use series::{series, series_cyclic, series_full, LyapunovPoint, LyapunovSeries};

/// Descent checks allow `DESCENT_TOL·(1 + |f(x⁰)|)` of rounding.
pub const DESCENT_TOL: f64 = 1e-10;
/// `ξ` below `FLOOR_FACTOR·ε_mach·(1 + |f(x⁰)|)` is rounding noise.
pub const FLOOR_FACTOR: f64 = 10.0;
pub const SUBLINEAR_RTOL: f64 = 1e-8;
pub const MIN_POINTS: usize = 10;
/// Expectation checks allow this many standard errors.
pub const SE_MULTIPLIER: f64 = 3.0;
