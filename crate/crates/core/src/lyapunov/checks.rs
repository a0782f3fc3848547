use super::series::{check_consecutive, trace_scale, LyapunovSeries};
use crate::error::{Error, Result};
use crate::solvers::{IterateTrace, UpdateRule};

/// Sufficient-descent inequality at `k`: `lhs ≥ rhs` where `lhs` is the drop
/// of the inertial potential from `k` to `k+1` and `rhs` the guaranteed
/// multiple of `‖x^{k+1} − x^k‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentRow {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`
    pub slack: f64,
}

/// Error-bound inequality at `k`: `ξ_k² ≤ ε_k(ξ_k − ξ_{k+1})·D_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBoundRow {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`
    pub slack: f64,
    /// `ε_k·D_k`, the multiplier of `ξ_k − ξ_{k+1}`.
    pub weight: f64,
}

/// Inertial potential per record and the descent factor of the run's rule:
///
/// * full: `f(x^k) + β_k/(2γ_k)‖Δ_k‖²`, factor `(1 − c)L/(2c)`;
/// * cyclic: `f(x^k) + Σ_i β_{k,i}/(2γ_{k,i})‖Δ_{k,i}‖²`, factor `(1 − c)·min_i L_i/(2c)`;
/// * stochastic: `f(x^k) + β_k/(2√m γ_k)‖Δ_k‖²`, factor `(1 − c)L/(2c)`.
///
/// Potentials are measured from `min f` (residual column) so no large
/// common offset is subtracted.
pub(crate) fn potentials(trace: &IterateTrace) -> Result<(Vec<f64>, f64)> {
    check_consecutive(trace)?;
    let c = trace.c;
    let root_m = (trace.blocks().max(1) as f64).sqrt();
    let pots = trace
        .records
        .iter()
        .map(|r| {
            let res = r.residual.unwrap_or_default();
            match trace.rule {
                UpdateRule::Full => res + r.beta / (2.0 * r.gamma) * r.step_norm_sq,
                UpdateRule::Stochastic => res + r.beta / (2.0 * root_m * r.gamma) * r.step_norm_sq,
                UpdateRule::Cyclic => {
                    res + r
                        .block_betas
                        .iter()
                        .zip(&r.block_gammas)
                        .zip(&r.block_step_sq)
                        .map(|((b, g), s)| b / (2.0 * g) * s)
                        .sum::<f64>()
                }
            }
        })
        .collect();
    let l = match trace.rule {
        UpdateRule::Cyclic => trace
            .lipschitz_blocks
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
        _ => trace.lipschitz,
    };
    Ok((pots, (1.0 - c) * l / (2.0 * c)))
}

/// Every descent row of a run.
pub fn descent_rows(trace: &IterateTrace) -> Result<Vec<DescentRow>> {
    let (pots, factor) = potentials(trace)?;
    Ok(trace
        .records
        .windows(2)
        .zip(pots.windows(2))
        .map(|(r, p)| {
            let lhs = p[0] - p[1];
            let rhs = factor * r[1].step_norm_sq;
            DescentRow {
                k: r[0].k,
                lhs,
                rhs,
                slack: lhs - rhs,
            }
        })
        .collect())
}

/// Rows where the descent inequality fails by more than
/// `1e-10·(1 + |f(x⁰)|)`. For stochastic traces the inequality only holds
/// in expectation; use [`super::Replicates::check_descent`].
pub fn check_descent(trace: &IterateTrace) -> Result<Vec<DescentRow>> {
    let tol = super::DESCENT_TOL * trace_scale(trace);
    Ok(descent_rows(trace)?
        .into_iter()
        .filter(|r| r.slack < -tol)
        .collect())
}

/// Every error-bound row of a series. `D_k = 2‖x^k − x̄^k‖² + ‖Δ_k‖²` for the
/// full and cyclic schemes and `‖x^k − x̄^k‖² + ‖Δ_k‖²` for the stochastic one.
pub fn error_bound_rows(series: &LyapunovSeries) -> Result<Vec<ErrorBoundRow>> {
    let dist_factor = match series.rule {
        UpdateRule::Stochastic => 1.0,
        _ => 2.0,
    };
    series
        .points
        .windows(2)
        .map(|p| {
            let dist = p[0]
                .dist_sq
                .ok_or(Error::Unsupported("error bound without an arg-min projection"))?;
            let weight = p[0].epsilon * (dist_factor * dist + p[0].step_norm_sq);
            let lhs = p[0].xi * p[0].xi;
            let rhs = weight * (p[0].xi - p[1].xi);
            Ok(ErrorBoundRow {
                k: p[0].k,
                lhs,
                rhs,
                slack: rhs - lhs,
                weight,
            })
        })
        .collect()
}

/// Rows where `ξ_k² > ε_k·D_k·(ξ_k − ξ_{k+1} + tol)` with
/// `tol = 1e-10·(1 + |f(x⁰)|)`, the rounding allowance of the difference.
pub fn check_error_bound(series: &LyapunovSeries) -> Result<Vec<ErrorBoundRow>> {
    let tol = super::DESCENT_TOL * series.scale;
    Ok(error_bound_rows(series)?
        .into_iter()
        .filter(|row| row.lhs > row.rhs + row.weight * tol)
        .collect())
}
