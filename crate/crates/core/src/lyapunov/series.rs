use super::formulas::{
    delta_full, delta_stochastic, epsilon_cyclic, epsilon_full, epsilon_stochastic, xi_from_residual,
};
use crate::error::{Error, Result};
use crate::solvers::{IterateTrace, UpdateRule};

/// One point of a Lyapunov series.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovPoint {
    pub k: usize,
    pub residual: f64,
    pub step_norm_sq: f64,
    pub dist_sq: Option<f64>,
    /// `δ_k`, `δ̄_k`, or the per-block `δ_{k,i}` of the cyclic scheme.
    pub delta: Vec<f64>,
    pub xi: f64,
    pub epsilon: f64,
}

impl LyapunovPoint {
    pub fn min_delta(&self) -> f64 {
        self.delta.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `ξ_k`, `δ_k` and `ε_k` along a run (or along the replicate mean of
/// stochastic runs).
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSeries {
    pub rule: UpdateRule,
    pub c: f64,
    pub lipschitz: f64,
    pub lipschitz_blocks: Vec<f64>,
    /// `1 + |f(x⁰)|`; absolute tolerances are multiples of it.
    pub scale: f64,
    pub points: Vec<LyapunovPoint>,
}

impl LyapunovSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xi(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.xi).collect()
    }

    pub fn sup_epsilon(&self) -> f64 {
        self.points.iter().map(|p| p.epsilon).fold(0.0, f64::max)
    }

    /// Lowest `ξ` still treated as signal rather than rounding noise.
    pub fn floor(&self) -> f64 {
        super::FLOOR_FACTOR * f64::EPSILON * self.scale
    }
}

/// Records must be `k = 0, 1, 2, …` with residuals present.
pub(crate) fn check_consecutive(trace: &IterateTrace) -> Result<()> {
    for (i, r) in trace.records.iter().enumerate() {
        if r.k != i {
            return Err(Error::NonConsecutive { k: r.k });
        }
        if r.residual.is_none() {
            return Err(Error::Unsupported("Lyapunov series without a known minimum"));
        }
    }
    if trace.records.is_empty() {
        return Err(Error::InsufficientTrace { len: 0, required: 1 });
    }
    Ok(())
}

pub(crate) fn trace_scale(trace: &IterateTrace) -> f64 {
    1.0 + trace.records.first().map_or(0.0, |r| r.value.abs())
}

/// Lyapunov series of a single run, following the run's update rule. For a
/// stochastic trace this is the pathwise `ξ̄_k`; the quantities the theory
/// controls are replicate means (see [`super::Replicates`]).
pub fn series(trace: &IterateTrace) -> Result<LyapunovSeries> {
    match trace.rule {
        UpdateRule::Full => series_full(trace),
        UpdateRule::Cyclic => series_cyclic(trace),
        UpdateRule::Stochastic => series_stochastic_path(trace),
    }
}

fn empty_series(trace: &IterateTrace) -> LyapunovSeries {
    LyapunovSeries {
        rule: trace.rule,
        c: trace.c,
        lipschitz: trace.lipschitz,
        lipschitz_blocks: trace.lipschitz_blocks.clone(),
        scale: trace_scale(trace),
        points: Vec::with_capacity(trace.records.len()),
    }
}

pub fn series_full(trace: &IterateTrace) -> Result<LyapunovSeries> {
    check_consecutive(trace)?;
    let mut out = empty_series(trace);
    for r in &trace.records {
        let delta = delta_full(r.beta, r.gamma, trace.lipschitz)?;
        let residual = r.residual.unwrap_or_default();
        out.points.push(LyapunovPoint {
            k: r.k,
            residual,
            step_norm_sq: r.step_norm_sq,
            dist_sq: r.dist_sq,
            xi: xi_from_residual(r.k, residual, delta * r.step_norm_sq)?,
            epsilon: epsilon_full(delta, r.gamma, trace.c, trace.lipschitz),
            delta: vec![delta],
        });
    }
    Ok(out)
}

/// `ξ̂_k = f(x^k) + Σ_i δ_{k,i}‖x_i^k − x_i^{k−1}‖² − min f`. `ε̂_k` pairs
/// `δ_{k+1,i}` with `γ_{k,i}`; the last record reuses its own `δ_{k,i}`.
pub fn series_cyclic(trace: &IterateTrace) -> Result<LyapunovSeries> {
    check_consecutive(trace)?;
    let m = trace.blocks();
    let mut deltas = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        if r.block_betas.len() != m || r.block_gammas.len() != m || r.block_step_sq.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: r.block_betas.len(),
            });
        }
        let d = r
            .block_betas
            .iter()
            .zip(&r.block_gammas)
            .zip(&trace.lipschitz_blocks)
            .map(|((&b, &g), &l)| delta_full(b, g, l))
            .collect::<Result<Vec<f64>>>()?;
        deltas.push(d);
    }
    let mut out = empty_series(trace);
    for (idx, r) in trace.records.iter().enumerate() {
        let next = deltas.get(idx + 1).unwrap_or(&deltas[idx]);
        let inertial: f64 = deltas[idx].iter().zip(&r.block_step_sq).map(|(d, s)| d * s).sum();
        let residual = r.residual.unwrap_or_default();
        out.points.push(LyapunovPoint {
            k: r.k,
            residual,
            step_norm_sq: r.step_norm_sq,
            dist_sq: r.dist_sq,
            xi: xi_from_residual(r.k, residual, inertial)?,
            epsilon: epsilon_cyclic(next, &r.block_gammas, trace.c, &trace.lipschitz_blocks)?,
            delta: deltas[idx].clone(),
        });
    }
    Ok(out)
}

pub(crate) fn series_stochastic_path(trace: &IterateTrace) -> Result<LyapunovSeries> {
    check_consecutive(trace)?;
    let m = trace.blocks();
    let mut out = empty_series(trace);
    for r in &trace.records {
        let delta = delta_stochastic(r.beta, r.gamma, trace.lipschitz, m)?;
        let residual = r.residual.unwrap_or_default();
        out.points.push(LyapunovPoint {
            k: r.k,
            residual,
            step_norm_sq: r.step_norm_sq,
            dist_sq: r.dist_sq,
            xi: xi_from_residual(r.k, residual, delta * r.step_norm_sq)?,
            epsilon: epsilon_stochastic(delta, r.gamma, trace.c, trace.lipschitz, m),
            delta: vec![delta],
        });
    }
    Ok(out)
}
