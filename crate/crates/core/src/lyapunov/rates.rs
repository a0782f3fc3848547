use super::series::LyapunovSeries;
use crate::error::{Error, Result};
use crate::solvers::UpdateRule;

/// Empirical constants of a run next to the sublinear and linear bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `C_emp = max_{k≥1} k·residual_k`
    pub sublinear_constant: f64,
    /// `4·R_emp·sup_k ε_k`
    pub sublinear_bound: f64,
    /// `R_emp = max_k ‖x^k − x̄^k‖²`
    pub r_emp: f64,
    pub sup_epsilon: f64,
    pub sublinear_holds: bool,
    pub linear: Option<LinearRate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRate {
    pub nu: f64,
    pub ell: f64,
    /// `ω = ℓ/(1 + ℓ)`
    pub omega: f64,
    /// `max ξ_{k+1}/ξ_k` over `ξ_k` above the floating floor.
    pub max_ratio: Option<f64>,
    /// Least-squares geometric rate of `ξ_k` above the floor.
    pub fitted_rate: Option<f64>,
    /// Points above the floor.
    pub points: usize,
    pub holds: bool,
}

/// `ℓ` for the series' rule:
///
/// * full: `sup_k ε_k(1/δ_k + 2/ν)`;
/// * cyclic: `sup_k {ε̂_k + 2/ν + 1/min_i δ_{k,i}}`;
/// * stochastic: `sup_k {ε̄_k + 1/ν + 1/δ̄_k}`.
pub fn ell(series: &LyapunovSeries, nu: f64) -> f64 {
    series
        .points
        .iter()
        .map(|p| match series.rule {
            UpdateRule::Full => p.epsilon * (1.0 / p.delta[0] + 2.0 / nu),
            UpdateRule::Cyclic => p.epsilon + 2.0 / nu + 1.0 / p.min_delta(),
            UpdateRule::Stochastic => p.epsilon + 1.0 / nu + 1.0 / p.delta[0],
        })
        .fold(0.0, f64::max)
}

/// `exp` of the least-squares slope of `ln v_k` against `k`.
pub fn fit_geometric_rate(ks: &[usize], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(&k, v)| (k as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mean_k = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_v = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_k).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_k) * (p.1 - mean_v)).sum();
    (sxx > 0.0).then(|| (sxy / sxx).exp())
}

/// Sublinear verdict: `residual_k ≤ 4·R_emp·sup ε_k/k` for every `k ≥ 1`
/// (relative tolerance `1e-8`). With `nu`, the linear verdict:
/// `ξ_{k+1} ≤ ω·ξ_k` for every `ξ_k` above `10·ε_mach·(1 + |f(x⁰)|)`, and the
/// fitted rate is at most `ω`.
pub fn rate_report(series: &LyapunovSeries, nu: Option<f64>) -> Result<RateReport> {
    if series.len() < super::MIN_POINTS {
        return Err(Error::InsufficientTrace {
            len: series.len(),
            required: super::MIN_POINTS,
        });
    }
    let mut r_emp: f64 = 0.0;
    for p in &series.points {
        let d = p
            .dist_sq
            .ok_or(Error::Unsupported("rate bounds without an arg-min projection"))?;
        r_emp = r_emp.max(d);
    }
    let sup_epsilon = series.sup_epsilon();
    let sublinear_constant = series
        .points
        .iter()
        .filter(|p| p.k >= 1)
        .map(|p| p.k as f64 * p.residual)
        .fold(0.0, f64::max);
    let sublinear_bound = 4.0 * r_emp * sup_epsilon;
    let sublinear_holds = sublinear_constant <= sublinear_bound * (1.0 + super::SUBLINEAR_RTOL);

    let linear = match nu {
        None => None,
        Some(nu) if !(nu > 0.0) => return Err(Error::param("nu", format!("{nu} must be positive"))),
        Some(nu) => Some(linear_rate(series, nu)),
    };
    Ok(RateReport {
        sublinear_constant,
        sublinear_bound,
        r_emp,
        sup_epsilon,
        sublinear_holds,
        linear,
    })
}

fn linear_rate(series: &LyapunovSeries, nu: f64) -> LinearRate {
    let ell = ell(series, nu);
    let omega = ell / (1.0 + ell);
    let floor = series.floor();
    let max_ratio = series
        .points
        .windows(2)
        .filter(|p| p[0].xi > floor)
        .map(|p| p[1].xi / p[0].xi)
        .reduce(f64::max);
    let (ks, xs): (Vec<usize>, Vec<f64>) = series
        .points
        .iter()
        .filter(|p| p.xi > floor)
        .map(|p| (p.k, p.xi))
        .unzip();
    let fitted_rate = fit_geometric_rate(&ks, &xs);
    let holds = matches!((max_ratio, fitted_rate), (Some(r), Some(f)) if r <= omega && f <= omega);
    LinearRate {
        nu,
        ell,
        omega,
        max_ratio,
        fitted_rate,
        points: ks.len(),
        holds,
    }
}
