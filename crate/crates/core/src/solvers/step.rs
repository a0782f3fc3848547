use nalgebra::{DVector, DVectorView, DVectorViewMut};

use crate::error::{Error, Result};

/// `γ_k = 2(1 − β_k)c / L`, the full-gradient step rule.
pub fn step_size_full(beta: f64, c: f64, lipschitz: f64) -> Result<f64> {
    check_c_and_l(c, lipschitz)?;
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::param("beta", format!("{beta} not in [0, 1)")));
    }
    Ok(2.0 * (1.0 - beta) * c / lipschitz)
}

/// `γ_k = 2(1 − β_k/√m)c / L` for uniformly random block selection over
/// `m` blocks.
pub fn step_size_stochastic(beta: f64, c: f64, lipschitz: f64, blocks: usize) -> Result<f64> {
    check_c_and_l(c, lipschitz)?;
    let root_m = (blocks as f64).sqrt();
    if blocks == 0 || !(0.0..root_m).contains(&beta) {
        return Err(Error::param(
            "beta",
            format!("{beta} not in [0, √m) with m = {blocks}"),
        ));
    }
    Ok(2.0 * (1.0 - beta / root_m) * c / lipschitz)
}

fn check_c_and_l(c: f64, lipschitz: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::param("c", format!("{c} not in (0, 1)")));
    }
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::param("lipschitz", format!("{lipschitz} must be positive")));
    }
    Ok(())
}

/// One Heavy-ball update `x_k − γ∇f(x_k) + β(x_k − x_{k−1})`.
pub fn heavy_ball_step(
    x: &DVector<f64>,
    x_prev: &DVector<f64>,
    grad: &DVector<f64>,
    gamma: f64,
    beta: f64,
) -> Result<DVector<f64>> {
    let n = x.len();
    for other in [x_prev.len(), grad.len()] {
        if other != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: other,
            });
        }
    }
    let mut out = DVector::zeros(n);
    momentum_update(
        x.as_view(),
        x_prev.as_view(),
        grad.as_view(),
        gamma,
        beta,
        out.as_view_mut(),
    );
    Ok(out)
}

/// Entrywise `(x − γg) + β(x − x_prev)`. Every scheme funnels its updates
/// through here, so degenerate cases reproduce each other exactly.
#[inline]
pub(crate) fn momentum_update(
    x: DVectorView<'_, f64>,
    x_prev: DVectorView<'_, f64>,
    grad: DVectorView<'_, f64>,
    gamma: f64,
    beta: f64,
    mut out: DVectorViewMut<'_, f64>,
) {
    for i in 0..x.len() {
        out[i] = (x[i] - gamma * grad[i]) + beta * (x[i] - x_prev[i]);
    }
}
