use crate::error::{Error, Result};

/// `δ_k = β_k/(2γ_k) + ½((1 − β_k)/γ_k − L/2)`.
///
/// Under `γ_k = 2(1 − β_k)c/L` this is `β_kL/(4(1 − β_k)c) + L(1 − c)/(4c)`.
/// With a block's `L_i` and `(β_{k,i}, γ_{k,i})` it gives the per-block
/// weight of the cyclic scheme.
pub fn delta_full(beta: f64, gamma: f64, lipschitz: f64) -> Result<f64> {
    positive_delta(
        beta / (2.0 * gamma) + 0.5 * ((1.0 - beta) / gamma - lipschitz / 2.0),
        gamma,
    )
}

/// `δ̄_k = β_k/(2√m γ_k) + ½((1 − β_k/√m)/γ_k − L/2)`.
pub fn delta_stochastic(beta: f64, gamma: f64, lipschitz: f64, blocks: usize) -> Result<f64> {
    if blocks == 0 {
        return Err(Error::param("blocks", "must be positive"));
    }
    let scaled = beta / (blocks as f64).sqrt();
    positive_delta(
        scaled / (2.0 * gamma) + 0.5 * ((1.0 - scaled) / gamma - lipschitz / 2.0),
        gamma,
    )
}

fn positive_delta(delta: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::param("gamma", format!("{gamma} must be positive")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(
            "gamma",
            format!("δ = {delta} is not positive; the step size is too large"),
        ));
    }
    Ok(delta)
}

/// `ξ_k = f(x^k) + δ_k‖x^k − x^{k−1}‖² − min f`.
pub fn xi_full(value: f64, min_value: f64, delta: f64, step_norm_sq: f64) -> Result<f64> {
    xi_from_residual(0, value - min_value, delta * step_norm_sq)
}

/// `residual + inertial`, rejecting values below `−1e-9`.
pub(crate) fn xi_from_residual(k: usize, residual: f64, inertial: f64) -> Result<f64> {
    let xi = residual + inertial;
    if xi < -1e-9 || xi.is_nan() {
        return Err(Error::InconsistentMinimum { k, xi });
    }
    Ok(xi)
}

/// `ε_k = 4cδ_k²/((1 − c)L) + 4c/((1 − c)Lγ_k²)`.
pub fn epsilon_full(delta: f64, gamma: f64, c: f64, lipschitz: f64) -> f64 {
    let denom = (1.0 - c) * lipschitz;
    4.0 * c * delta * delta / denom + 4.0 * c / (denom * gamma * gamma)
}

/// `ε̄_k = 4cδ̄_k²/((1 − c)L) + 8cm/((1 − c)Lγ_k²)`.
pub fn epsilon_stochastic(delta_bar: f64, gamma: f64, c: f64, lipschitz: f64, blocks: usize) -> f64 {
    let denom = (1.0 - c) * lipschitz;
    4.0 * c * delta_bar * delta_bar / denom + 8.0 * c * blocks as f64 / (denom * gamma * gamma)
}

/// `ε̂_k = max{4cΣ_i(δ²_{k+1,i} + 1/γ²_{k,i})/((1 − c)L̲), 4c·m·L/((1 − c)L̲)}`
/// with `L̲ = min_i L_i` and `L = Σ_i L_i`.
pub fn epsilon_cyclic(delta_next: &[f64], gammas: &[f64], c: f64, lipschitz_blocks: &[f64]) -> Result<f64> {
    let m = lipschitz_blocks.len();
    if delta_next.len() != m || gammas.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: if delta_next.len() != m {
                delta_next.len()
            } else {
                gammas.len()
            },
        });
    }
    if m == 0 {
        return Err(Error::param("blocks", "must be positive"));
    }
    let l_min = lipschitz_blocks.iter().copied().fold(f64::INFINITY, f64::min);
    let l_sum: f64 = lipschitz_blocks.iter().sum();
    let denom = (1.0 - c) * l_min;
    let weights: f64 = delta_next
        .iter()
        .zip(gammas)
        .map(|(d, g)| d * d + 1.0 / (g * g))
        .sum();
    Ok((4.0 * c * weights / denom).max(4.0 * c * m as f64 * l_sum / denom))
}
