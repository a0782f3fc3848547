use std::fmt::Write as _;

use nalgebra::DVector;
use rayon::prelude::*;

use super::{DecentralizedProblem, Network};
use crate::error::{Error, Result};
use crate::objective::SmoothObjective;
use crate::solvers::{IterateTrace, TraceRecord, UpdateRule, DIVERGENCE_FACTOR};

/// Largest per-entry gap tolerated between the stacked local updates and
/// the global step on `F`.
pub const EQUIVALENCE_TOL: f64 = 1e-14;

pub const DECENTRALIZED_HEADER: &str = "k,F,residual,consensus_error";

/// `0 ≤ β < (1 + λ_min(W))/2` and `0 < α < (1 − 2β + λ_min(W))/max_i L_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub lambda_min: f64,
    pub max_local_lipschitz: f64,
    pub beta_max: f64,
}

pub fn param_bounds(network: &Network, local_lipschitz: &[f64]) -> Result<ParamBounds> {
    let max_l = local_lipschitz.iter().copied().fold(0.0, f64::max);
    if !(max_l > 0.0 && max_l.is_finite()) {
        return Err(Error::param("lipschitz", "local constants must be positive"));
    }
    let lambda_min = network.lambda_min();
    Ok(ParamBounds {
        lambda_min,
        max_local_lipschitz: max_l,
        beta_max: (1.0 + lambda_min) / 2.0,
    })
}

impl ParamBounds {
    pub fn alpha_max(&self, beta: f64) -> f64 {
        (1.0 - 2.0 * beta + self.lambda_min) / self.max_local_lipschitz
    }

    /// `L_F = max_i L_i + (1 − λ_min(W))/α`
    pub fn penalty_lipschitz(&self, alpha: f64) -> f64 {
        self.max_local_lipschitz + (1.0 - self.lambda_min) / alpha
    }

    /// Accepts `(β, α)` strictly inside the bounds, naming the violated
    /// inequality otherwise. Inside the bounds `α < 2(1 − β)/L_F`, which is
    /// re-checked numerically.
    pub fn check(&self, beta: f64, alpha: f64) -> Result<()> {
        if !(beta >= 0.0 && beta < self.beta_max) {
            return Err(Error::OutOfBounds(format!(
                "β = {beta} violates 0 ≤ β < (1 + λ_min(W))/2 = {}",
                self.beta_max
            )));
        }
        let alpha_max = self.alpha_max(beta);
        if !(alpha > 0.0 && alpha < alpha_max) {
            return Err(Error::OutOfBounds(format!(
                "α = {alpha} violates 0 < α < (1 − 2β + λ_min(W))/max_i L_i = {alpha_max}"
            )));
        }
        let step_limit = 2.0 * (1.0 - beta) / self.penalty_lipschitz(alpha);
        if !(alpha < step_limit) {
            return Err(Error::OutOfBounds(format!(
                "α = {alpha} violates α < 2(1 − β)/L_F = {step_limit}"
            )));
        }
        Ok(())
    }
}

/// `x^{k+1}(i) = Σ_{j∈N(i)∪{i}} w_ij x^k(j) − α∇f_i(x^k(i)) + β(x^k(i) − x^{k−1}(i))`.
///
/// `neighborhood` must hold the states of exactly `N(i) ∪ {i}`, in any
/// order; the mixing sum runs in increasing node index.
pub fn local_step(
    network: &Network,
    node: usize,
    local: &dyn SmoothObjective,
    neighborhood: &[(usize, &DVector<f64>)],
    x_prev: &DVector<f64>,
    alpha: f64,
    beta: f64,
) -> Result<DVector<f64>> {
    if node >= network.node_count() {
        return Err(Error::Message {
            node,
            reason: format!("no such node in a {}-node network", network.node_count()),
        });
    }
    let mut received: Vec<(usize, &DVector<f64>)> = neighborhood.to_vec();
    received.sort_by_key(|(j, _)| *j);
    let ids: Vec<usize> = received.iter().map(|(j, _)| *j).collect();
    let expected = network.closed_neighborhood(node);
    if ids != expected {
        let missing: Vec<_> = expected.iter().filter(|j| !ids.contains(j)).collect();
        let extra: Vec<_> = ids.iter().filter(|j| !expected.contains(j)).collect();
        return Err(Error::Message {
            node,
            reason: format!("expected states from {expected:?}; missing {missing:?}, unexpected {extra:?}"),
        });
    }
    let n = local.dimension();
    if let Some((j, _)) = received.iter().find(|(_, s)| s.len() != n) {
        return Err(Error::Message {
            node,
            reason: format!("state from node {j} has the wrong dimension"),
        });
    }
    if x_prev.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x_prev.len(),
        });
    }
    let own = received[ids.binary_search(&node).unwrap_or_default()].1;
    let mut mixed = DVector::<f64>::zeros(n);
    for (j, state) in &received {
        let w = network.weight(node, *j);
        for e in 0..n {
            mixed[e] += w * state[e];
        }
    }
    let g = local.gradient(own);
    Ok(DVector::from_fn(n, |e, _| {
        (mixed[e] - alpha * g[e]) + beta * (own[e] - x_prev[e])
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecentralizedRecord {
    pub k: usize,
    /// `F(X^k)`
    pub value: f64,
    /// `F(X^k) − min F`
    pub residual: Option<f64>,
    pub consensus_error: f64,
    /// `max |stacked local update − global step|` for the step from `X^k`
    /// (zero on the final record).
    pub equivalence_gap: f64,
}

#[derive(Debug, Clone)]
pub struct DecentralizedRun {
    pub records: Vec<DecentralizedRecord>,
    /// The same run seen as a full-gradient Heavy-ball trace on `F` with
    /// `γ = α` and `c = αL_F/(2(1 − β))`.
    pub trace: IterateTrace,
    pub final_state: DVector<f64>,
}

impl DecentralizedRun {
    pub fn max_equivalence_gap(&self) -> f64 {
        self.records.iter().map(|r| r.equivalence_gap).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(48 * (self.records.len() + 1));
        out.push_str(DECENTRALIZED_HEADER);
        out.push('\n');
        for r in &self.records {
            let residual = r.residual.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", r.k, r.value, residual, r.consensus_error);
        }
        out
    }
}

/// Synchronous rounds of [`local_step`] at every node from `X⁰ = X^{−1}`
/// (zero unless given). Each round also evaluates the global step
/// `WX − α∇f(X) + β(X − X⁻)` and records the largest entrywise gap.
pub fn run_decentralized(
    dp: &DecentralizedProblem,
    beta: f64,
    iters: usize,
    x0: Option<DVector<f64>>,
) -> Result<DecentralizedRun> {
    let penalty = dp.penalty();
    let problem = dp.problem();
    let network = penalty.network();
    let alpha = penalty.alpha();
    let bounds = param_bounds(network, &penalty.local_lipschitz())?;
    bounds.check(beta, alpha)?;
    let m = network.node_count();
    let n = penalty.local_dimension();
    let l_f = penalty.lipschitz();
    let c = alpha * l_f / (2.0 * (1.0 - beta));

    let mut x = x0.unwrap_or_else(|| DVector::zeros(m * n));
    problem.check_point(&x)?;
    let mut x_prev = x.clone();
    let mut records = Vec::with_capacity(iters + 1);
    let mut trace = IterateTrace {
        rule: UpdateRule::Full,
        c,
        lipschitz: l_f,
        lipschitz_blocks: vec![l_f],
        seed: 0,
        records: Vec::with_capacity(iters + 1),
    };
    let mut guard = None;
    for k in 0..=iters {
        let (value, grad) = penalty.value_and_gradient(&x);
        let limit = *guard.get_or_insert(DIVERGENCE_FACTOR * value.abs().max(1.0));
        if !value.is_finite() || value > limit {
            return Err(Error::Divergence {
                k,
                value,
                threshold: limit,
            });
        }
        let mut rec = TraceRecord::new(k, value, (&x - &x_prev).norm_squared(), grad.norm());
        rec.beta = beta;
        rec.gamma = alpha;
        rec.residual = problem.optimality_gap(&x);
        rec.dist_sq = problem.distance_sq_to_argmin(&x);
        let mut record = DecentralizedRecord {
            k,
            value,
            residual: rec.residual,
            consensus_error: network.consensus_error(&x)?,
            equivalence_gap: 0.0,
        };
        trace.records.push(rec);
        if k == iters {
            records.push(record);
            break;
        }

        let states: Vec<DVector<f64>> = (0..m).map(|i| penalty.node(&x, i).into_owned()).collect();
        let prev: Vec<DVector<f64>> = (0..m).map(|i| penalty.node(&x_prev, i).into_owned()).collect();
        let next = (0..m)
            .into_par_iter()
            .map(|i| {
                let inbox: Vec<(usize, &DVector<f64>)> = network
                    .closed_neighborhood(i)
                    .into_iter()
                    .map(|j| (j, &states[j]))
                    .collect();
                local_step(
                    network,
                    i,
                    penalty.locals()[i].as_ref(),
                    &inbox,
                    &prev[i],
                    alpha,
                    beta,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let stacked = super::stack(&next);

        let global = DVector::from_fn(m * n, |e, _| (x[e] - alpha * grad[e]) + beta * (x[e] - x_prev[e]));
        record.equivalence_gap = (&stacked - &global).amax();
        records.push(record);

        x_prev = std::mem::replace(&mut x, stacked);
    }
    Ok(DecentralizedRun {
        records,
        trace,
        final_state: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn path_bounds_example() {
        let b = param_bounds(&Network::path(3).unwrap(), &[1.0, 0.5, 1.0]).unwrap();
        assert!((b.beta_max - 0.5).abs() < 1e-14);
        assert!((b.alpha_max(0.2) - 0.6).abs() < 1e-14);
        assert!(b.check(0.2, 0.59).is_ok());
        assert!(matches!(b.check(0.2, 0.61), Err(Error::OutOfBounds(_))));
        assert!(matches!(b.check(0.5, 0.1), Err(Error::OutOfBounds(_))));
    }

    #[test]
    fn identity_bounds() {
        let net = Network::from_mixing(DMatrix::identity(2, 2)).unwrap();
        let b = param_bounds(&net, &[2.0, 1.0]).unwrap();
        assert_eq!(b.beta_max, 1.0);
        assert_eq!(b.alpha_max(0.25), 2.0 * 0.75 / 2.0);
    }
}
