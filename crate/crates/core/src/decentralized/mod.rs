//! Decentralized Heavy-ball over a communication graph.
//!
//! Node `i` holds `x(i) ∈ ℝⁿ` and a local objective `f_i`. One synchronous
//! round is
//!
//! `x^{k+1}(i) = Σ_{j∈N(i)∪{i}} w_ij x^k(j) − α∇f_i(x^k(i)) + β(x^k(i) − x^{k−1}(i))`,
//!
//! which, stacked, is the full-gradient Heavy-ball step with `γ = α` on the
//! penalty objective `F(X) = Σ_i f_i(x(i)) + tr(Xᵀ(I − W)X)/(2α)`.

mod network;
mod penalty;
mod run;

use std::sync::Arc;

pub use network::Network;
pub use penalty::{stack, DecentralizedProblem, PenaltyObjective, REFERENCE_ITERS};
pub use run::{
    local_step, param_bounds, run_decentralized, DecentralizedRecord, DecentralizedRun, ParamBounds,
    DECENTRALIZED_HEADER, EQUIVALENCE_TOL,
};

use crate::error::{Error, Result};
use crate::objective::SmoothObjective;
use crate::problems::{Dataset, LeastSquares, Logistic, RegressionSpec};

/// Splits a dataset's samples into `nodes` contiguous groups (the first
/// `samples % nodes` groups get one extra) and gives each node the
/// regression objective of its group.
pub fn split_dataset(
    data: &Dataset,
    nodes: usize,
    spec: RegressionSpec,
) -> Result<Vec<Arc<dyn SmoothObjective>>> {
    let samples = data.samples();
    if nodes == 0 || nodes > samples {
        return Err(Error::param(
            "nodes",
            format!("{nodes} nodes for {samples} samples"),
        ));
    }
    let base = samples / nodes;
    let extra = samples % nodes;
    let mut start = 0;
    let mut out: Vec<Arc<dyn SmoothObjective>> = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let len = base + usize::from(i < extra);
        let a = data.features.rows(start, len).into_owned();
        let y = data.labels.rows(start, len).into_owned();
        out.push(match spec {
            RegressionSpec::Linear => Arc::new(LeastSquares::new(a, y)?),
            RegressionSpec::Logistic { lambda } => Arc::new(Logistic::new(a, y, lambda)?),
        });
        start += len;
    }
    Ok(out)
}

pub fn split_least_squares(data: &Dataset, nodes: usize) -> Result<Vec<Arc<dyn SmoothObjective>>> {
    split_dataset(data, nodes, RegressionSpec::Linear)
}
