use std::sync::Arc;

use nalgebra::{DMatrix, DVector, DVectorView};

use super::Network;
use crate::error::{Error, Result};
use crate::objective::{ArgminSet, Problem, SmoothObjective};
use crate::problems::newton_minimize;
use crate::solvers::{run_heavy_ball, MomentumSchedule, SolverConfig, UpdateRule};

/// Iterations of the fallback reference run used for `min F` when the local
/// objectives have no Hessian.
pub const REFERENCE_ITERS: usize = 1_000_000;

/// `F(X) = Σ_i f_i(x(i)) + tr(Xᵀ(I − W)X)/(2α)` over node states stacked
/// row-major into one vector of length `m·n`.
#[derive(Debug, Clone)]
pub struct PenaltyObjective {
    network: Network,
    locals: Vec<Arc<dyn SmoothObjective>>,
    alpha: f64,
    local_dim: usize,
    lipschitz: f64,
}

impl PenaltyObjective {
    pub fn new(network: Network, locals: Vec<Arc<dyn SmoothObjective>>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", format!("{alpha} must be positive")));
        }
        if locals.len() != network.node_count() {
            return Err(Error::DimensionMismatch {
                expected: network.node_count(),
                found: locals.len(),
            });
        }
        let local_dim = locals[0].dimension();
        if let Some(bad) = locals.iter().find(|f| f.dimension() != local_dim) {
            return Err(Error::DimensionMismatch {
                expected: local_dim,
                found: bad.dimension(),
            });
        }
        let max_l = locals.iter().map(|f| f.lipschitz()).fold(0.0, f64::max);
        let lipschitz = max_l + (1.0 - network.lambda_min()) / alpha;
        Ok(Self {
            network,
            locals,
            alpha,
            local_dim,
            lipschitz,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn locals(&self) -> &[Arc<dyn SmoothObjective>] {
        &self.locals
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn local_dimension(&self) -> usize {
        self.local_dim
    }

    pub fn local_lipschitz(&self) -> Vec<f64> {
        self.locals.iter().map(|f| f.lipschitz()).collect()
    }

    pub fn node<'a>(&self, stacked: &'a DVector<f64>, i: usize) -> DVectorView<'a, f64> {
        stacked.rows(i * self.local_dim, self.local_dim)
    }

    /// `WX`, accumulating each node's closed neighborhood in index order.
    pub fn mix(&self, stacked: &DVector<f64>) -> DVector<f64> {
        let n = self.local_dim;
        let mut out = DVector::zeros(stacked.len());
        for i in 0..self.network.node_count() {
            for j in self.network.closed_neighborhood(i) {
                let w = self.network.weight(i, j);
                for e in 0..n {
                    out[i * n + e] += w * stacked[j * n + e];
                }
            }
        }
        out
    }

    /// `tr(Xᵀ(I − W)X)/(2α)`
    pub fn penalty(&self, stacked: &DVector<f64>) -> f64 {
        let mixed = self.mix(stacked);
        stacked.dot(&(stacked - mixed)) / (2.0 * self.alpha)
    }

    fn local_states(&self, stacked: &DVector<f64>) -> Vec<DVector<f64>> {
        (0..self.network.node_count())
            .map(|i| self.node(stacked, i).into_owned())
            .collect()
    }
}

impl SmoothObjective for PenaltyObjective {
    fn dimension(&self) -> usize {
        self.network.node_count() * self.local_dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let local: f64 = self
            .local_states(x)
            .iter()
            .zip(&self.locals)
            .map(|(xi, f)| f.value(xi))
            .sum();
        local + self.penalty(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = self.local_dim;
        let mixed = self.mix(x);
        let disagreement = x - &mixed;
        let mut value = x.dot(&disagreement) / (2.0 * self.alpha);
        let mut grad = disagreement / self.alpha;
        for (i, f) in self.locals.iter().enumerate() {
            let (v, g) = f.value_and_gradient(&self.node(x, i).into_owned());
            value += v;
            let mut slot = grad.rows_mut(i * n, n);
            slot += g;
        }
        (value, grad)
    }

    /// `L_F = max_i L_i + (1 − λ_min(W))/α`
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let m = self.network.node_count();
        let n = self.local_dim;
        let mut h = DMatrix::zeros(m * n, m * n);
        for (i, f) in self.locals.iter().enumerate() {
            let hi = f.hessian(&self.node(x, i).into_owned())?;
            h.view_mut((i * n, i * n), (n, n)).copy_from(&hi);
        }
        let w = self.network.mixing();
        for i in 0..m {
            for j in 0..m {
                let coupling = (if i == j { 1.0 } else { 0.0 } - w[(i, j)]) / self.alpha;
                if coupling != 0.0 {
                    for e in 0..n {
                        h[(i * n + e, j * n + e)] += coupling;
                    }
                }
            }
        }
        Some(h)
    }

    /// For quadratic local objectives, `F(X) − F(X*) = ½(X − X*)ᵀ∇²F(X − X*)`,
    /// summed node by node plus the penalty of the displacement.
    fn gap_to(&self, x: &DVector<f64>, x_star: &DVector<f64>) -> Option<f64> {
        if !self.is_quadratic() {
            return None;
        }
        let mut gap = 0.0;
        for (i, f) in self.locals.iter().enumerate() {
            gap += f.gap_to(&self.node(x, i).into_owned(), &self.node(x_star, i).into_owned())?;
        }
        Some(gap + self.penalty(&(x - x_star)))
    }

    fn is_quadratic(&self) -> bool {
        self.locals.iter().all(|f| f.is_quadratic())
    }
}

/// Penalty objective with the ground truth the diagnostics need.
#[derive(Debug, Clone)]
pub struct DecentralizedProblem {
    penalty: Arc<PenaltyObjective>,
    problem: Problem,
}

impl DecentralizedProblem {
    /// Builds `F` and its minimizer: Newton's method when every local
    /// objective has a Hessian, otherwise a reference run of the global
    /// scheme for [`REFERENCE_ITERS`] iterations at `γ = 1/L_F`.
    pub fn new(network: Network, locals: Vec<Arc<dyn SmoothObjective>>, alpha: f64) -> Result<Self> {
        let penalty = Arc::new(PenaltyObjective::new(network, locals, alpha)?);
        let problem = Problem::new(penalty.clone())?;
        let x0 = DVector::zeros(penalty.dimension());
        let problem = if penalty.hessian(&x0).is_some() {
            let x_star = newton_minimize(penalty.as_ref(), &x0)?;
            let min_value = penalty.value(&x_star);
            problem
                .with_min_value(min_value)
                .with_argmin(ArgminSet::Point(x_star))
        } else {
            let cfg = SolverConfig::new(
                UpdateRule::Full,
                MomentumSchedule::constant(0.0),
                0.5,
                REFERENCE_ITERS,
            )
            .with_record_every(REFERENCE_ITERS);
            let trace = run_heavy_ball(&problem, &cfg)?;
            let min_value = trace.last().map_or(f64::NAN, |r| r.value);
            problem.with_min_value(min_value)
        };
        Ok(Self { penalty, problem })
    }

    pub fn penalty(&self) -> &PenaltyObjective {
        &self.penalty
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }
}

/// Stacks node states row-major.
pub fn stack(states: &[DVector<f64>]) -> DVector<f64> {
    let total: usize = states.iter().map(|s| s.len()).sum();
    DVector::from_iterator(total, states.iter().flat_map(|s| s.iter().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Quadratic;

    fn quad_locals(m: usize, n: usize) -> Vec<Arc<dyn SmoothObjective>> {
        (0..m)
            .map(|i| {
                let center = DVector::from_fn(n, |e, _| (i + e) as f64 * 0.5 - 1.0);
                Arc::new(Quadratic::new(DMatrix::identity(n, n) * (1.0 + i as f64), center).unwrap())
                    as Arc<dyn SmoothObjective>
            })
            .collect()
    }

    #[test]
    fn identity_mixing_has_no_penalty() {
        let net = Network::from_mixing(DMatrix::identity(3, 3)).unwrap();
        let locals = quad_locals(3, 2);
        let f = PenaltyObjective::new(net, locals.clone(), 0.7).unwrap();
        assert!((f.lipschitz() - 3.0).abs() < 1e-12);
        let x = DVector::from_fn(6, |i, _| i as f64 * 0.3);
        let direct: f64 = (0..3).map(|i| locals[i].value(&f.node(&x, i).into_owned())).sum();
        assert_eq!(f.value(&x), direct);
    }

    #[test]
    fn consensus_states_have_zero_penalty() {
        let f = PenaltyObjective::new(Network::path(4).unwrap(), quad_locals(4, 3), 0.5).unwrap();
        let x = stack(&vec![DVector::from_vec(vec![1.0, -2.0, 0.5]); 4]);
        assert!(f.penalty(&x).abs() < 1e-14);
    }

    #[test]
    fn lipschitz_constant_formula() {
        let net = Network::path(3).unwrap();
        let f = PenaltyObjective::new(net, quad_locals(3, 2), 0.25).unwrap();
        // max L_i = 3, λ_min = 0
        assert!((f.lipschitz() - (3.0 + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_alpha_and_sizes() {
        let net = Network::path(3).unwrap();
        assert!(PenaltyObjective::new(net.clone(), quad_locals(3, 2), 0.0).is_err());
        assert!(PenaltyObjective::new(net, quad_locals(2, 2), 0.5).is_err());
    }

    #[test]
    fn gap_matches_value_difference() {
        let dp = DecentralizedProblem::new(Network::ring(4).unwrap(), quad_locals(4, 2), 0.3).unwrap();
        let x = DVector::from_fn(8, |i, _| (i as f64).sin());
        let gap = dp.problem().optimality_gap(&x).unwrap();
        let diff = dp.penalty().value(&x) - dp.problem().min_value().unwrap();
        assert!((gap - diff).abs() < 1e-12 * (1.0 + diff.abs()));
    }
}
