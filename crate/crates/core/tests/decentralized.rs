use std::sync::Arc;

use heavyball::decentralized::{
    local_step, param_bounds, run_decentralized, split_least_squares, stack, DecentralizedProblem, Network,
    PenaltyObjective, EQUIVALENCE_TOL,
};
use heavyball::lyapunov::{rate_report, series};
use heavyball::problems::{generate_data, Distribution};
use heavyball::rng::SeededRng;
use heavyball::solvers::{heavy_ball_step, run_heavy_ball};
use heavyball::{DMatrix, DVector, Error, MomentumSchedule, SmoothObjective, SolverConfig, UpdateRule};
use nalgebra::SymmetricEigen;

#[derive(Debug)]
struct Flat(usize);

impl SmoothObjective for Flat {
    fn dimension(&self) -> usize {
        self.0
    }
    fn value(&self, _x: &DVector<f64>) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.0)
    }
    fn lipschitz(&self) -> f64 {
        1.0
    }
}

fn random_vector(rng: &mut SeededRng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.standard_normal())
}

fn five_node_problem(beta: f64) -> DecentralizedProblem {
    let data = generate_data(10, 50, Distribution::Gaussian, 1).unwrap();
    let locals = split_least_squares(&data, 5).unwrap();
    let net = Network::path(5).unwrap();
    let ls: Vec<f64> = locals.iter().map(|f| f.lipschitz()).collect();
    let alpha = 0.9 * param_bounds(&net, &ls).unwrap().alpha_max(beta);
    DecentralizedProblem::new(net, locals, alpha).unwrap()
}

#[test]
fn three_node_path_spectrum() {
    let net = Network::path(3).unwrap();
    let eig = SymmetricEigen::new(net.mixing().clone()).eigenvalues;
    let mut sorted: Vec<f64> = eig.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    for (got, want) in sorted.iter().zip([0.0, 2.0 / 3.0, 1.0]) {
        assert!((got - want).abs() < 1e-14, "{sorted:?}");
    }
    assert!(net.lambda_min().abs() < 1e-14);
}

#[test]
fn metropolis_on_larger_graphs_is_doubly_stochastic() {
    let net = Network::parse_edge_list("6\n0 1\n1 2\n2 3\n3 0\n0 4\n4 5\n1 4\n").unwrap();
    let w = net.mixing();
    for i in 0..6 {
        assert!((w.row(i).sum() - 1.0).abs() < 1e-14);
        assert!((w.column(i).sum() - 1.0).abs() < 1e-14);
        for j in 0..6 {
            assert_eq!(w[(i, j)], w[(j, i)]);
            if i != j && !net.neighbors(i).contains(&j) {
                assert_eq!(w[(i, j)], 0.0);
            }
        }
    }
    assert!(net.lambda_min() > -1.0);
}

#[test]
fn edge_list_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path5.txt");
    std::fs::write(&path, "5\n0 1\n1 2\n2 3\n3 4\n").unwrap();
    assert_eq!(Network::load(&path).unwrap(), Network::path(5).unwrap());
    assert!(Network::load(&dir.path().join("missing.txt")).is_err());
    assert!(matches!(
        Network::parse_edge_list("4\n0 1\n2 3\n"),
        Err(Error::DisconnectedGraph)
    ));
}

#[test]
fn gossip_limit_is_averaging() {
    let net = Network::ring(4).unwrap();
    let mut rng = SeededRng::new(2);
    let states: Vec<DVector<f64>> = (0..4).map(|_| random_vector(&mut rng, 3)).collect();
    for i in 0..4 {
        let inbox: Vec<(usize, &DVector<f64>)> = net
            .closed_neighborhood(i)
            .into_iter()
            .map(|j| (j, &states[j]))
            .collect();
        let out = local_step(&net, i, &Flat(3), &inbox, &random_vector(&mut rng, 3), 0.3, 0.0).unwrap();
        let mut expected = DVector::zeros(3);
        for j in net.closed_neighborhood(i) {
            expected += net.weight(i, j) * &states[j];
        }
        assert!((out - expected).amax() < 1e-15);
    }
}

#[test]
fn single_node_is_a_heavy_ball_step() {
    let net = Network::metropolis(1, &[]).unwrap();
    let data = generate_data(6, 10, Distribution::Gaussian, 4).unwrap();
    let f = split_least_squares(&data, 1).unwrap().remove(0);
    let mut rng = SeededRng::new(5);
    let (x, prev) = (random_vector(&mut rng, 6), random_vector(&mut rng, 6));
    let out = local_step(&net, 0, f.as_ref(), &[(0, &x)], &prev, 0.01, 0.3).unwrap();
    let reference = heavy_ball_step(&x, &prev, &f.gradient(&x), 0.01, 0.3).unwrap();
    assert_eq!(out, reference);
}

#[test]
fn neighborhood_must_be_exact() {
    let net = Network::path(3).unwrap();
    let x = DVector::from_element(2, 1.0);
    let f = Flat(2);
    // node 1 needs 0, 1 and 2
    let missing = local_step(&net, 1, &f, &[(0, &x), (1, &x)], &x, 0.1, 0.0);
    assert!(matches!(missing, Err(Error::Message { node: 1, .. })));
    let extra = local_step(&net, 0, &f, &[(0, &x), (1, &x), (2, &x)], &x, 0.1, 0.0);
    assert!(matches!(extra, Err(Error::Message { node: 0, .. })));
    assert!(local_step(&net, 3, &f, &[(0, &x)], &x, 0.1, 0.0).is_err());
}

#[test]
fn neighbor_order_does_not_matter() {
    let net = Network::complete(4).unwrap();
    let data = generate_data(5, 12, Distribution::Gaussian, 6).unwrap();
    let f = split_least_squares(&data, 4).unwrap().remove(2);
    let mut rng = SeededRng::new(8);
    let states: Vec<DVector<f64>> = (0..4).map(|_| random_vector(&mut rng, 5)).collect();
    let prev = random_vector(&mut rng, 5);
    let forward: Vec<_> = (0..4).map(|j| (j, &states[j])).collect();
    let backward: Vec<_> = (0..4).rev().map(|j| (j, &states[j])).collect();
    assert_eq!(
        local_step(&net, 2, f.as_ref(), &forward, &prev, 0.05, 0.2).unwrap(),
        local_step(&net, 2, f.as_ref(), &backward, &prev, 0.05, 0.2).unwrap()
    );
}

#[test]
fn five_node_equivalence_and_rate() {
    let dp = five_node_problem(0.2);
    let run = run_decentralized(&dp, 0.2, 1000, None).unwrap();
    assert_eq!(run.records.len(), 1001);
    assert!(
        run.max_equivalence_gap() <= EQUIVALENCE_TOL,
        "{:e}",
        run.max_equivalence_gap()
    );

    let s = series(&run.trace).unwrap();
    let report = rate_report(&s, None).unwrap();
    assert!(
        report.sublinear_holds,
        "{} > {}",
        report.sublinear_constant, report.sublinear_bound
    );
    assert!(run.records.last().unwrap().residual.unwrap() < run.records[0].residual.unwrap());

    let again = run_decentralized(&dp, 0.2, 1000, None).unwrap();
    assert_eq!(again.to_csv(), run.to_csv());
    assert!(run.to_csv().starts_with("k,F,residual,consensus_error\n"));
}

#[test]
fn decentralized_run_tracks_the_global_scheme() {
    let beta = 0.2;
    let dp = five_node_problem(beta);
    let alpha = dp.penalty().alpha();
    let c = alpha * dp.penalty().lipschitz() / (2.0 * (1.0 - beta));
    let cfg = SolverConfig::new(UpdateRule::Full, MomentumSchedule::constant(beta), c, 300);
    let global = run_heavy_ball(dp.problem(), &cfg).unwrap();
    let local = run_decentralized(&dp, beta, 300, None).unwrap();
    for (a, b) in local.trace.records.iter().zip(&global.records) {
        assert!((a.gamma - b.gamma).abs() <= 1e-15 * alpha);
        assert!(
            (a.value - b.value).abs() <= 1e-10 * (1.0 + b.value.abs()),
            "k = {}",
            a.k
        );
    }
}

#[test]
fn out_of_bounds_parameters_are_named() {
    let dp = five_node_problem(0.2);
    let bounds = param_bounds(dp.penalty().network(), &dp.penalty().local_lipschitz()).unwrap();
    let err = run_decentralized(&dp, bounds.beta_max, 10, None).unwrap_err();
    assert!(
        matches!(&err, Error::OutOfBounds(msg) if msg.contains("(1 + λ_min(W))/2")),
        "{err}"
    );
    // the same α is too large once β grows
    let beta = 0.2 + 0.5 * (bounds.beta_max - 0.2);
    let err = run_decentralized(&dp, beta, 10, None).unwrap_err();
    assert!(
        matches!(&err, Error::OutOfBounds(msg) if msg.contains("max_i L_i")),
        "{err}"
    );
}

#[test]
fn bounds_imply_the_step_condition() {
    let net = Network::path(5).unwrap();
    let b = param_bounds(&net, &[3.0, 1.0, 2.0, 0.5, 4.0]).unwrap();
    for i in 0..50 {
        let beta = b.beta_max * i as f64 / 50.0;
        for j in 1..50 {
            let alpha = b.alpha_max(beta) * j as f64 / 50.0;
            assert!(b.check(beta, alpha).is_ok());
            assert!(2.0 * (1.0 - beta) / b.penalty_lipschitz(alpha) - alpha > 0.0);
        }
    }
}

#[test]
fn identical_nodes_stay_in_consensus() {
    let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let f: Arc<dyn SmoothObjective> =
        Arc::new(heavyball::Quadratic::new(q, DVector::from_vec(vec![1.0, -1.0])).unwrap());
    let x0 = stack(&vec![DVector::from_vec(vec![3.0, 0.5]); 4]);

    // uniform weights: every node computes the same sum, so consensus is exact
    let dp = DecentralizedProblem::new(Network::complete(4).unwrap(), vec![f.clone(); 4], 0.2).unwrap();
    let run = run_decentralized(&dp, 0.1, 200, Some(x0.clone())).unwrap();
    assert!(run.records.iter().all(|r| r.consensus_error == 0.0));
    for i in 1..4 {
        assert_eq!(run.final_state.rows(2 * i, 2), run.final_state.rows(0, 2));
    }

    // path weights differ per row; agreement holds up to rounding of Σ_j w_ij = 1
    let dp = DecentralizedProblem::new(Network::path(4).unwrap(), vec![f; 4], 0.2).unwrap();
    let run = run_decentralized(&dp, 0.1, 200, Some(x0)).unwrap();
    assert!(run.records.iter().all(|r| r.consensus_error <= 1e-14));
}

#[test]
fn identity_mixing_runs_nodes_independently() {
    let data = generate_data(4, 12, Distribution::Gaussian, 9).unwrap();
    let locals = split_least_squares(&data, 3).unwrap();
    let net = Network::from_mixing(DMatrix::identity(3, 3)).unwrap();
    let ls: Vec<f64> = locals.iter().map(|f| f.lipschitz()).collect();
    let (beta, iters) = (0.4, 150);
    let alpha = 0.5 * param_bounds(&net, &ls).unwrap().alpha_max(beta);
    let dp = DecentralizedProblem::new(net, locals.clone(), alpha).unwrap();
    let mut rng = SeededRng::new(10);
    let x0 = random_vector(&mut rng, 12);
    let run = run_decentralized(&dp, beta, iters, Some(x0.clone())).unwrap();

    for (i, f) in locals.iter().enumerate() {
        let mut x = x0.rows(4 * i, 4).into_owned();
        let mut prev = x.clone();
        for _ in 0..iters {
            let next = heavy_ball_step(&x, &prev, &f.gradient(&x), alpha, beta).unwrap();
            prev = std::mem::replace(&mut x, next);
        }
        assert_eq!(run.final_state.rows(4 * i, 4).into_owned(), x, "node {i}");
    }
}

#[test]
fn consensus_is_the_null_space_of_the_penalty() {
    let data = generate_data(3, 20, Distribution::Gaussian, 11).unwrap();
    let f = PenaltyObjective::new(
        Network::ring(5).unwrap(),
        split_least_squares(&data, 5).unwrap(),
        0.3,
    )
    .unwrap();
    let mut rng = SeededRng::new(12);
    for _ in 0..100 {
        let common = random_vector(&mut rng, 3);
        let x = stack(&vec![common; 5]);
        assert!((f.mix(&x) - &x).amax() <= 1e-14 * (1.0 + x.amax()));
        let y = random_vector(&mut rng, 15);
        assert!((f.mix(&y) - &y).amax() > 1e-6);
        assert!(f.penalty(&y) > 0.0);
    }
}

#[test]
fn penalty_gradient_is_lipschitz_with_l_f() {
    let data = generate_data(6, 40, Distribution::Gaussian, 13).unwrap();
    let f = PenaltyObjective::new(
        Network::path(5).unwrap(),
        split_least_squares(&data, 5).unwrap(),
        0.05,
    )
    .unwrap();
    let l = f.lipschitz();
    let mut rng = SeededRng::new(14);
    for _ in 0..1000 {
        let x = random_vector(&mut rng, 30);
        let y = random_vector(&mut rng, 30);
        let lhs = (f.gradient(&x) - f.gradient(&y)).norm();
        assert!(lhs <= l * (&x - &y).norm() * (1.0 + 1e-12));
    }
}
