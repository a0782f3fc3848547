use heavyball::problems::{generate_data, make_linear_regression, make_logistic_regression, Distribution};
use heavyball::solvers::{run, run_cyclic, run_heavy_ball, run_stochastic, step_size_full};
use heavyball::{
    BlockPartition, DMatrix, DVector, IterateTrace, MomentumSchedule, Problem, Quadratic, SolverConfig,
    UpdateRule,
};
use nalgebra::SymmetricEigen;

fn linreg() -> Problem {
    make_linear_regression(&generate_data(100, 150, Distribution::Gaussian, 1).unwrap()).unwrap()
}

fn small_quadratic() -> Quadratic {
    let q = DMatrix::from_row_slice(
        4,
        4,
        &[
            3.0, 0.5, 0.2, 0.0, //
            0.5, 2.0, 0.1, 0.3, //
            0.2, 0.1, 1.5, 0.4, //
            0.0, 0.3, 0.4, 1.0,
        ],
    );
    Quadratic::new(q, DVector::from_vec(vec![1.0, -0.5, 0.25, 2.0])).unwrap()
}

#[test]
fn zero_momentum_is_gradient_descent_bitwise() {
    let p = linreg();
    let iters = 300;
    let cfg = SolverConfig::unit_step(UpdateRule::Full, 0.0, 1, iters)
        .unwrap()
        .keeping_iterates();
    let trace = run_heavy_ball(&p, &cfg).unwrap();

    let gamma = step_size_full(0.0, cfg.c, p.lipschitz_global()).unwrap();
    let mut x = DVector::zeros(100);
    for r in &trace.records {
        let (value, grad) = p.objective().value_and_gradient(&x);
        assert_eq!(r.iterate.as_ref().unwrap(), &x, "k = {}", r.k);
        assert_eq!(r.value.to_bits(), value.to_bits());
        x = DVector::from_fn(100, |i, _| x[i] - gamma * grad[i]);
    }
}

#[test]
fn scalar_recursion_reference() {
    let p = Quadratic::isotropic(1).into_problem().unwrap();
    let cfg = SolverConfig::new(UpdateRule::Full, MomentumSchedule::constant(0.1), 0.45, 100)
        .with_x0(DVector::from_element(1, 1.0))
        .keeping_iterates();
    let trace = run_heavy_ball(&p, &cfg).unwrap();
    assert!((trace.records[0].gamma - 0.81).abs() < 1e-15);

    let (mut x, mut prev) = (1.0f64, 1.0f64);
    for r in &trace.records {
        let got = r.iterate.as_ref().unwrap()[0];
        assert!((got - x).abs() <= 1e-14, "k = {}: {got} vs {x}", r.k);
        let next = x - 0.81 * x + 0.1 * (x - prev);
        prev = x;
        x = next;
    }
    assert!((trace.records[1].iterate.as_ref().unwrap()[0] - 0.19).abs() < 1e-15);
}

#[test]
fn single_block_schemes_reproduce_full() {
    let p = linreg();
    let full = run(
        &p,
        &SolverConfig::unit_step(UpdateRule::Full, 0.3, 1, 200).unwrap(),
    )
    .unwrap();
    for rule in [UpdateRule::Cyclic, UpdateRule::Stochastic] {
        let cfg = SolverConfig::unit_step(rule, 0.3, 1, 200).unwrap().with_seed(5);
        let t = run(&p, &cfg).unwrap();
        assert_eq!(t.records.len(), full.records.len());
        for (a, b) in t.records.iter().zip(&full.records) {
            assert_eq!(a.gamma, b.gamma);
            let tol = 1e-12 * (1.0 + b.value.abs());
            assert!((a.value - b.value).abs() <= tol, "{rule} k = {}", a.k);
            assert!((a.step_norm_sq - b.step_norm_sq).abs() <= tol);
        }
    }
}

#[test]
fn stochastic_block_frequencies() {
    let m = 5;
    let p = Quadratic::isotropic(10)
        .into_problem()
        .unwrap()
        .with_blocks(m)
        .unwrap();
    let n_draws = 100_000;
    let cfg = SolverConfig::new(
        UpdateRule::Stochastic,
        MomentumSchedule::constant(0.5),
        0.4,
        n_draws,
    )
    .with_seed(2024)
    .with_x0(DVector::from_element(10, 1.0));
    let trace = run_stochastic(&p, &cfg).unwrap();
    let mut counts = vec![0usize; m];
    for r in &trace.records[..n_draws] {
        counts[r.block.unwrap()] += 1;
    }
    assert!(trace.records[n_draws].block.is_none());
    let pr = 1.0 / m as f64;
    let band = 4.0 * (pr * (1.0 - pr) / n_draws as f64).sqrt();
    for (i, &c) in counts.iter().enumerate() {
        let freq = c as f64 / n_draws as f64;
        assert!((freq - pr).abs() <= band, "block {i}: {freq}");
    }
}

#[test]
fn stochastic_moves_only_the_selected_block() {
    let d = generate_data(20, 30, Distribution::Gaussian, 3)
        .unwrap()
        .into_classification();
    let p = make_logistic_regression(&d, 1e-3)
        .unwrap()
        .with_blocks(4)
        .unwrap();
    let cfg = SolverConfig::unit_step(UpdateRule::Stochastic, 0.4, 4, 400)
        .unwrap()
        .with_seed(17)
        .keeping_iterates();
    let trace = run_stochastic(&p, &cfg).unwrap();
    for w in trace.records.windows(2) {
        let i = w[0].block.unwrap();
        let (a, b) = (w[0].iterate.as_ref().unwrap(), w[1].iterate.as_ref().unwrap());
        for (j, r) in p.partition().ranges().iter().enumerate() {
            if j != i {
                assert_eq!(a.rows_range(r.clone()), b.rows_range(r.clone()));
            }
        }
    }
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let d = generate_data(30, 40, Distribution::Gaussian, 8).unwrap();
    let p = make_linear_regression(&d).unwrap().with_blocks(3).unwrap();
    let cfg = SolverConfig::unit_step(UpdateRule::Stochastic, 0.5, 3, 500)
        .unwrap()
        .with_seed(99);
    let a = run(&p, &cfg).unwrap().to_csv();
    let b = run(&p, &cfg).unwrap().to_csv();
    assert_eq!(a, b);
    let other = run(&p, &cfg.clone().with_seed(100)).unwrap().to_csv();
    assert_ne!(a, other);

    for rule in [UpdateRule::Full, UpdateRule::Cyclic] {
        let cfg = SolverConfig::unit_step(rule, 0.2, 3, 200).unwrap();
        assert_eq!(run(&p, &cfg).unwrap().to_csv(), run(&p, &cfg).unwrap().to_csv());
    }
}

#[test]
fn two_block_sweep_reference() {
    let quad = small_quadratic();
    let q = quad.hessian_matrix().clone();
    let center = DVector::from_vec(vec![1.0, -0.5, 0.25, 2.0]);
    let blocks = [0..1, 1..4];
    let p = quad
        .into_problem()
        .unwrap()
        .with_partition(BlockPartition::from_ranges(4, blocks.to_vec()).unwrap())
        .unwrap();
    let (beta, c) = (0.3, 0.45);
    let cfg = SolverConfig::new(UpdateRule::Cyclic, MomentumSchedule::constant(beta), c, 60)
        .with_x0(DVector::from_vec(vec![-1.0, 2.0, 0.5, -3.0]))
        .keeping_iterates();
    let trace = run_cyclic(&p, &cfg).unwrap();

    let gammas: Vec<f64> = blocks
        .iter()
        .map(|r| {
            let sub = q.view_range(r.clone(), r.clone()).into_owned();
            let l = SymmetricEigen::new(sub).eigenvalues.max();
            2.0 * (1.0 - beta) * c / l
        })
        .collect();
    let mut x = DVector::from_vec(vec![-1.0, 2.0, 0.5, -3.0]);
    let mut prev = x.clone();
    for r in &trace.records {
        let got = r.iterate.as_ref().unwrap();
        assert!((got - &x).amax() <= 1e-12, "sweep {}", r.k);
        for (got, want) in r.block_gammas.iter().zip(&gammas) {
            assert!((got - want).abs() <= 1e-12);
        }
        let mut next = x.clone();
        for (i, rg) in blocks.iter().enumerate() {
            let g = &q * (&next - &center);
            for e in rg.clone() {
                next[e] = x[e] - gammas[i] * g[e] + beta * (x[e] - prev[e]);
            }
        }
        prev = x;
        x = next;
    }
}

fn assert_round_trip(trace: &IterateTrace) {
    let text = trace.to_csv();
    let back = IterateTrace::from_csv(&text, trace.meta()).unwrap();
    assert_eq!(back.to_csv(), text);
    for (a, b) in back.records.iter().zip(&trace.records) {
        assert_eq!(a.k, b.k);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.residual, b.residual);
        assert_eq!(a.grad_norm.to_bits(), b.grad_norm.to_bits());
        assert_eq!((a.beta, a.gamma, a.block), (b.beta, b.gamma, b.block));
        assert_eq!(a.block_step_sq, b.block_step_sq);
        assert_eq!(a.block_gammas, b.block_gammas);
    }
}

#[test]
fn trace_csv_round_trips() {
    let d = generate_data(12, 20, Distribution::Bernoulli, 4).unwrap();
    let p = make_linear_regression(&d).unwrap().with_blocks(3).unwrap();
    for rule in [UpdateRule::Full, UpdateRule::Cyclic, UpdateRule::Stochastic] {
        let cfg = SolverConfig::unit_step(rule, 0.3, 3, 50).unwrap().with_seed(7);
        let t = run(&p, &cfg).unwrap();
        assert!(t
            .to_csv()
            .starts_with("k,f,residual,step_norm_sq,grad_norm,beta,gamma,block\n"));
        assert_round_trip(&t);
    }
}

#[test]
fn record_every_thins_the_trace() {
    let p = linreg();
    let cfg = SolverConfig::unit_step(UpdateRule::Full, 0.2, 1, 95)
        .unwrap()
        .with_record_every(10);
    let t = run(&p, &cfg).unwrap();
    let ks: Vec<usize> = t.records.iter().map(|r| r.k).collect();
    assert_eq!(ks, vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 95]);
}

#[test]
fn power_decay_schedule_is_applied() {
    let p = linreg();
    let cfg = SolverConfig::new(
        UpdateRule::Full,
        MomentumSchedule::power_decay(0.4, 2.0),
        0.45,
        10,
    );
    let t = run_heavy_ball(&p, &cfg).unwrap();
    assert_eq!(t.records[0].beta, 0.4);
    assert_eq!(t.records[1].beta, 0.4);
    assert_eq!(t.records[2].beta, 0.25);
    assert_eq!(t.records[3].beta, 1.0 / 9.0);
    for w in t.records.windows(2) {
        assert!(w[1].beta <= w[0].beta);
        assert!(w[1].gamma >= w[0].gamma);
    }
}

#[test]
fn paper_preset_residuals_decrease_overall() {
    let p = linreg();
    for beta in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let t = run(
            &p,
            &SolverConfig::unit_step(UpdateRule::Full, beta, 1, 1000).unwrap(),
        )
        .unwrap();
        let gamma = t.records[0].gamma;
        assert!((gamma * p.lipschitz_global() - 1.0).abs() < 1e-14);
        let first = t.records[0].residual.unwrap();
        let last = t.last().unwrap().residual.unwrap();
        assert!(last < 1e-3 * first, "β = {beta}: {first} → {last}");
    }
}
