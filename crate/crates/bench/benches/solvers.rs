use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use heavyball::decentralized::{
    param_bounds, run_decentralized, split_least_squares, DecentralizedProblem, Network,
};
use heavyball::lyapunov::{check_descent, rate_report, series};
use heavyball::problems::generate_data;
use heavyball::solvers::run;
use heavyball::{Distribution, SolverConfig, UpdateRule};
use heavyball_bench::{linreg, logreg};

fn schemes(c: &mut Criterion) {
    let lin = linreg();
    let blocks = lin.clone().with_blocks(4).unwrap();
    let log = logreg().with_blocks(10).unwrap();
    let mut g = c.benchmark_group("1000 iterations");
    g.sample_size(20);
    g.bench_function("full linreg", |b| {
        let cfg = SolverConfig::unit_step(UpdateRule::Full, 0.3, 1, 1000).unwrap();
        b.iter(|| run(black_box(&lin), &cfg).unwrap())
    });
    g.bench_function("cyclic linreg 4 blocks", |b| {
        let cfg = SolverConfig::unit_step(UpdateRule::Cyclic, 0.3, 4, 1000).unwrap();
        b.iter(|| run(black_box(&blocks), &cfg).unwrap())
    });
    g.bench_function("stochastic logreg 10 blocks", |b| {
        let cfg = SolverConfig::unit_step(UpdateRule::Stochastic, 0.3, 10, 1000).unwrap();
        b.iter(|| run(black_box(&log), &cfg).unwrap())
    });
    g.bench_function("decentralized 5-node path", |b| {
        let data = generate_data(100, 150, Distribution::Gaussian, 1).unwrap();
        let locals = split_least_squares(&data, 5).unwrap();
        let net = Network::path(5).unwrap();
        let ls: Vec<f64> = locals.iter().map(|f| f.lipschitz()).collect();
        let alpha = 0.9 * param_bounds(&net, &ls).unwrap().alpha_max(0.2);
        let dp = DecentralizedProblem::new(net, locals, alpha).unwrap();
        b.iter(|| run_decentralized(black_box(&dp), 0.2, 1000, None).unwrap())
    });
    g.finish();
}

fn diagnostics(c: &mut Criterion) {
    let p = linreg();
    let trace = run(
        &p,
        &SolverConfig::unit_step(UpdateRule::Full, 0.3, 1, 1000).unwrap(),
    )
    .unwrap();
    c.bench_function("descent check", |b| {
        b.iter(|| check_descent(black_box(&trace)).unwrap())
    });
    c.bench_function("series and rate report", |b| {
        b.iter(|| rate_report(&series(black_box(&trace)).unwrap(), p.rsc_constant()).unwrap())
    });
}

criterion_group!(benches, schemes, diagnostics);
criterion_main!(benches);
