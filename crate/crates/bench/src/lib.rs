//! Shared fixtures for the benchmarks.

use heavyball::problems::{generate_data, make_linear_regression, make_logistic_regression};
use heavyball::{Distribution, Problem};

/// Least squares on the `n = 100`, `m = 150` Gaussian preset.
pub fn linreg() -> Problem {
    make_linear_regression(&generate_data(100, 150, Distribution::Gaussian, 1).unwrap()).unwrap()
}

/// Regularized logistic regression on the same preset with `λ = 1e-3`.
pub fn logreg() -> Problem {
    let data = generate_data(100, 150, Distribution::Gaussian, 1)
        .unwrap()
        .into_classification();
    make_logistic_regression(&data, 1e-3).unwrap()
}
