//! Concrete problem instances: least-squares and regularized logistic
//! regression on synthetic data, plus the reference minimizers that supply
//! their ground-truth capabilities.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::{ArgminSet, Problem, SmoothObjective};
use crate::rng::SeededRng;

/// Relative residual tolerance for the Lipschitz power iterations.
pub const LIPSCHITZ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distribution {
    Gaussian,
    Bernoulli,
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Gaussian => "gaussian",
            Distribution::Bernoulli => "bernoulli",
        })
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(Distribution::Gaussian),
            "bernoulli" => Ok(Distribution::Bernoulli),
            other => Err(Error::param("dist", format!("unknown distribution `{other}`"))),
        }
    }
}

/// Design matrix (row `i` is `A_iᵀ`) and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
    pub distribution: Distribution,
    pub seed: u64,
}

/// Draws an `m × n` design and `m` labels.
///
/// Gaussian data has i.i.d. standard normal features and labels; Bernoulli
/// data has i.i.d. fair-coin `{0, 1}` features and labels. Features are drawn
/// row by row, then the labels, from one [`SeededRng`] stream.
pub fn generate_data(n: usize, m: usize, distribution: Distribution, seed: u64) -> Result<Dataset> {
    if n == 0 || m == 0 {
        return Err(Error::param("n, m", "both must be at least 1"));
    }
    let mut rng = SeededRng::new(seed);
    let mut draw = || match distribution {
        Distribution::Gaussian => rng.standard_normal(),
        Distribution::Bernoulli => f64::from(u8::from(rng.coin())),
    };
    let mut entries = Vec::with_capacity(m * n);
    for _ in 0..m * n {
        entries.push(draw());
    }
    let labels = DVector::from_iterator(m, (0..m).map(|_| draw()));
    Ok(Dataset {
        features: DMatrix::from_row_slice(m, n, &entries),
        labels,
        distribution,
        seed,
    })
}

impl Dataset {
    pub fn samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn features_dim(&self) -> usize {
        self.features.ncols()
    }

    /// Maps labels into `{−1, +1}`: positive labels to `+1`, the rest to
    /// `−1`. For both generators this is a fair ±1 coin per sample.
    pub fn into_classification(mut self) -> Self {
        self.labels
            .iter_mut()
            .for_each(|y| *y = if *y > 0.0 { 1.0 } else { -1.0 });
        self
    }

    /// CSV form: a first row `n,m,dist,seed`, then one row per sample with
    /// the `n` features followed by the label. Values use Rust's shortest
    /// round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "{},{},{},{}\n",
            self.features_dim(),
            self.samples(),
            self.distribution,
            self.seed
        );
        for i in 0..self.samples() {
            let row: Vec<String> = self
                .features
                .row(i)
                .iter()
                .chain(std::iter::once(&self.labels[i]))
                .map(|v| v.to_string())
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty dataset file"))?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(1, "header must be `n,m,dist,seed`"));
        }
        let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| Error::parse(1, e.to_string()));
        let n = parse_usize(fields[0])?;
        let m = parse_usize(fields[1])?;
        let distribution: Distribution = fields[2].parse()?;
        let seed = fields[3]
            .parse::<u64>()
            .map_err(|e| Error::parse(1, e.to_string()))?;

        let mut entries = Vec::with_capacity(m * n);
        let mut labels = Vec::with_capacity(m);
        for (idx, line) in lines {
            let values = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(idx + 1, e.to_string()))?;
            if values.len() != n + 1 {
                return Err(Error::parse(
                    idx + 1,
                    format!("expected {} values, found {}", n + 1, values.len()),
                ));
            }
            entries.extend_from_slice(&values[..n]);
            labels.push(values[n]);
        }
        if labels.len() != m {
            return Err(Error::parse(
                0,
                format!("expected {m} sample rows, found {}", labels.len()),
            ));
        }
        Ok(Dataset {
            features: DMatrix::from_row_slice(m, n, &entries),
            labels: DVector::from_vec(labels),
            distribution,
            seed,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        f.write_all(self.to_csv().as_bytes()).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_csv(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressionSpec {
    Linear,
    Logistic { lambda: f64 },
}

/// `f(x) = ½ Σ_i (y_i − A_iᵀx)²`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: DMatrix<f64>,
    y: DVector<f64>,
    lipschitz: f64,
}

impl LeastSquares {
    pub fn new(a: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if a.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: y.len(),
            });
        }
        if a.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "dataset" });
        }
        if a.iter().all(|&v| v == 0.0) {
            return Err(Error::param("features", "all-zero design has no curvature"));
        }
        let lipschitz = linalg::max_eigenvalue(&linalg::gram(&a), LIPSCHITZ_TOL)?;
        Ok(Self { a, y, lipschitz })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.y
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.y
    }
}

impl SmoothObjective for LeastSquares {
    fn dimension(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.residual(x).norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(&self.residual(x))
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let r = self.residual(x);
        (0.5 * r.norm_squared(), self.a.tr_mul(&r))
    }

    fn block_gradient(&self, x: &DVector<f64>, block: Range<usize>) -> DVector<f64> {
        let r = self.residual(x);
        self.a.columns_range(block).tr_mul(&r)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn block_lipschitz(&self, block: Range<usize>) -> Option<f64> {
        let cols = self.a.columns_range(block);
        linalg::max_eigenvalue(&cols.tr_mul(&cols), LIPSCHITZ_TOL).ok()
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(linalg::gram(&self.a))
    }

    fn gap_to(&self, x: &DVector<f64>, x_star: &DVector<f64>) -> Option<f64> {
        Some(0.5 * (&self.a * (x - x_star)).norm_squared())
    }

    fn is_quadratic(&self) -> bool {
        true
    }
}

/// `f(x) = Σ_i log(1 + exp(−y_i A_iᵀx)) + (λ/2)‖x‖²`.
///
/// The Lipschitz constant is `λ_max(AᵀA) + λ`. The tight constant is
/// `λ_max(AᵀA)/4 + λ`; the larger one matches the step-size convention of
/// the experiments.
#[derive(Debug, Clone)]
pub struct Logistic {
    a: DMatrix<f64>,
    y: DVector<f64>,
    lambda: f64,
    lipschitz: f64,
}

#[inline]
fn softplus(t: f64) -> f64 {
    // log(1 + e^t)
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Logistic {
    pub fn new(a: DMatrix<f64>, y: DVector<f64>, lambda: f64) -> Result<Self> {
        if a.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: y.len(),
            });
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
        }
        if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(Error::param("labels", format!("must be ±1, found {bad}")));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "dataset" });
        }
        let lipschitz = linalg::max_eigenvalue(&linalg::gram(&a), LIPSCHITZ_TOL)? + lambda;
        Ok(Self {
            a,
            y,
            lambda,
            lipschitz,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn margins(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.a * x).component_mul(&self.y)
    }

    /// `−y_i σ(−y_i A_iᵀx)` per sample: the loss derivative w.r.t. `A_iᵀx`.
    fn loss_slopes(&self, margins: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(margins.len(), |i, _| -self.y[i] * sigmoid(-margins[i]))
    }
}

impl SmoothObjective for Logistic {
    fn dimension(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let t = self.margins(x);
        t.iter().map(|&ti| softplus(-ti)).sum::<f64>() + 0.5 * self.lambda * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let t = self.margins(x);
        self.a.tr_mul(&self.loss_slopes(&t)) + x * self.lambda
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let t = self.margins(x);
        let value = t.iter().map(|&ti| softplus(-ti)).sum::<f64>() + 0.5 * self.lambda * x.norm_squared();
        (value, self.a.tr_mul(&self.loss_slopes(&t)) + x * self.lambda)
    }

    fn block_gradient(&self, x: &DVector<f64>, block: Range<usize>) -> DVector<f64> {
        let t = self.margins(x);
        let xb = x.rows_range(block.clone());
        self.a.columns_range(block).tr_mul(&self.loss_slopes(&t)) + xb * self.lambda
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn block_lipschitz(&self, block: Range<usize>) -> Option<f64> {
        let cols = self.a.columns_range(block);
        linalg::max_eigenvalue(&cols.tr_mul(&cols), LIPSCHITZ_TOL)
            .ok()
            .map(|l| l + self.lambda)
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let t = self.margins(x);
        let weights = DVector::from_fn(t.len(), |i, _| {
            let s = sigmoid(t[i]);
            s * (1.0 - s)
        });
        let mut weighted = self.a.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= weights[i];
        }
        let n = self.dimension();
        Some(self.a.tr_mul(&weighted) + DMatrix::identity(n, n) * self.lambda)
    }
}

/// Least-squares problem with every capability: the minimum-norm solution
/// fixes `min f`, the arg-min set is that solution plus `null(A)`, and the
/// restricted strong convexity constant is `σ²_min+(A)/2`.
pub fn make_linear_regression(data: &Dataset) -> Result<Problem> {
    let objective = LeastSquares::new(data.features.clone(), data.labels.clone())?;
    let (values, vectors) = linalg::sorted_symmetric_eigen(&linalg::gram(&objective.a));
    let thresh = linalg::rank_threshold(values[0].max(0.0), values.len());
    let rank = values.iter().take_while(|&&v| v > thresh).count();
    let basis = vectors.columns(0, rank).into_owned();
    let sigma_min_sq = values[rank - 1];

    // minimum-norm solution V_r Λ_r⁻¹ V_rᵀ Aᵀy
    let rhs = basis.tr_mul(&objective.a.tr_mul(&objective.y));
    let coeffs = DVector::from_fn(rank, |i, _| rhs[i] / values[i]);
    let x_ls = &basis * coeffs;
    let min_value = objective.value(&x_ls);

    let argmin = if rank == objective.dimension() {
        ArgminSet::Point(x_ls)
    } else {
        ArgminSet::Affine {
            anchor: x_ls,
            row_basis: basis,
        }
    };
    Problem::new(Arc::new(objective))?
        .with_min_value(min_value)
        .with_argmin(argmin)
        .with_rsc_constant(sigma_min_sq / 2.0)
}

/// Regularized logistic regression; `λ`-strong convexity gives a unique
/// minimizer (computed by Newton's method) and RSC constant `λ/2`.
pub fn make_logistic_regression(data: &Dataset, lambda: f64) -> Result<Problem> {
    let objective = Logistic::new(data.features.clone(), data.labels.clone(), lambda)?;
    let x_star = newton_minimize(&objective, &DVector::zeros(objective.dimension()))?;
    let min_value = objective.value(&x_star);
    Problem::new(Arc::new(objective))?
        .with_min_value(min_value)
        .with_argmin(ArgminSet::Point(x_star))
        .with_rsc_constant(lambda / 2.0)
}

pub fn make_problem(data: &Dataset, spec: RegressionSpec) -> Result<Problem> {
    match spec {
        RegressionSpec::Linear => make_linear_regression(data),
        RegressionSpec::Logistic { lambda } => make_logistic_regression(data, lambda),
    }
}

const NEWTON_MAX_ITERS: usize = 200;

/// Damped Newton's method with Armijo backtracking, run until the gradient
/// stops shrinking. Singular Hessians are handled with a pseudo-inverse, so
/// convex quadratics land on the minimum-norm-step minimizer.
pub fn newton_minimize(objective: &dyn SmoothObjective, x0: &DVector<f64>) -> Result<DVector<f64>> {
    let mut x = x0.clone();
    let (mut fx, mut g) = objective.value_and_gradient(&x);
    let g0 = g.norm().max(1.0);
    let mut stalls = 0;
    for _ in 0..NEWTON_MAX_ITERS {
        let gnorm = g.norm();
        if gnorm <= 1e-14 * g0 {
            return Ok(x);
        }
        let h = objective
            .hessian(&x)
            .ok_or(Error::Unsupported("Hessian oracle"))?;
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => {
                let svd = h.svd(true, true);
                let eps = 1e-12 * svd.singular_values.max();
                svd.pseudo_inverse(eps).map_err(|e| Error::param("hessian", e))? * &g
            }
        };
        let slope = g.dot(&step);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x - &step * t;
            let (ft, gt) = objective.value_and_gradient(&trial);
            if ft <= fx - 1e-4 * t * slope || (ft <= fx && gt.norm() < gnorm) {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((xn, fn_, gn)) => {
                let improved = gn.norm() < gnorm;
                x = xn;
                fx = fn_;
                g = gn;
                if improved {
                    stalls = 0;
                } else {
                    stalls += 1;
                }
            }
            None => stalls += 1,
        }
        if stalls >= 3 {
            return Ok(x);
        }
    }
    Ok(x)
}
