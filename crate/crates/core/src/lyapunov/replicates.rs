use super::checks::potentials;
use super::series::{series, LyapunovPoint, LyapunovSeries};
use crate::error::{Error, Result};
use crate::solvers::IterateTrace;

/// Runs sharing one configuration, differing only in their seeds. The
/// stochastic scheme's guarantees are statements about replicate means.
#[derive(Debug, Clone)]
pub struct Replicates {
    traces: Vec<IterateTrace>,
}

/// Replicate mean of `ξ̄_k` and friends, with the standard error of `ξ̄_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSeries {
    pub series: LyapunovSeries,
    pub xi_se: Vec<f64>,
}

/// Descent inequality on replicate means; `se` is the standard error of the
/// per-replicate slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanDescentRow {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub se: f64,
}

/// `mean(ξ̄_{k+1} − ω·ξ̄_k)` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionRow {
    pub k: usize,
    pub excess: f64,
    pub se: f64,
    /// Replicate mean of `ξ̄_k`.
    pub xi_mean: f64,
}

/// `√k · min_{i≤k} mean‖∇f(x^i)‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTrend {
    pub values: Vec<f64>,
    pub burn_in: usize,
    /// `k > burn_in` where the value went up.
    pub increases: Vec<usize>,
}

impl GradientTrend {
    pub fn holds(&self) -> bool {
        self.increases.is_empty()
    }
}

pub(crate) fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.first().is_some_and(|&v0| values.iter().all(|&v| v == v0)) {
        return (values[0], 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl Replicates {
    /// Rejects fewer than two traces or traces whose rule, constants, length
    /// or `(β_k, γ_k)` disagree.
    pub fn new(traces: Vec<IterateTrace>) -> Result<Self> {
        if traces.len() < 2 {
            return Err(Error::MismatchedReplicates(format!(
                "{} replicate(s), at least 2 required",
                traces.len()
            )));
        }
        let first = &traces[0];
        for (idx, t) in traces.iter().enumerate().skip(1) {
            let same = t.rule == first.rule
                && t.c == first.c
                && t.lipschitz == first.lipschitz
                && t.lipschitz_blocks == first.lipschitz_blocks
                && t.records.len() == first.records.len()
                && t.records.iter().zip(&first.records).all(|(a, b)| {
                    a.k == b.k
                        && a.beta == b.beta
                        && a.gamma == b.gamma
                        && a.block_betas == b.block_betas
                        && a.block_gammas == b.block_gammas
                });
            if !same {
                return Err(Error::MismatchedReplicates(format!(
                    "replicate {idx} was produced under a different configuration"
                )));
            }
        }
        Ok(Self { traces })
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn traces(&self) -> &[IterateTrace] {
        &self.traces
    }

    fn steps(&self) -> usize {
        self.traces[0].records.len()
    }

    fn column(&self, f: impl Fn(&IterateTrace, usize) -> f64) -> Vec<Vec<f64>> {
        (0..self.steps())
            .map(|k| self.traces.iter().map(|t| f(t, k)).collect())
            .collect()
    }

    pub fn path_series(&self) -> Result<Vec<LyapunovSeries>> {
        self.traces.iter().map(series).collect()
    }

    /// Replicate means of the residual, step, distance and `ξ`. `δ` and `ε`
    /// are common to all replicates.
    pub fn mean_series(&self) -> Result<MeanSeries> {
        let paths = self.path_series()?;
        let base = &paths[0];
        let mut points = Vec::with_capacity(base.len());
        let mut xi_se = Vec::with_capacity(base.len());
        for (k, p0) in base.points.iter().enumerate() {
            let pick = |f: &dyn Fn(&LyapunovPoint) -> f64| -> Vec<f64> {
                paths.iter().map(|s| f(&s.points[k])).collect()
            };
            let (xi, se) = mean_se(&pick(&|p| p.xi));
            let dist_sq = if p0.dist_sq.is_some() {
                Some(mean_se(&pick(&|p| p.dist_sq.unwrap_or(f64::NAN))).0)
            } else {
                None
            };
            points.push(LyapunovPoint {
                k: p0.k,
                residual: mean_se(&pick(&|p| p.residual)).0,
                step_norm_sq: mean_se(&pick(&|p| p.step_norm_sq)).0,
                dist_sq,
                delta: p0.delta.clone(),
                xi,
                epsilon: p0.epsilon,
            });
            xi_se.push(se);
        }
        Ok(MeanSeries {
            series: LyapunovSeries {
                points,
                ..base.clone()
            },
            xi_se,
        })
    }

    /// Per-`k` descent inequality on replicate means, with the standard
    /// error of the paired per-replicate slack.
    pub fn descent_rows(&self) -> Result<Vec<MeanDescentRow>> {
        let per: Vec<(Vec<f64>, f64)> = self.traces.iter().map(potentials).collect::<Result<_>>()?;
        let factor = per[0].1;
        let mut rows = Vec::with_capacity(self.steps().saturating_sub(1));
        for k in 0..self.steps().saturating_sub(1) {
            let mut lhs = Vec::with_capacity(self.len());
            let mut rhs = Vec::with_capacity(self.len());
            let mut slack = Vec::with_capacity(self.len());
            for (t, (pots, _)) in self.traces.iter().zip(&per) {
                let l = pots[k] - pots[k + 1];
                let r = factor * t.records[k + 1].step_norm_sq;
                lhs.push(l);
                rhs.push(r);
                slack.push(l - r);
            }
            let (slack_mean, se) = mean_se(&slack);
            rows.push(MeanDescentRow {
                k,
                lhs: mean_se(&lhs).0,
                rhs: mean_se(&rhs).0,
                slack: slack_mean,
                se,
            });
        }
        Ok(rows)
    }

    /// Rows where the mean slack is below `−3·SE − 1e-10·(1 + |f(x⁰)|)`.
    pub fn check_descent(&self) -> Result<Vec<MeanDescentRow>> {
        let tol = self.descent_tol();
        Ok(self
            .descent_rows()?
            .into_iter()
            .filter(|r| r.slack < -super::SE_MULTIPLIER * r.se - tol)
            .collect())
    }

    fn scale(&self) -> f64 {
        let v: Vec<f64> = self.traces.iter().map(|t| t.records[0].value.abs()).collect();
        1.0 + mean_se(&v).0
    }

    /// `mean(ξ̄_{k+1} − ω·ξ̄_k)` with its standard error, over `k` whose mean
    /// `ξ̄_k` is above the floating floor.
    pub fn contraction_rows(&self, omega: f64) -> Result<Vec<ContractionRow>> {
        let paths = self.path_series()?;
        let floor = self.floor();
        let mut out = Vec::new();
        for k in 0..self.steps().saturating_sub(1) {
            let now: Vec<f64> = paths.iter().map(|s| s.points[k].xi).collect();
            let xi_mean = mean_se(&now).0;
            if xi_mean <= floor {
                continue;
            }
            let excess: Vec<f64> = paths
                .iter()
                .map(|s| s.points[k + 1].xi - omega * s.points[k].xi)
                .collect();
            let (mean, se) = mean_se(&excess);
            out.push(ContractionRow {
                k,
                excess: mean,
                se,
                xi_mean,
            });
        }
        Ok(out)
    }

    /// Rows where `mean(ξ̄_{k+1} − ω·ξ̄_k)` exceeds three standard errors plus
    /// the floating floor.
    pub fn check_contraction(&self, omega: f64) -> Result<Vec<ContractionRow>> {
        let floor = self.floor();
        Ok(self
            .contraction_rows(omega)?
            .into_iter()
            .filter(|r| r.excess > super::SE_MULTIPLIER * r.se + floor)
            .collect())
    }

    /// `10·eps·(1 + mean|f(x⁰)|)`.
    pub fn floor(&self) -> f64 {
        super::FLOOR_FACTOR * f64::EPSILON * self.scale()
    }

    /// The descent tolerance `1e-10·(1 + mean|f(x⁰)|)`.
    pub fn descent_tol(&self) -> f64 {
        super::DESCENT_TOL * self.scale()
    }

    /// `√k · min_{i≤k} mean‖∇f(x^i)‖`, flagging increases after `burn_in`.
    pub fn gradient_trend(&self, burn_in: usize) -> GradientTrend {
        let means: Vec<f64> = self
            .column(|t, k| t.records[k].grad_norm)
            .iter()
            .map(|col| mean_se(col).0)
            .collect();
        let mut running = f64::INFINITY;
        let values: Vec<f64> = means
            .iter()
            .enumerate()
            .map(|(k, &g)| {
                running = running.min(g);
                (k as f64).sqrt() * running
            })
            .collect();
        let increases = (burn_in + 1..values.len())
            .filter(|&k| values[k] > values[k - 1])
            .collect();
        GradientTrend {
            values,
            burn_in,
            increases,
        }
    }

    /// Replicate mean and standard error of a per-record quantity.
    pub fn mean_curve(&self, f: impl Fn(&crate::solvers::TraceRecord) -> f64) -> Vec<(f64, f64)> {
        self.column(|t, k| f(&t.records[k]))
            .iter()
            .map(|col| mean_se(col))
            .collect()
    }
}
