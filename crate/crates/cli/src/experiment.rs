use std::fmt::Write as _;

use heavyball::decentralized::{
    param_bounds, run_decentralized, split_dataset, DecentralizedProblem, Network, EQUIVALENCE_TOL,
};
use heavyball::lyapunov::{
    descent_rows, diagnostics_csv, ell, error_bound_rows, fit_geometric_rate, rate_report, series,
    summary_text, DescentRow, ErrorBoundRow, LyapunovSeries, RateReport, Replicates, Verdict, DESCENT_TOL,
    SE_MULTIPLIER,
};
use heavyball::problems::{generate_data, make_problem};
use heavyball::rng::SeededRng;
use heavyball::solvers::{run, unit_step_c, TRACE_HEADER};
use heavyball::{DVector, Dataset, IterateTrace, MomentumSchedule, Problem, RegressionSpec, SolverConfig};
use rayon::prelude::*;

use crate::artifacts::meta_text;
use crate::config::{ExperimentConfig, InitialPoint, ProblemKind, SolverKind, StepChoice};
use crate::{CliError, Result};

/// `√k·min mean‖∇f‖` is only required to decrease after this many records.
pub const GRADIENT_BURN_IN: usize = 50;

/// Stream offset for a Gaussian starting point, keeping it independent of
/// the data drawn from the same seed.
const X0_STREAM: u64 = 0x5851_f42d_4c95_7f2d;

/// Result of one momentum value.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub beta: f64,
    pub verdicts: Vec<Verdict>,
    /// Last residual (replicate mean for the stochastic scheme).
    pub final_residual: f64,
    /// Geometric rate fitted to `ξ_k` above the floating floor.
    pub fitted_rate: Option<f64>,
    /// `(k, residual)` per record.
    pub curve: Vec<(usize, f64)>,
    /// File name and contents.
    pub files: Vec<(String, String)>,
}

impl CellOutcome {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub dataset: Dataset,
    pub cells: Vec<CellOutcome>,
    /// Gated ordering verdict of full and cyclic sweeps.
    pub ordering: Option<Verdict>,
    /// Whether final residuals strictly decrease in `β`, for any sweep.
    pub ordered: Option<bool>,
    /// `(max − min)/max` of the final residuals of a sweep.
    pub spread: Option<f64>,
}

impl ExperimentOutcome {
    pub fn verdicts(&self) -> Vec<Verdict> {
        self.cells
            .iter()
            .flat_map(|c| c.verdicts.iter().cloned())
            .chain(self.ordering.clone())
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.verdicts().iter().all(|v| v.pass)
    }
}

/// Runs every cell and writes the artifacts under `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let outcome = run_cells(cfg)?;
    crate::artifacts::write_outcome(&cfg.out, &outcome)?;
    Ok(outcome)
}

/// Runs every cell without touching the disk. Cells run concurrently.
pub fn run_cells(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let data = generate_data(cfg.n, cfg.m, cfg.data, cfg.seed)?;
    let data = match cfg.problem {
        ProblemKind::Linreg => data,
        ProblemKind::Logreg => data.into_classification(),
    };
    let spec = regression_spec(cfg);
    let cells = if cfg.solver == SolverKind::Decentralized {
        let network = match &cfg.network {
            Some(path) => Network::load(path)?,
            None => Network::path(5)?,
        };
        cfg.betas
            .par_iter()
            .map(|&beta| decentralized_cell(cfg, &data, spec, &network, beta))
            .collect::<Result<Vec<_>>>()?
    } else {
        let problem = make_problem(&data, spec)?.with_blocks(cfg.blocks())?;
        cfg.betas
            .par_iter()
            .map(|&beta| match cfg.solver {
                SolverKind::Stochastic => stochastic_cell(cfg, &problem, beta),
                _ => deterministic_cell(cfg, &problem, beta),
            })
            .collect::<Result<Vec<_>>>()?
    };

    let (mut ordering, mut ordered, mut spread) = (None, None, None);
    if cells.len() > 1 {
        let mut finals: Vec<(f64, f64)> = cells.iter().map(|c| (c.beta, c.final_residual)).collect();
        finals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let worst = finals
            .windows(2)
            .map(|w| w[1].1 / w[0].1)
            .fold(f64::NEG_INFINITY, f64::max);
        let strictly = finals.windows(2).all(|w| w[1].1 < w[0].1);
        ordered = Some(strictly);
        let max = finals.iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
        let min = finals.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
        spread = Some(if max > 0.0 { (max - min) / max } else { 0.0 });
        if matches!(cfg.solver, SolverKind::Hb | SolverKind::Cyclic) {
            ordering = Some(Verdict::new("ORDERING", strictly, worst, 1.0));
        }
    }
    Ok(ExperimentOutcome {
        config: cfg.clone(),
        dataset: data,
        cells,
        ordering,
        ordered,
        spread,
    })
}

fn regression_spec(cfg: &ExperimentConfig) -> RegressionSpec {
    match cfg.problem {
        ProblemKind::Linreg => RegressionSpec::Linear,
        ProblemKind::Logreg => RegressionSpec::Logistic { lambda: cfg.lambda },
    }
}

fn initial_point(cfg: &ExperimentConfig, dim: usize) -> Option<DVector<f64>> {
    match cfg.x0 {
        InitialPoint::Zero => None,
        InitialPoint::Gaussian => {
            let mut rng = SeededRng::new(cfg.seed ^ X0_STREAM);
            Some(DVector::from_fn(dim, |_, _| rng.standard_normal()))
        }
    }
}

fn solver_config(cfg: &ExperimentConfig, problem: &Problem, beta: f64) -> Result<SolverConfig> {
    let rule = cfg.solver.rule();
    let schedule = match cfg.theta {
        Some(theta) => MomentumSchedule::power_decay(beta, theta),
        None => MomentumSchedule::constant(beta),
    };
    let c = match cfg.c {
        StepChoice::Paper => unit_step_c(rule, beta, problem.block_count())?,
        StepChoice::Fixed(c) => c,
    };
    let mut sc = SolverConfig::new(rule, schedule, c, cfg.iters).with_seed(cfg.seed);
    if let Some(x0) = initial_point(cfg, problem.dimension()) {
        sc = sc.with_x0(x0);
    }
    Ok(sc)
}

/// Worst shortfall `max_k (rhs − lhs)` of a descent inequality against `tol`.
fn descent_verdict(label: &str, shortfalls: impl Iterator<Item = f64>, tol: f64) -> Verdict {
    let worst = shortfalls.fold(f64::NEG_INFINITY, f64::max);
    let worst = if worst == f64::NEG_INFINITY { 0.0 } else { worst };
    Verdict::new(label, worst <= tol, worst, tol)
}

/// `max_k (ξ_k² − ε_k D_k(ξ_k − ξ_{k+1}))/(ε_k D_k)`, the rounding slack the
/// error bound needs, against the allowed `1e-10·(1 + |f(x⁰)|)`.
fn error_bound_verdict(label: &str, rows: &[ErrorBoundRow], scale: f64) -> Verdict {
    let tol = DESCENT_TOL * scale;
    let pass = rows.iter().all(|r| r.lhs <= r.rhs + r.weight * tol);
    let worst = rows
        .iter()
        .map(|r| {
            if r.weight > 0.0 {
                (r.lhs - r.rhs) / r.weight
            } else if r.lhs > r.rhs {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let worst = if worst == f64::NEG_INFINITY { 0.0 } else { worst };
    Verdict::new(label, pass, worst, tol)
}

fn sublinear_verdict(label: &str, report: &RateReport) -> Verdict {
    Verdict::new(
        label,
        report.sublinear_holds,
        report.sublinear_constant,
        report.sublinear_bound,
    )
}

fn linear_verdict(label: &str, report: &RateReport) -> Option<Verdict> {
    report.linear.as_ref().map(|lin| {
        let empirical = match (lin.max_ratio, lin.fitted_rate) {
            (Some(r), Some(f)) => r.max(f),
            (Some(r), None) => r,
            _ => f64::NAN,
        };
        Verdict::new(label, lin.holds, empirical, lin.omega)
    })
}

fn fitted_rate(s: &LyapunovSeries) -> Option<f64> {
    let floor = s.floor();
    let (ks, xs): (Vec<usize>, Vec<f64>) = s
        .points
        .iter()
        .filter(|p| p.xi > floor)
        .map(|p| (p.k, p.xi))
        .unzip();
    fit_geometric_rate(&ks, &xs)
}

fn plot_csv(curve: &[(usize, f64)]) -> String {
    let mut out = String::from("k,residual\n");
    for (k, r) in curve {
        let _ = writeln!(out, "{k},{r}");
    }
    out
}

fn deterministic_cell(cfg: &ExperimentConfig, problem: &Problem, beta: f64) -> Result<CellOutcome> {
    let sc = solver_config(cfg, problem, beta)?;
    let trace = run(problem, &sc)?;
    let s = series(&trace)?;
    let rows = descent_rows(&trace)?;
    let labels = match cfg.solver {
        SolverKind::Cyclic => ["LEMMA_3", "LEMMA_4", "THEOREM_3", "THEOREM_4"],
        _ => ["LEMMA_1", "LEMMA_2", "THEOREM_1", "THEOREM_2"],
    };
    let mut verdicts = vec![descent_verdict(
        labels[0],
        rows.iter().map(|r| -r.slack),
        DESCENT_TOL * s.scale,
    )];
    verdicts.push(error_bound_verdict(labels[1], &error_bound_rows(&s)?, s.scale));
    let report = rate_report(&s, problem.rsc_constant())?;
    verdicts.push(sublinear_verdict(labels[2], &report));
    verdicts.extend(linear_verdict(labels[3], &report));

    let curve = residual_curve(&trace);
    let files = vec![
        ("trace.csv".to_string(), trace.to_csv()),
        ("trace_meta.txt".to_string(), meta_text(&trace.meta())),
        ("diagnostics.csv".to_string(), diagnostics_csv(&s, &rows)),
        ("summary.txt".to_string(), summary_text(&verdicts)),
        ("plot.csv".to_string(), plot_csv(&curve)),
    ];
    Ok(CellOutcome {
        beta,
        final_residual: curve.last().map_or(f64::NAN, |p| p.1),
        fitted_rate: fitted_rate(&s),
        verdicts,
        curve,
        files,
    })
}

fn residual_curve(trace: &IterateTrace) -> Vec<(usize, f64)> {
    trace
        .records
        .iter()
        .map(|r| (r.k, r.residual.unwrap_or(f64::NAN)))
        .collect()
}

fn stochastic_cell(cfg: &ExperimentConfig, problem: &Problem, beta: f64) -> Result<CellOutcome> {
    let sc = solver_config(cfg, problem, beta)?;
    let traces = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| run(problem, &sc.clone().with_seed(cfg.seed.wrapping_add(r))))
        .collect::<heavyball::Result<Vec<_>>>()?;
    let reps = Replicates::new(traces)?;
    let mean = reps.mean_series()?;
    let mean_rows = reps.descent_rows()?;

    let mut verdicts = vec![descent_verdict(
        "LEMMA_5",
        mean_rows.iter().map(|r| -r.slack - SE_MULTIPLIER * r.se),
        reps.descent_tol(),
    )];
    verdicts.push(error_bound_verdict(
        "LEMMA_6",
        &error_bound_rows(&mean.series)?,
        mean.series.scale,
    ));

    let trend = reps.gradient_trend(GRADIENT_BURN_IN);
    let worst_step = (trend.burn_in + 1..trend.values.len())
        .map(|k| trend.values[k] / trend.values[k - 1])
        .fold(f64::NEG_INFINITY, f64::max);
    verdicts.push(Verdict::new("THEOREM_5", trend.holds(), worst_step, 1.0));

    let report = rate_report(&mean.series, None)?;
    verdicts.push(sublinear_verdict("THEOREM_6", &report));
    if let Some(nu) = problem.rsc_constant() {
        let l = ell(&mean.series, nu);
        let omega = l / (1.0 + l);
        let floor = reps.floor();
        let worst = reps
            .contraction_rows(omega)?
            .iter()
            .map(|r| omega + (r.excess - SE_MULTIPLIER * r.se - floor) / r.xi_mean)
            .fold(f64::NEG_INFINITY, f64::max);
        let pass = reps.check_contraction(omega)?.is_empty();
        verdicts.push(Verdict::new("THEOREM_7", pass, worst, omega));
    }

    let residual = reps.mean_curve(|r| r.residual.unwrap_or(f64::NAN));
    let grad = reps.mean_curve(|r| r.grad_norm);
    let curve: Vec<(usize, f64)> = mean
        .series
        .points
        .iter()
        .zip(&residual)
        .map(|(p, r)| (p.k, r.0))
        .collect();

    let mut mean_csv = String::from("k,residual,residual_se,xi,xi_se,grad_norm,grad_norm_se\n");
    for (i, p) in mean.series.points.iter().enumerate() {
        let _ = writeln!(
            mean_csv,
            "{},{},{},{},{},{},{}",
            p.k, residual[i].0, residual[i].1, p.xi, mean.xi_se[i], grad[i].0, grad[i].1
        );
    }
    let mut replicates_csv = format!("replicate,{TRACE_HEADER}\n");
    for (r, t) in reps.traces().iter().enumerate() {
        for line in t.to_csv().lines().skip(1) {
            let _ = writeln!(replicates_csv, "{r},{line}");
        }
    }
    let rows: Vec<DescentRow> = mean_rows
        .iter()
        .map(|r| DescentRow {
            k: r.k,
            lhs: r.lhs,
            rhs: r.rhs,
            slack: r.slack,
        })
        .collect();
    let files = vec![
        ("trace.csv".to_string(), reps.traces()[0].to_csv()),
        ("trace_meta.txt".to_string(), meta_text(&reps.traces()[0].meta())),
        (
            "diagnostics.csv".to_string(),
            diagnostics_csv(&mean.series, &rows),
        ),
        ("summary.txt".to_string(), summary_text(&verdicts)),
        ("plot.csv".to_string(), plot_csv(&curve)),
        ("mean.csv".to_string(), mean_csv),
        ("replicates.csv".to_string(), replicates_csv),
    ];
    Ok(CellOutcome {
        beta,
        final_residual: curve.last().map_or(f64::NAN, |p| p.1),
        fitted_rate: fitted_rate(&mean.series),
        verdicts,
        curve,
        files,
    })
}

fn decentralized_cell(
    cfg: &ExperimentConfig,
    data: &Dataset,
    spec: RegressionSpec,
    network: &Network,
    beta: f64,
) -> Result<CellOutcome> {
    let locals = split_dataset(data, network.node_count(), spec)?;
    let ls: Vec<f64> = locals.iter().map(|f| f.lipschitz()).collect();
    let bounds = param_bounds(network, &ls)?;
    let alpha = cfg.alpha.unwrap_or_else(|| 0.9 * bounds.alpha_max(beta));
    bounds
        .check(beta, alpha)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let dp = DecentralizedProblem::new(network.clone(), locals, alpha)?;
    let x0 = initial_point(cfg, dp.problem().dimension());
    let run = run_decentralized(&dp, beta, cfg.iters, x0)?;

    let s = series(&run.trace)?;
    let rows = descent_rows(&run.trace)?;
    let gap = run.max_equivalence_gap();
    let mut verdicts = vec![Verdict::new(
        "EQUIVALENCE",
        gap <= EQUIVALENCE_TOL,
        gap,
        EQUIVALENCE_TOL,
    )];
    verdicts.push(descent_verdict(
        "LEMMA_1",
        rows.iter().map(|r| -r.slack),
        DESCENT_TOL * s.scale,
    ));
    let report = rate_report(&s, None)?;
    verdicts.push(sublinear_verdict("COROLLARY_2", &report));

    let curve = residual_curve(&run.trace);
    let files = vec![
        ("trace.csv".to_string(), run.to_csv()),
        ("diagnostics.csv".to_string(), diagnostics_csv(&s, &rows)),
        ("summary.txt".to_string(), summary_text(&verdicts)),
        ("plot.csv".to_string(), plot_csv(&curve)),
    ];
    Ok(CellOutcome {
        beta,
        final_residual: curve.last().map_or(f64::NAN, |p| p.1),
        fitted_rate: fitted_rate(&s),
        verdicts,
        curve,
        files,
    })
}
