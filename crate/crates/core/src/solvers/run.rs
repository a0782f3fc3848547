use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use super::step::momentum_update;
use super::{step_size_full, step_size_stochastic, IterateTrace, MomentumSchedule, TraceRecord};
use crate::error::{Error, Result};
use crate::objective::Problem;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateRule {
    Full,
    Cyclic,
    Stochastic,
}

impl fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdateRule::Full => "full",
            UpdateRule::Cyclic => "cyclic",
            UpdateRule::Stochastic => "stochastic",
        })
    }
}

impl FromStr for UpdateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" | "hb" => Ok(UpdateRule::Full),
            "cyclic" => Ok(UpdateRule::Cyclic),
            "stochastic" => Ok(UpdateRule::Stochastic),
            other => Err(Error::param("rule", format!("unknown update rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rule: UpdateRule,
    pub schedule: MomentumSchedule,
    /// Per-block schedules for the cyclic scheme; `None` applies `schedule`
    /// to every block.
    pub block_schedules: Option<Vec<MomentumSchedule>>,
    pub c: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub record_every: usize,
    pub keep_iterates: bool,
    pub x0: Option<DVector<f64>>,
}

impl SolverConfig {
    pub fn new(rule: UpdateRule, schedule: MomentumSchedule, c: f64, max_iters: usize) -> Self {
        Self {
            rule,
            schedule,
            block_schedules: None,
            c,
            max_iters,
            seed: 0,
            record_every: 1,
            keep_iterates: false,
            x0: None,
        }
    }

    /// Constant `β` with `c` chosen so the step size is exactly `1/L`
    /// (`1/L_i` per block for the cyclic scheme). Needs `c < 1`, that is
    /// `β < ½` (full, cyclic) or `β < √m/2` (stochastic over `m` blocks).
    pub fn unit_step(rule: UpdateRule, beta: f64, blocks: usize, max_iters: usize) -> Result<Self> {
        let c = unit_step_c(rule, beta, blocks)?;
        Ok(Self::new(rule, MomentumSchedule::constant(beta), c, max_iters))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_x0(mut self, x0: DVector<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn keeping_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    fn records(&self, k: usize) -> bool {
        k.is_multiple_of(self.record_every) || k == self.max_iters
    }

    fn validate(&self, problem: &Problem, expected: UpdateRule) -> Result<DVector<f64>> {
        if self.rule != expected {
            return Err(Error::param(
                "rule",
                format!("config is for the {} scheme, runner is {expected}", self.rule),
            ));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::param("c", format!("{} not in (0, 1)", self.c)));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be positive"));
        }
        let upper = match self.rule {
            UpdateRule::Stochastic => (problem.block_count() as f64).sqrt(),
            _ => 1.0,
        };
        self.schedule.validate(upper)?;
        if let Some(per_block) = &self.block_schedules {
            if self.rule != UpdateRule::Cyclic {
                return Err(Error::param(
                    "block_schedules",
                    "only the cyclic scheme takes per-block schedules",
                ));
            }
            if per_block.len() != problem.block_count() {
                return Err(Error::DimensionMismatch {
                    expected: problem.block_count(),
                    found: per_block.len(),
                });
            }
            for s in per_block {
                s.validate(upper)?;
            }
        }
        let x0 = self
            .x0
            .clone()
            .unwrap_or_else(|| DVector::zeros(problem.dimension()));
        problem.check_point(&x0)?;
        Ok(x0)
    }
}

/// `c` giving a unit step (`γ = 1/L`) at `β` under `rule`: `1/(2(1 − β))`,
/// or `1/(2(1 − β/√m))` for the stochastic scheme over `m` blocks.
pub fn unit_step_c(rule: UpdateRule, beta: f64, blocks: usize) -> Result<f64> {
    let effective = match rule {
        UpdateRule::Stochastic => beta / (blocks as f64).sqrt(),
        _ => beta,
    };
    let c = 1.0 / (2.0 * (1.0 - effective));
    if !(effective >= 0.0 && c < 1.0) {
        return Err(Error::param(
            "beta",
            format!("a unit step needs 2(1 − β) > 1 (effective β = {effective})"),
        ));
    }
    Ok(c)
}

pub fn run(problem: &Problem, cfg: &SolverConfig) -> Result<IterateTrace> {
    match cfg.rule {
        UpdateRule::Full => run_heavy_ball(problem, cfg),
        UpdateRule::Cyclic => run_cyclic(problem, cfg),
        UpdateRule::Stochastic => run_stochastic(problem, cfg),
    }
}

struct Recorder<'a> {
    problem: &'a Problem,
    keep_iterates: bool,
    guard: Option<f64>,
}

impl<'a> Recorder<'a> {
    fn new(problem: &'a Problem, keep_iterates: bool) -> Self {
        Self {
            problem,
            keep_iterates,
            guard: None,
        }
    }

    fn check(&mut self, k: usize, value: f64) -> Result<()> {
        let guard = *self
            .guard
            .get_or_insert(super::DIVERGENCE_FACTOR * value.abs().max(1.0));
        if !value.is_finite() || value > guard {
            return Err(Error::Divergence {
                k,
                value,
                threshold: guard,
            });
        }
        Ok(())
    }

    fn record(
        &mut self,
        k: usize,
        x: &DVector<f64>,
        x_prev: &DVector<f64>,
        value: f64,
        grad: &DVector<f64>,
    ) -> Result<TraceRecord> {
        self.check(k, value)?;
        let mut r = TraceRecord::new(k, value, (x - x_prev).norm_squared(), grad.norm());
        r.residual = self.problem.optimality_gap(x);
        r.dist_sq = self.problem.distance_sq_to_argmin(x);
        if self.keep_iterates {
            r.iterate = Some(x.clone());
        }
        Ok(r)
    }
}

fn new_trace(problem: &Problem, cfg: &SolverConfig) -> IterateTrace {
    IterateTrace {
        rule: cfg.rule,
        c: cfg.c,
        lipschitz: problem.lipschitz_global(),
        lipschitz_blocks: problem.lipschitz_blocks().to_vec(),
        seed: cfg.seed,
        records: Vec::with_capacity(cfg.max_iters / cfg.record_every + 2),
    }
}

/// Full-gradient Heavy-ball with `γ_k = 2(1 − β_k)c/L`.
pub fn run_heavy_ball(problem: &Problem, cfg: &SolverConfig) -> Result<IterateTrace> {
    let x0 = cfg.validate(problem, UpdateRule::Full)?;
    let objective = problem.objective();
    let lipschitz = problem.lipschitz_global();
    let mut trace = new_trace(problem, cfg);
    let mut recorder = Recorder::new(problem, cfg.keep_iterates);

    let mut x_prev = x0.clone();
    let mut x = x0;
    let mut x_next = DVector::zeros(x.len());
    for k in 0..=cfg.max_iters {
        let (value, grad) = objective.value_and_gradient(&x);
        let beta = cfg.schedule.beta_at(k);
        let gamma = step_size_full(beta, cfg.c, lipschitz)?;
        if cfg.records(k) {
            let mut r = recorder.record(k, &x, &x_prev, value, &grad)?;
            r.beta = beta;
            r.gamma = gamma;
            trace.records.push(r);
        } else {
            recorder.check(k, value)?;
        }
        if k == cfg.max_iters {
            break;
        }
        momentum_update(
            x.as_view(),
            x_prev.as_view(),
            grad.as_view(),
            gamma,
            beta,
            x_next.as_view_mut(),
        );
        std::mem::swap(&mut x_prev, &mut x);
        std::mem::swap(&mut x, &mut x_next);
    }
    Ok(trace)
}

/// Cyclic block-coordinate Heavy-ball: within a sweep, block `i` moves with
/// `γ_{k,i} = 2(1 − β_{k,i})c/L_i` using the partial gradient at the point
/// whose earlier blocks are already updated. One record per sweep.
pub fn run_cyclic(problem: &Problem, cfg: &SolverConfig) -> Result<IterateTrace> {
    let x0 = cfg.validate(problem, UpdateRule::Cyclic)?;
    let objective = problem.objective();
    let partition = problem.partition();
    let block_l = problem.lipschitz_blocks();
    let schedule_for =
        |i: usize| -> MomentumSchedule { cfg.block_schedules.as_ref().map_or(cfg.schedule, |s| s[i]) };
    let mut trace = new_trace(problem, cfg);
    let mut recorder = Recorder::new(problem, cfg.keep_iterates);

    let mut x_prev = x0.clone();
    let mut x = x0;
    for k in 0..=cfg.max_iters {
        let betas: Vec<f64> = (0..partition.len()).map(|i| schedule_for(i).beta_at(k)).collect();
        let gammas = betas
            .iter()
            .zip(block_l)
            .map(|(&b, &l)| step_size_full(b, cfg.c, l))
            .collect::<Result<Vec<f64>>>()?;
        if cfg.records(k) {
            let (value, grad) = objective.value_and_gradient(&x);
            let mut r = recorder.record(k, &x, &x_prev, value, &grad)?;
            r.block_step_sq = partition
                .ranges()
                .iter()
                .map(|rg| (x.rows_range(rg.clone()) - x_prev.rows_range(rg.clone())).norm_squared())
                .collect();
            r.step_norm_sq = r.block_step_sq.iter().sum();
            r.beta = betas[0];
            r.gamma = gammas[0];
            r.block_betas = betas.clone();
            r.block_gammas = gammas.clone();
            trace.records.push(r);
        } else {
            recorder.check(k, objective.value(&x))?;
        }
        if k == cfg.max_iters {
            break;
        }
        let mut x_next = x.clone();
        for (i, range) in partition.ranges().iter().enumerate() {
            let g = objective.block_gradient(&x_next, range.clone());
            let xi = x.rows_range(range.clone());
            let xpi = x_prev.rows_range(range.clone());
            let out = x_next.rows_range_mut(range.clone());
            momentum_update(xi, xpi, g.as_view(), gammas[i], betas[i], out);
        }
        x_prev = std::mem::replace(&mut x, x_next);
    }
    Ok(trace)
}

/// Stochastic block-coordinate Heavy-ball: block `i_k` is drawn uniformly
/// from the run's [`SeededRng`] and moved with `γ_k = 2(1 − β_k/√m)c/L`;
/// all other blocks are copied. One record per iteration.
pub fn run_stochastic(problem: &Problem, cfg: &SolverConfig) -> Result<IterateTrace> {
    let x0 = cfg.validate(problem, UpdateRule::Stochastic)?;
    let objective = problem.objective();
    let partition = problem.partition();
    let m = partition.len();
    let lipschitz = problem.lipschitz_global();
    let mut rng = SeededRng::new(cfg.seed);
    let mut trace = new_trace(problem, cfg);
    let mut recorder = Recorder::new(problem, cfg.keep_iterates);

    let mut x_prev = x0.clone();
    let mut x = x0;
    for k in 0..=cfg.max_iters {
        let beta = cfg.schedule.beta_at(k);
        let gamma = step_size_stochastic(beta, cfg.c, lipschitz, m)?;
        let last = k == cfg.max_iters;
        let block = (!last).then(|| rng.index(m));
        let mut full_grad = None;
        if cfg.records(k) {
            let (value, grad) = objective.value_and_gradient(&x);
            let mut r = recorder.record(k, &x, &x_prev, value, &grad)?;
            r.beta = beta;
            r.gamma = gamma;
            r.block = block;
            trace.records.push(r);
            full_grad = Some(grad);
        }
        let Some(i) = block else { break };
        let range = partition.range(i)?;
        let g = match &full_grad {
            Some(grad) => grad.rows_range(range.clone()).into_owned(),
            None => objective.block_gradient(&x, range.clone()),
        };
        let mut x_next = x.clone();
        momentum_update(
            x.rows_range(range.clone()),
            x_prev.rows_range(range.clone()),
            g.as_view(),
            gamma,
            beta,
            x_next.rows_range_mut(range),
        );
        x_prev = std::mem::replace(&mut x, x_next);
    }
    Ok(trace)
}
