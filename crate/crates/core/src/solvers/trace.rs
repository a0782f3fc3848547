//! Iterate traces and their CSV form.
//!
//! Columns: `k,f,residual,step_norm_sq,grad_norm,beta,gamma,block`.
//! `residual` is empty when the minimum is unknown and `block` is empty
//! outside the stochastic scheme. Cyclic traces carry per-block values in
//! `step_norm_sq`, `beta` and `gamma` as `;`-separated lists (block order).
//! Floats use Rust's shortest round-trip formatting, so parsing a written
//! trace recovers every recorded value exactly.

use std::fmt::Write as _;

use nalgebra::DVector;

use super::UpdateRule;
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "k,f,residual,step_norm_sq,grad_norm,beta,gamma,block";

/// State of a run at iteration `k`, together with the parameters of the
/// step taken from `x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `f(x^k)`
    pub value: f64,
    /// `f(x^k) − min f`, when the minimum is known.
    pub residual: Option<f64>,
    /// `‖x^k − x^{k−1}‖²`
    pub step_norm_sq: f64,
    /// `‖∇f(x^k)‖`
    pub grad_norm: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Block `i_k` updated from `x^k` (stochastic scheme; `None` on the
    /// final record).
    pub block: Option<usize>,
    /// Cyclic scheme only: per-block `‖x_i^k − x_i^{k−1}‖²`, `β_{k,i}`, `γ_{k,i}`.
    pub block_step_sq: Vec<f64>,
    pub block_betas: Vec<f64>,
    pub block_gammas: Vec<f64>,
    /// `‖x^k − proj_{arg min f}(x^k)‖²`, when the projection is available.
    pub dist_sq: Option<f64>,
    pub iterate: Option<DVector<f64>>,
}

impl TraceRecord {
    pub(crate) fn new(k: usize, value: f64, step_norm_sq: f64, grad_norm: f64) -> Self {
        Self {
            k,
            value,
            residual: None,
            step_norm_sq,
            grad_norm,
            beta: 0.0,
            gamma: 0.0,
            block: None,
            block_step_sq: Vec::new(),
            block_betas: Vec::new(),
            block_gammas: Vec::new(),
            dist_sq: None,
            iterate: None,
        }
    }
}

/// Run output plus the constants the diagnostics need.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub rule: UpdateRule,
    pub c: f64,
    pub lipschitz: f64,
    pub lipschitz_blocks: Vec<f64>,
    pub seed: u64,
    pub records: Vec<TraceRecord>,
}

/// Run constants that are not part of the CSV columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub rule: UpdateRule,
    pub c: f64,
    pub lipschitz: f64,
    pub lipschitz_blocks: Vec<f64>,
    pub seed: u64,
}

impl IterateTrace {
    pub fn blocks(&self) -> usize {
        self.lipschitz_blocks.len()
    }

    pub fn meta(&self) -> TraceMeta {
        TraceMeta {
            rule: self.rule,
            c: self.c,
            lipschitz: self.lipschitz,
            lipschitz_blocks: self.lipschitz_blocks.clone(),
            seed: self.seed,
        }
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        let cyclic = self.rule == UpdateRule::Cyclic;
        for r in &self.records {
            let residual = r.residual.map(|v| v.to_string()).unwrap_or_default();
            let block = r.block.map(|b| b.to_string()).unwrap_or_default();
            let (step, beta, gamma) = if cyclic {
                (
                    join(&r.block_step_sq),
                    join(&r.block_betas),
                    join(&r.block_gammas),
                )
            } else {
                (
                    r.step_norm_sq.to_string(),
                    r.beta.to_string(),
                    r.gamma.to_string(),
                )
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.k, r.value, residual, step, r.grad_norm, beta, gamma, block
            );
        }
        out
    }

    pub fn from_csv(text: &str, meta: TraceMeta) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            _ => return Err(Error::parse(1, format!("expected header `{TRACE_HEADER}`"))),
        }
        let cyclic = meta.rule == UpdateRule::Cyclic;
        let mut records = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 8 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 8 columns, found {}", cols.len()),
                ));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(line_no, format!("`{s}`: {e}")))
            };
            let list = |s: &str| -> Result<Vec<f64>> { s.split(';').map(num).collect() };
            let k = cols[0]
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
            let mut r = TraceRecord::new(k, num(cols[1])?, 0.0, num(cols[4])?);
            r.residual = if cols[2].trim().is_empty() {
                None
            } else {
                Some(num(cols[2])?)
            };
            if cyclic {
                r.block_step_sq = list(cols[3])?;
                r.block_betas = list(cols[5])?;
                r.block_gammas = list(cols[6])?;
                r.step_norm_sq = r.block_step_sq.iter().sum();
                r.beta = r.block_betas.first().copied().unwrap_or(0.0);
                r.gamma = r.block_gammas.first().copied().unwrap_or(0.0);
            } else {
                r.step_norm_sq = num(cols[3])?;
                r.beta = num(cols[5])?;
                r.gamma = num(cols[6])?;
            }
            r.block = if cols[7].trim().is_empty() {
                None
            } else {
                Some(
                    cols[7]
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(line_no, "bad block index"))?,
                )
            };
            records.push(r);
        }
        Ok(Self {
            rule: meta.rule,
            c: meta.c,
            lipschitz: meta.lipschitz,
            lipschitz_blocks: meta.lipschitz_blocks,
            seed: meta.seed,
            records,
        })
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}
