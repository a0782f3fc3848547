use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use heavyball::lyapunov::summary_text;
use heavyball::solvers::TraceMeta;

use crate::config::SolverKind;
use crate::experiment::ExperimentOutcome;
use crate::{CliError, Result};

/// Run constants that `trace.csv` does not carry, as `key = value` lines.
pub fn meta_text(meta: &TraceMeta) -> String {
    let blocks = meta
        .lipschitz_blocks
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(";");
    format!(
        "rule = {}\nc = {}\nlipschitz = {}\nlipschitz_blocks = {blocks}\nseed = {}\n",
        meta.rule, meta.c, meta.lipschitz, meta.seed
    )
}

pub fn parse_meta(text: &str) -> Result<TraceMeta> {
    let get = |key: &str| -> Result<String> {
        text.lines()
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == key)
            .map(|(_, v)| v.trim().to_string())
            .ok_or_else(|| CliError::usage(format!("trace metadata lacks `{key}`")))
    };
    let bad = |key: &str, e: &dyn std::fmt::Display| CliError::usage(format!("trace metadata `{key}`: {e}"));
    let num = |key: &str, v: &str| v.parse::<f64>().map_err(|e| bad(key, &e));
    let rule = get("rule")?;
    let c = get("c")?;
    let lipschitz = get("lipschitz")?;
    let blocks = get("lipschitz_blocks")?;
    let seed = get("seed")?;
    Ok(TraceMeta {
        rule: rule.parse().map_err(|e| bad("rule", &e))?,
        c: num("c", &c)?,
        lipschitz: num("lipschitz", &lipschitz)?,
        lipschitz_blocks: blocks
            .split(';')
            .map(|b| num("lipschitz_blocks", b.trim()))
            .collect::<Result<_>>()?,
        seed: seed.parse().map_err(|e| bad("seed", &e))?,
    })
}

/// Directory of one sweep cell, e.g. `beta_0.1`.
pub fn cell_dir(beta: f64) -> String {
    format!("beta_{beta}")
}

pub const SWEEP_HEADER: &str = "beta,final_residual,fitted_rate,verdicts";

pub fn sweep_csv(outcome: &ExperimentOutcome) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for cell in &outcome.cells {
        let verdicts = cell
            .verdicts
            .iter()
            .map(|v| format!("{}={}", v.label, if v.pass { "PASS" } else { "FAIL" }))
            .collect::<Vec<_>>()
            .join(";");
        let rate = cell.fitted_rate.map(|r| r.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", cell.beta, cell.final_residual, rate, verdicts);
    }
    out
}

/// `k` followed by one residual column per `β`.
pub fn wide_plot_csv(outcome: &ExperimentOutcome) -> String {
    let mut out = String::from("k");
    for cell in &outcome.cells {
        let _ = write!(out, ",beta={}", cell.beta);
    }
    out.push('\n');
    let rows = outcome.cells.iter().map(|c| c.curve.len()).max().unwrap_or(0);
    for i in 0..rows {
        let k = outcome
            .cells
            .iter()
            .find_map(|c| c.curve.get(i))
            .map_or(i, |p| p.0);
        let _ = write!(out, "{k}");
        for cell in &outcome.cells {
            match cell.curve.get(i) {
                Some(p) => {
                    let _ = write!(out, ",{}", p.1);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Verdict lines of every cell, each block headed by a `# beta=…` comment,
/// then the ordering line or, where ordering is not gated, comments.
pub fn sweep_summary(outcome: &ExperimentOutcome) -> String {
    let mut out = String::new();
    for cell in &outcome.cells {
        let _ = writeln!(out, "# beta={}", cell.beta);
        out.push_str(&summary_text(&cell.verdicts));
    }
    if let Some(v) = &outcome.ordering {
        out.push_str(&summary_text(std::slice::from_ref(v)));
    } else if let (Some(ordered), Some(spread)) = (outcome.ordered, outcome.spread) {
        let _ = writeln!(
            out,
            "# ordering={ordered} relative_spread={spread:e} (reported, not gated)"
        );
        if outcome.config.solver == SolverKind::Stochastic {
            out.push_str("# momentum is expected to change the stochastic scheme only marginally\n");
        }
    }
    out
}

/// Every artifact as a path relative to the output directory.
pub fn render(outcome: &ExperimentOutcome) -> Vec<(PathBuf, String)> {
    let mut files = vec![
        (PathBuf::from("config.txt"), outcome.config.to_text()),
        (PathBuf::from("data.csv"), outcome.dataset.to_csv()),
        (PathBuf::from("sweep.csv"), sweep_csv(outcome)),
    ];
    if let [cell] = outcome.cells.as_slice() {
        files.extend(cell.files.iter().map(|(n, t)| (PathBuf::from(n), t.clone())));
    } else {
        for cell in &outcome.cells {
            let dir = PathBuf::from(cell_dir(cell.beta));
            files.extend(cell.files.iter().map(|(n, t)| (dir.join(n), t.clone())));
        }
        files.push((PathBuf::from("plot.csv"), wide_plot_csv(outcome)));
        files.push((PathBuf::from("summary.txt"), sweep_summary(outcome)));
    }
    if outcome.config.svg {
        let lines: Vec<(String, Vec<(usize, f64)>)> = outcome
            .cells
            .iter()
            .map(|c| (format!("β = {}", c.beta), c.curve.clone()))
            .collect();
        files.push((PathBuf::from("plot.svg"), crate::svg::line_chart(&lines)));
    }
    files
}

pub fn write_outcome(out: &Path, outcome: &ExperimentOutcome) -> Result<()> {
    for (rel, text) in render(outcome) {
        let path = out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
    }
    Ok(())
}
